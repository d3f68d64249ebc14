// End-to-end coverage of the nmplab binary: every subcommand, exit codes,
// and JSON output keys. The binary path arrives via the NMPLAB_BIN
// environment variable set by CTest.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string out;
};

RunResult run_cli(const std::string& args) {
    const char* bin = std::getenv("NMPLAB_BIN");
    REQUIRE(bin != nullptr);
    std::string cmd = std::string(bin) + " " + args + " 2>/dev/null";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult res;
    std::array<char, 4096> buf;
    size_t got;
    while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) res.out.append(buf.data(), got);
    int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

}  // namespace

TEST_CASE("help and usage errors") {
    CHECK(run_cli("--help").exit_code == 0);
    RunResult help = run_cli("model --help");
    CHECK(help.exit_code == 0);
    CHECK(help.out.find("--spec") != std::string::npos);

    CHECK(run_cli("model --bogus-flag 3").exit_code == 2);
    CHECK(run_cli("").exit_code == 2);                         // subcommand required
    CHECK(run_cli("model --spec torus:9:9:1").exit_code == 2); // bad spec
    CHECK(run_cli("constants --n 3 --p 1.2").exit_code == 2);  // p <= n/2
}

TEST_CASE("model subcommand") {
    RunResult res = run_cli("model --spec torus:3:6:1 --json");
    CHECK(res.exit_code == 0);
    json j = json::parse(res.out);
    CHECK(j["nodes"] == 216);
    CHECK(j["volume"] == 1.0);
    CHECK(j["kind"] == "torus");
    CHECK(j["gram_residual"].get<double>() <= 1e-12);

    // cache write + inspect
    fs::path cache = fs::temp_directory_path() / "nmp_cli_model.nmpm";
    CHECK(run_cli("model --spec graph:k4 --cache " + cache.string()).exit_code == 0);
    RunResult ins = run_cli("model --inspect " + cache.string() + " --json");
    CHECK(ins.exit_code == 0);
    json ji = json::parse(ins.out);
    CHECK(ji["nodes"] == 4);
    CHECK(ji["lambda1"].get<double>() == doctest::Approx(4.0));
    fs::remove(cache);
}

TEST_CASE("constants subcommand") {
    RunResult res = run_cli("constants --n 3 --p 2 --cstar 1 --json");
    CHECK(res.exit_code == 0);
    json j = json::parse(res.out);
    CHECK(j["C1"] == 4.0);
    CHECK(j["gamma0"] == 3.0);
    CHECK(j["ratio"] == 1.5);
    for (const char* key : {"A", "A_tail_bound", "C2", "C0n", "coef_f", "coef_phi", "degenerate"})
        CHECK(j.contains(key));

    // the text form prints a key-value table plus one JSON object line
    RunResult text = run_cli("constants --n 3 --p 2 --cstar 1");
    CHECK(text.exit_code == 0);
    CHECK(text.out.find("C1 = 4") != std::string::npos);
    auto last_open = text.out.rfind('{');
    REQUIRE(last_open != std::string::npos);
    json tail = json::parse(text.out.substr(last_open));
    CHECK(tail["C1"] == 4.0);
}

TEST_CASE("green subcommand") {
    RunResult ident = run_cli("green --model graph:k4 --check identities --json");
    CHECK(ident.exit_code == 0);

    RunResult bound = run_cli("green --model torus:3:6:1 --check bound --cstar auto --json");
    CHECK(bound.exit_code == 0);

    fs::path blk = fs::temp_directory_path() / "nmp_cli_green.nmpk";
    RunResult integral = run_cli("green --model graph:k4 --check integral --tmax 10 --export " +
                                 blk.string() + " --json");
    CHECK(integral.exit_code == 0);
    CHECK(fs::exists(blk));
    fs::remove(blk);

    CHECK(run_cli("green --model graph:k4 --check bogus").exit_code == 2);
}

TEST_CASE("isoperimetric subcommand") {
    RunResult res = run_cli("isoperimetric --model torus:3:6:1 --method all --restarts 2 --iters 60 --seed 3");
    CHECK(res.exit_code == 0);
    json j = json::parse(res.out);
    CHECK(j.contains("ascent"));
    CHECK(j.contains("sweep"));
    CHECK(j.contains("slab"));
    CHECK(j["slab"]["value"].get<double>() == doctest::Approx(0.31498).epsilon(1e-4));
    CHECK(j["ascent"]["is_lower_bound"] == true);

    CHECK(run_cli("isoperimetric --model sphere3:32 --method slab").exit_code == 2);
}

TEST_CASE("verify subcommand") {
    CHECK(run_cli("verify --theorem A --model torus:3:8:1 --trials 10 --seed 4").exit_code == 0);
    CHECK(run_cli("verify --theorem moser --model torus:3:6:1 --trials 5 --seed 1").exit_code == 0);
    CHECK(run_cli("verify --theorem solution --model sphere3:32 --trials 5 --pexp 2").exit_code == 0);
    CHECK(run_cli("verify --theorem green --model torus:3:6:1").exit_code == 0);

    RunResult js = run_cli("verify --theorem A --model torus:3:6:1 --trials 2 --json --rescale 2.0");
    CHECK(js.exit_code == 0);
    json arr = json::parse(js.out);
    REQUIRE(arr.is_array());
    bool saw_rescaled = false;
    for (const auto& rec : arr) {
        for (const char* key : {"check", "model", "seed", "lhs", "rhs", "slack", "pass"})
            CHECK(rec.contains(key));
        if (rec["check"] == "theoremA.rescaled") saw_rescaled = true;
    }
    CHECK(saw_rescaled);

    CHECK(run_cli("verify --theorem bogus --model graph:k4").exit_code == 2);
}

TEST_CASE("suite and report subcommands") {
    fs::path dir = fs::temp_directory_path() / "nmp_cli_suite";
    fs::remove_all(dir);
    fs::create_directories(dir);
    fs::path cfgfile = dir / "suite.cfg";
    {
        std::ofstream os(cfgfile);
        os << "models = torus:3:6:1, graph:k4\n"
              "trials = 2\n"
              "seed = 5\n"
              "pexp = 2\n"
              "band_limit = 8\n";
    }
    RunResult suite =
        run_cli("suite --config " + cfgfile.string() + " --out " + (dir / "out").string() + " --json");
    CHECK(suite.exit_code == 0);
    CHECK(fs::exists(dir / "out" / "records.jsonl"));
    CHECK(fs::exists(dir / "out" / "report.csv"));
    CHECK(fs::exists(dir / "out" / "summary.md"));

    RunResult report = run_cli("report --records " + (dir / "out" / "records.jsonl").string() +
                               " --out " + (dir / "rendered").string() + " --json");
    CHECK(report.exit_code == 0);
    CHECK(fs::exists(dir / "rendered" / "report.csv"));
    CHECK(fs::exists(dir / "rendered" / "series" / "slack_vs_cstar.tsv"));

    CHECK(run_cli("suite --config " + (dir / "missing.cfg").string()).exit_code == 2);
    CHECK(run_cli("report --records " + (dir / "missing.jsonl").string()).exit_code == 2);
    fs::remove_all(dir);
}
