#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nmp/harness.hpp"
#include "nmp/norms.hpp"
#include "nmp/rng.hpp"

using namespace nmp;
namespace fs = std::filesystem;

namespace {

SuiteConfig tiny_config(const std::string& out) {
    std::istringstream in(
        "models = torus:3:6:1, sphere3:32, graph:k4\n"
        "trials = 3\n"
        "seed = 11\n"
        "pexp = 2\n"
        "band_limit = 8\n"
        "out = " + out + "\n");
    return parse_suite_config(in);
}

nlohmann::json records_digest(const std::vector<VerificationRecord>& records) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& rec : records) {
        nlohmann::json j = rec.to_json();
        j.erase("wall_time");
        arr.push_back(std::move(j));
    }
    return arr;
}

}  // namespace

TEST_CASE("random fields are deterministic and band limited") {
    ModelPtr t3 = build_torus(3, 6, 1.0);

    ScalarField a = random_field(t3, 8, 42);
    ScalarField b = random_field(t3, 8, 42);
    CHECK(a.values == b.values);  // bit identical

    // band_limit = 1: a multiple of phi_1
    ScalarField m1 = random_field(t3, 1, 7);
    Vector coeffs = t3->analyze(m1.values);
    for (Index k = 0; k < t3->mode_count(); ++k)
        if (k != 1) CHECK(std::abs(coeffs[k]) <= 1e-12 * std::abs(coeffs[1]));

    // zero mean by default, mode 0 populated on request
    CHECK(std::abs(average(random_field(t3, 8, 3))) <= 1e-12);
    CHECK(std::abs(average(random_field(t3, 8, 3, false))) > 1e-6);

    // distinct seeds decorrelate (diagnostic)
    int high = 0;
    for (std::uint64_t s = 0; s < 20; ++s) {
        ScalarField u = random_field(t3, 8, 100 + s);
        ScalarField v = random_field(t3, 8, 200 + s);
        double corr = u.values.dot(v.values) / (u.values.norm() * v.values.norm());
        if (std::abs(corr) >= 0.5) ++high;
    }
    CHECK(high <= 2);

    CHECK_THROWS_AS(random_field(t3, t3->mode_count(), 1), UsageError);
    CHECK_THROWS_AS(random_field(t3, 0, 1), UsageError);

    // vector fields: deterministic, model-appropriate shape
    VectorField vf = random_vector_field(t3, 8, 5);
    CHECK(vf.components.size() == 3);
    VectorField vz = random_vector_field(build_zonal_sphere3(32), 8, 5);
    CHECK(vz.components.size() == 1);
    CHECK(random_vector_field(parse_model_spec("graph:k4"), 2, 5).is_zero());
}

TEST_CASE("seed derivation separates streams") {
    CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
    CHECK(derive_seed(1, "a", 0) != derive_seed(1, "b", 0));
    CHECK(derive_seed(1, "a", 0) != derive_seed(2, "a", 0));
    CHECK(derive_seed(1, "a", 0) == derive_seed(1, "a", 0));
}

TEST_CASE("suite config parser") {
    std::istringstream ok(
        "# comment\n"
        "models = torus:3:6:1\n"
        "trials = 5\n"
        "cstar = 0.4\n"
        "pexp = 2, 5\n");
    SuiteConfig cfg = parse_suite_config(ok);
    CHECK(cfg.model_specs.size() == 1);
    CHECK(cfg.trials == 5);
    CHECK_FALSE(cfg.cstar_auto);
    CHECK(cfg.cstar_fixed == 0.4);
    CHECK(cfg.p_exponents == std::vector<double>{2.0, 5.0});

    std::istringstream bad_key("bogus = 1\n");
    CHECK_THROWS_AS(parse_suite_config(bad_key), UsageError);
    std::istringstream bad_trials("trials = 0\n");
    CHECK_THROWS_AS(parse_suite_config(bad_trials), UsageError);
}

TEST_CASE("model spec parsing") {
    CHECK(parse_model_spec("torus:3:6:1")->kind == ModelKind::Torus);
    CHECK(parse_model_spec("sphere3:32")->kind == ModelKind::ZonalSphere);
    CHECK(parse_model_spec("graph:dumbbell:4:4")->node_count() == 8);
    CHECK_THROWS_AS(parse_model_spec("swissroll:3"), UsageError);
    CHECK_THROWS_AS(parse_model_spec("torus:3:6"), UsageError);

    // graph JSON files round through the loader
    fs::path file = fs::temp_directory_path() / "nmp_graph_test.json";
    {
        std::ofstream os(file);
        os << R"({"n_intrinsic": 3, "masses": [1, 2, 1], "edges": [[0,1,1.0],[1,2,0.5],[2,0,2.0]]})";
    }
    ModelPtr g = parse_model_spec("graph:" + file.string());
    CHECK(g->node_count() == 3);
    CHECK(g->volume == 4.0);
    fs::remove(file);
}

TEST_CASE("suite runs and reruns identically") {
    fs::path out = fs::temp_directory_path() / "nmp_suite_test";
    fs::remove_all(out);
    SuiteConfig cfg = tiny_config(out.string());

    auto records = run_suite(cfg);
    CHECK(records.size() > 20);
    int failures = 0;
    for (const auto& rec : records)
        if (!rec.details.count("diagnostic")) failures += rec.pass ? 0 : 1;
    CHECK(failures == 0);

    // deterministic rerun modulo wall time
    auto again = run_suite(cfg);
    CHECK(records_digest(records).dump() == records_digest(again).dump());

    // JSONL round trip is lossless
    fs::create_directories(out);
    fs::path jsonl = out / "records.jsonl";
    write_records_jsonl(records, jsonl);
    auto back = read_records_jsonl(jsonl);
    CHECK(records_digest(records).dump() == records_digest(back).dump());

    // trials < 1 rejected at parse time
    SuiteConfig bad = cfg;
    bad.trials = 0;
    CHECK_THROWS_AS(run_suite(bad), UsageError);

    // p must exceed n/2 on every model
    SuiteConfig badp = cfg;
    badp.p_exponents = {1.2};
    CHECK_THROWS_AS(run_suite(badp), UsageError);

    fs::remove_all(out);
}

TEST_CASE("report rendering") {
    fs::path out = fs::temp_directory_path() / "nmp_report_test";
    fs::remove_all(out);
    SuiteConfig cfg = tiny_config(out.string());
    cfg.model_specs = {"torus:3:6:1"};
    auto records = run_suite(cfg);
    render_report(records, out);

    // CSV round-trips through re-parse
    std::ifstream csv(out / "report.csv");
    std::string header;
    std::getline(csv, header);
    CHECK(header == "check,model,seed,lhs,rhs,slack,pass,wall_time,cstar");
    size_t row = 0;
    std::string line;
    while (std::getline(csv, line)) {
        REQUIRE(row < records.size());
        std::vector<std::string> cells;
        std::string cur;
        for (char c : line) {
            if (c == ',' && cells.size() < 8) {
                cells.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        cells.push_back(cur);
        REQUIRE(cells.size() == 9);
        auto parse = [](const std::string& s) {
            double x = 0;
            auto res = std::from_chars(s.data(), s.data() + s.size(), x);
            REQUIRE(res.ec == std::errc{});
            return x;
        };
        CHECK(cells[0] == records[row].check_id);
        CHECK(parse(cells[3]) == records[row].lhs);
        CHECK(parse(cells[4]) == records[row].rhs);
        CHECK(parse(cells[5]) == records[row].slack);
        ++row;
    }
    CHECK(row == records.size());

    // summary and series exist; the green slack series grows with Cstar
    CHECK(fs::exists(out / "summary.md"));
    std::ifstream tsv(out / "series" / "slack_vs_cstar.tsv");
    std::getline(tsv, line);  // header
    double prev_c = -1, prev_s = -1;
    int rows = 0;
    while (std::getline(tsv, line)) {
        std::istringstream ls(line);
        double c, s;
        ls >> c >> s;
        if (rows > 0) {
            CHECK(c >= prev_c);
            CHECK(s >= prev_s * (1.0 - 1e-12));
        }
        prev_c = c;
        prev_s = s;
        ++rows;
    }
    CHECK(rows == static_cast<int>(cfg.cstar_grid_factors.size()));
    CHECK(fs::exists(out / "series" / "a_vs_depth.tsv"));

    // empty record set still renders headers
    fs::path empty_dir = out / "empty";
    render_report({}, empty_dir);
    std::ifstream ecsv(empty_dir / "report.csv");
    std::getline(ecsv, line);
    CHECK(line == "check,model,seed,lhs,rhs,slack,pass,wall_time,cstar");
    CHECK_FALSE(std::getline(ecsv, line));

    fs::remove_all(out);
}

TEST_CASE("baseline drift tracking") {
    fs::path base = fs::temp_directory_path() / "nmp_baseline_test.json";
    fs::remove(base);

    VerificationRecord rec = make_record("demo.check", "m", 1, 1.0, 3.0, 0.0);
    BaselineDrift first = compare_to_baseline({rec}, base);
    CHECK(first.baseline_created);
    CHECK(first.worst_drift == 0.0);

    BaselineDrift same = compare_to_baseline({rec}, base);
    CHECK_FALSE(same.baseline_created);
    CHECK(same.worst_drift == 0.0);

    VerificationRecord moved = make_record("demo.check", "m", 1, 1.0, 3.3, 0.0);
    BaselineDrift drift = compare_to_baseline({moved}, base);
    CHECK(drift.worst_drift == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(drift.worst_check == "demo.check|m");

    fs::remove(base);
}

TEST_CASE("random connected graphs are usable") {
    for (std::uint64_t s = 0; s < 3; ++s) {
        ModelPtr g = random_connected_graph(60, 120, s);
        CHECK(g->node_count() == 60);
        CHECK(g->lambda1() > 1e-6);
    }
    CHECK_THROWS_AS(random_connected_graph(2, 0, 1), UsageError);
}
