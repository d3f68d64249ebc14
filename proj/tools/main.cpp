// nmplab: spectral-model verification lab for Neumann-type maximum
// principles. Subcommands: model, constants, green, isoperimetric, verify,
// suite, report.
//
// Exit codes: 0 success / all checks pass, 1 genuine inequality violation,
// 2 usage error, 3 numerical failure.

#include <charconv>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nmp/constants.hpp"
#include "nmp/harness.hpp"
#include "nmp/isoperimetric.hpp"
#include "nmp/kernels.hpp"
#include "nmp/model.hpp"
#include "nmp/norms.hpp"
#include "nmp/rng.hpp"
#include "nmp/solver.hpp"

namespace {

using nlohmann::json;

std::string fmt(double x) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

nmp::CstarResolution resolve_cstar_flag(const nmp::ModelPtr& model, const std::string& flag,
                                        std::uint64_t seed) {
    nmp::CstarPolicy policy;
    policy.seed = seed;
    if (flag == "auto") {
        policy.automatic = true;
    } else {
        policy.automatic = false;
        policy.fixed_value = std::stod(flag);
    }
    return nmp::resolve_cstar(model, policy);
}

json model_summary(const nmp::SpectralModel& model) {
    json j;
    j["id"] = model.id;
    j["kind"] = nmp::to_string(model.kind);
    j["n"] = model.n_intrinsic;
    j["nodes"] = model.node_count();
    j["volume"] = model.volume;
    j["lambda1"] = model.lambda1();
    if (model.diameter) j["diameter"] = *model.diameter;
    nmp::Matrix gram = model.eigenbasis.transpose() * model.weights.asDiagonal() * model.eigenbasis;
    gram -= nmp::Matrix::Identity(model.node_count(), model.node_count());
    j["gram_residual"] = gram.cwiseAbs().maxCoeff();
    return j;
}

json constant_set_json(const nmp::ConstantSet& cs) {
    json j;
    j["n"] = cs.n;
    j["p"] = cs.p;
    j["cstar"] = cs.cstar;
    j["C1"] = cs.c1;
    j["gamma0"] = cs.gamma0;
    j["ratio"] = cs.ratio;
    j["A"] = cs.big_a;
    j["A_tail_bound"] = cs.a_tail_bound;
    j["A_terms"] = cs.a_terms;
    j["C2"] = cs.c2;
    j["C0n"] = cs.c0n;
    j["coef_f"] = cs.coef_f;
    j["coef_phi"] = cs.coef_phi;
    j["degenerate"] = cs.degenerate;
    return j;
}

json estimate_json(const nmp::CstarEstimate& est) {
    json j;
    j["value"] = est.value;
    j["method"] = nmp::to_string(est.method);
    j["is_lower_bound"] = est.is_lower_bound;
    j["best_ratio"] = est.best_ratio;
    j["restarts"] = est.restarts;
    j["iterations"] = est.iterations;
    j["stagnation"] = est.stagnation;
    return j;
}

void print_records(const std::vector<nmp::VerificationRecord>& records, bool as_json,
                   std::ostream& os) {
    if (as_json) {
        json arr = json::array();
        for (const auto& rec : records) arr.push_back(rec.to_json());
        os << arr.dump(2) << "\n";
        return;
    }
    for (const auto& rec : records) {
        os << (rec.pass ? "PASS " : "FAIL ") << rec.check_id << " model=" << rec.model_id
           << " seed=" << rec.seed << " lhs=" << fmt(rec.lhs) << " rhs=" << fmt(rec.rhs)
           << " slack=" << fmt(rec.slack) << "\n";
    }
}

int records_exit_code(const std::vector<nmp::VerificationRecord>& records) {
    int code = 0;
    for (const auto& rec : records) {
        auto it = rec.details.find("status");
        if (it != rec.details.end() && it->second == 3) return 3;
        if (rec.details.count("diagnostic")) continue;
        if (!rec.pass) code = 1;
    }
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nmplab: discrete spectral verification of Neumann-type maximum principles"};
    app.require_subcommand(1);
    app.fallthrough();
    bool as_json = false;
    app.add_flag("--json", as_json, "emit JSON instead of text on every subcommand");

    // --- model ---
    auto* cmd_model = app.add_subcommand("model", "build a model and print its summary");
    std::string model_spec = "torus:3:8:1";
    std::string cache_path, inspect_path;
    cmd_model->add_option("--spec", model_spec, "model spec (torus:n:m:L | sphere3:m | graph:<path>)");
    cmd_model->add_option("--cache", cache_path, "write the NMPM1 cache block to this file");
    cmd_model->add_option("--inspect", inspect_path, "print the header of an existing NMPM1 file");

    // --- constants ---
    auto* cmd_constants = app.add_subcommand("constants", "evaluate the constant chain for (n,p,C*)");
    int cn = 3;
    double cp = 2.0, ccstar = 1.0, ctol = 1e-9;
    cmd_constants->add_option("--n", cn, "dimension n >= 3");
    cmd_constants->add_option("--p", cp, "exponent p > n/2");
    cmd_constants->add_option("--cstar", ccstar, "volume-normalized isoperimetric constant");
    cmd_constants->add_option("--tol", ctol, "certified tail tolerance on log A");

    // --- green ---
    auto* cmd_green = app.add_subcommand("green", "Green function identities, lower bound, export");
    std::string gspec = "torus:3:8:1", gcheck = "identities", gcstar = "auto", gexport;
    double gt = 0.05, gs = 0.05, gtmax = 0.0, ggrading = 4.0;
    int gpanels = 2000;
    cmd_green->add_option("--model", gspec, "model spec");
    cmd_green->add_option("--check", gcheck, "identities | bound | integral");
    cmd_green->add_option("--t", gt, "kernel time t");
    cmd_green->add_option("--s", gs, "kernel time s");
    cmd_green->add_option("--cstar", gcstar, "auto or a fixed value (for --check bound)");
    cmd_green->add_option("--export", gexport, "write the G_0 NMPK1 block to this file");
    cmd_green->add_option("--tmax", gtmax, "time-integral upper limit (default 40/lambda_1)");
    cmd_green->add_option("--panels", gpanels, "time-integral quadrature panels");
    cmd_green->add_option("--grading", ggrading, "time-integral mesh grading exponent");

    // --- isoperimetric ---
    auto* cmd_iso = app.add_subcommand("isoperimetric", "estimate C* on a model");
    std::string ispec = "torus:3:8:1", imethod = "all";
    int irestarts = 12, iiters = 300;
    double istep = 0.3;
    std::uint64_t iseed = 1;
    cmd_iso->add_option("--model", ispec, "model spec");
    cmd_iso->add_option("--method", imethod, "ascent | sweep | slab | all");
    cmd_iso->add_option("--restarts", irestarts, "random restarts for the ascent");
    cmd_iso->add_option("--iters", iiters, "ascent iterations per start");
    cmd_iso->add_option("--step", istep, "initial ascent step");
    cmd_iso->add_option("--seed", iseed, "base seed");

    // --- verify ---
    auto* cmd_verify = app.add_subcommand("verify", "randomized maximum-principle checks");
    std::string vtheorem = "A", vspec = "torus:3:8:1", vcstar = "auto";
    int vtrials = 10;
    std::uint64_t vseed = 1;
    double vp = 2.0;
    std::optional<double> vrescale;
    cmd_verify->add_option("--theorem", vtheorem, "moser | solution | A | green");
    cmd_verify->add_option("--model", vspec, "model spec");
    cmd_verify->add_option("--trials", vtrials, "number of randomized trials");
    cmd_verify->add_option("--seed", vseed, "base seed");
    cmd_verify->add_option("--pexp", vp, "exponent p > n/2");
    cmd_verify->add_option("--cstar", vcstar, "auto or a fixed value");
    cmd_verify->add_option("--rescale", vrescale,
                           "also report the Theorem A sides under g -> alpha g");

    // --- suite ---
    auto* cmd_suite = app.add_subcommand("suite", "run the full verification suite from a config");
    std::string sconfig, sout;
    cmd_suite->add_option("--config", sconfig, "key = value config file")->required();
    cmd_suite->add_option("--out", sout, "output directory (overrides config)");

    // --- report ---
    auto* cmd_report = app.add_subcommand("report", "render CSV/markdown/series from records");
    std::string rrecords, rout = "report-out";
    cmd_report->add_option("--records", rrecords, "records.jsonl path")->required();
    cmd_report->add_option("--out", rout, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*cmd_model) {
            if (!inspect_path.empty()) {
                nmp::ModelCacheBlock blk = nmp::read_model_cache(inspect_path);
                json j;
                j["nodes"] = blk.weights.size();
                j["n"] = blk.n_intrinsic;
                j["volume"] = blk.volume;
                if (blk.has_diameter) j["diameter"] = blk.diameter;
                j["lambda1"] = blk.eigenvalues.size() > 1 ? blk.eigenvalues[1] : 0.0;
                std::cout << (as_json ? j.dump(2) : j.dump(2)) << "\n";
                return 0;
            }
            nmp::ModelPtr model = nmp::parse_model_spec(model_spec);
            if (!cache_path.empty()) nmp::write_model_cache(*model, cache_path);
            json j = model_summary(*model);
            if (as_json) {
                std::cout << j.dump(2) << "\n";
            } else {
                std::cout << "model " << j["id"].get<std::string>() << ": nodes=" << j["nodes"]
                          << " volume=" << fmt(j["volume"].get<double>())
                          << " lambda1=" << fmt(j["lambda1"].get<double>())
                          << " gram_residual=" << fmt(j["gram_residual"].get<double>()) << "\n";
            }
            return 0;
        }

        if (*cmd_constants) {
            nmp::ConstantSet cs = nmp::constant_set(cn, cp, ccstar, ctol);
            json j = constant_set_json(cs);
            if (as_json) {
                std::cout << j.dump(2) << "\n";
            } else {
                for (auto& [key, value] : j.items())
                    std::cout << key << " = "
                              << (value.is_number_float() ? fmt(value.get<double>()) : value.dump())
                              << "\n";
                std::cout << j.dump() << "\n";
            }
            return 0;
        }

        if (*cmd_green) {
            nmp::ModelPtr model = nmp::parse_model_spec(gspec);
            std::vector<nmp::VerificationRecord> records;
            json extra;
            if (gcheck == "identities") {
                nmp::KernelIdentityReport rep = nmp::kernel_identities(model, gt, gs);
                extra["semigroup"] = rep.semigroup_residual;
                extra["square"] = rep.square_residual;
                extra["symmetry"] = rep.symmetry_residual;
                extra["centering"] = rep.centering_residual;
                extra["stochasticity"] = rep.stochasticity_residual;
                const double tol = 1e-10;
                records.push_back(nmp::make_record("kernel.identities.max", model->id, 0,
                                                   rep.max(), tol, 0.0));
            } else if (gcheck == "bound") {
                auto cstar = resolve_cstar_flag(model, gcstar, 1);
                records.push_back(nmp::green_lower_bound_check(model, cstar.value, cstar.provenance));
            } else if (gcheck == "integral") {
                nmp::TimeIntegralOptions opts;
                opts.t_max = gtmax > 0 ? gtmax : 40.0 / model->lambda1();
                opts.panels = gpanels;
                opts.grading = ggrading;
                nmp::TimeIntegralResult res = nmp::green_by_time_integral(model, opts);
                nmp::KernelMatrix g0 = nmp::green_function(model);
                double diff = (res.kernel.K - g0.K).cwiseAbs().maxCoeff();
                extra["max_abs_difference"] = diff;
                extra["error_bound"] = res.error_bound;
                records.push_back(nmp::make_record("green.time_integral", model->id, 0, diff, 1e-6, 0.0));
            } else {
                throw nmp::UsageError("green: unknown --check '" + gcheck + "'");
            }
            if (!gexport.empty()) nmp::write_kernel_block(nmp::green_function(model), gexport);
            if (as_json && !extra.empty()) std::cout << extra.dump(2) << "\n";
            print_records(records, as_json, std::cout);
            return records_exit_code(records);
        }

        if (*cmd_iso) {
            nmp::ModelPtr model = nmp::parse_model_spec(ispec);
            json j;
            if (imethod == "ascent" || imethod == "all")
                j["ascent"] = estimate_json(nmp::sobolev_ratio_ascent(model, irestarts, iiters, istep, iseed));
            if ((imethod == "sweep" || imethod == "all") && model->kind != nmp::ModelKind::ZonalSphere)
                j["sweep"] = estimate_json(nmp::cheeger_sweep(model));
            if ((imethod == "slab" || imethod == "all") && model->kind == nmp::ModelKind::Torus)
                j["slab"] = estimate_json(nmp::slab_candidate(model));
            if (j.empty()) throw nmp::UsageError("isoperimetric: method '" + imethod +
                                                 "' not applicable to this model");
            std::cout << j.dump(2) << "\n";
            return 0;
        }

        if (*cmd_verify) {
            nmp::ModelPtr model = nmp::parse_model_spec(vspec);
            auto cstar = resolve_cstar_flag(model, vcstar, vseed);
            std::vector<nmp::VerificationRecord> records;
            nmp::Index band = std::min<nmp::Index>(16, model->mode_count() - 1);

            if (vtheorem == "green") {
                records.push_back(nmp::green_lower_bound_check(model, cstar.value, cstar.provenance));
            } else {
                nmp::KernelMatrix g0 = nmp::green_function(model);
                for (int trial = 0; trial < vtrials; ++trial) {
                    std::uint64_t seed =
                        nmp::derive_seed(vseed, "verify|" + vtheorem, static_cast<std::uint64_t>(trial));
                    if (vtheorem == "solution") {
                        nmp::ScalarField f =
                            nmp::random_field(model, band, nmp::derive_seed(seed, "f", 0), false);
                        nmp::VectorField phi =
                            nmp::random_vector_field(model, band, nmp::derive_seed(seed, "phi", 0));
                        auto rec = nmp::check_solution_bound(f, phi, vp, cstar.value, cstar.provenance);
                        rec.seed = seed;
                        records.push_back(std::move(rec));
                        continue;
                    }
                    nmp::ScalarField u = nmp::random_field(model, band, nmp::derive_seed(seed, "u", 0));
                    nmp::VectorField phi =
                        nmp::random_vector_field(model, band, nmp::derive_seed(seed, "phi", 0));
                    nmp::ScalarField sl = nmp::random_field(model, band, nmp::derive_seed(seed, "s", 0));
                    sl.values = sl.values.cwiseAbs();
                    nmp::ProblemInstance inst = nmp::generate_subsolution(u, phi, sl, vp);
                    if (vtheorem == "moser") {
                        auto rec = nmp::check_moser_bound(inst, cstar.value, nmp::average(u),
                                                          cstar.provenance);
                        rec.seed = seed;
                        records.push_back(std::move(rec));
                    } else if (vtheorem == "A") {
                        auto res = nmp::check_theorem_A(inst, cstar.value, &g0, cstar.provenance);
                        for (auto* rec : {&res.main, &res.bound_v, &res.bound_w}) {
                            rec->seed = seed;
                            records.push_back(std::move(*rec));
                        }
                        if (vrescale) {
                            auto rec = nmp::rescale_diagnostic(inst, cstar.value, *vrescale);
                            rec.seed = seed;
                            records.push_back(std::move(rec));
                        }
                    } else {
                        throw nmp::UsageError("verify: unknown --theorem '" + vtheorem + "'");
                    }
                }
            }
            print_records(records, as_json, std::cout);
            return records_exit_code(records);
        }

        if (*cmd_suite) {
            nmp::SuiteConfig cfg = nmp::parse_suite_config_file(sconfig);
            if (!sout.empty()) cfg.out_dir = sout;
            auto records = nmp::run_suite(cfg);
            std::filesystem::create_directories(cfg.out_dir);
            nmp::write_records_jsonl(records, std::filesystem::path(cfg.out_dir) / "records.jsonl");
            nmp::render_report(records, cfg.out_dir);
            int passed = 0;
            for (const auto& rec : records) passed += rec.pass ? 1 : 0;
            json j;
            j["records"] = records.size();
            j["passed"] = passed;
            j["out"] = cfg.out_dir;
            std::cout << (as_json ? j.dump(2)
                                  : "suite: " + std::to_string(passed) + "/" +
                                        std::to_string(records.size()) + " records passed, out=" +
                                        cfg.out_dir)
                      << "\n";
            return records_exit_code(records);
        }

        if (*cmd_report) {
            auto records = nmp::read_records_jsonl(rrecords);
            nmp::render_report(records, rout);
            json j;
            j["records"] = records.size();
            j["out"] = rout;
            std::cout << (as_json ? j.dump(2)
                                  : "report: " + std::to_string(records.size()) +
                                        " records rendered to " + rout)
                      << "\n";
            return 0;
        }
    } catch (const nmp::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const nmp::UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
