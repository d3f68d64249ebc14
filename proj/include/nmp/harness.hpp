#pragma once

// Randomized experiment orchestration: deterministic field generators,
// model-spec parsing, the verification suite, JSON-lines persistence,
// report rendering, and regression baselines.
//
// Determinism contract: the per-trial seed is hash(base_seed, check_id,
// trial_index), so trials are independent of execution order and a rerun
// with the same config reproduces every record except the wall-time field.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "nmp/isoperimetric.hpp"
#include "nmp/model.hpp"
#include "nmp/record.hpp"

namespace nmp {

// Band-limited random field: iid standard normal coefficients on modes
// 1..band_limit (plus mode 0 unless zero_mean).
ScalarField random_field(const ModelPtr& model, Index band_limit, std::uint64_t seed,
                         bool zero_mean = true);

// Torus: independent band-limited components per axis; zonal sphere: the
// gradient of a random potential (radial fields must vanish at the poles);
// graphs: the zero field.
VectorField random_vector_field(const ModelPtr& model, Index band_limit, std::uint64_t seed);

// Model spec mini-grammar: torus:n:m:L | sphere3:mtheta | graph:<path>.
// graph accepts a JSON file ({"n_intrinsic": 3, "masses": [...],
// "edges": [[i,j,c], ...]}) or a builtin: k4, complete:N, cycle:N,
// dumbbell:A:B, ring:N:chords.
ModelPtr parse_model_spec(const std::string& spec);

ModelPtr load_graph_file(const std::filesystem::path& path);

// Deterministic pseudo-random connected graph (ring plus chords), used by
// the Green-oracle fleet.
ModelPtr random_connected_graph(Index nodes, Index chords, std::uint64_t seed,
                                int n_intrinsic = 3);

struct SuiteConfig {
    std::vector<std::string> model_specs{"torus:3:8:1"};
    int trials = 20;
    std::uint64_t seed = 1;
    std::vector<double> p_exponents{2.0};
    bool cstar_auto = true;
    double cstar_fixed = 0.0;
    double inflate = 1.5;       // estimator-shortfall triage factor
    Index band_limit = 16;
    double t_kernel = 0.05;     // (t, s) for the kernel identity records
    double s_kernel = 0.05;
    std::vector<double> cstar_grid_factors{0.5, 0.75, 1.0, 1.25, 1.5};
    std::string out_dir = "suite-out";
};

// Plain-text "key = value" config; '#' starts a comment. Keys: models,
// trials, seed, pexp, cstar (auto | <value>), inflate, band_limit,
// t_kernel, s_kernel, cstar_grid, out.
SuiteConfig parse_suite_config(std::istream& in);
SuiteConfig parse_suite_config_file(const std::filesystem::path& path);

// Runs every check of the kernels/solver/isoperimetric modules per model
// and exponent; one record per (check, trial), ordered by (check, trial).
std::vector<VerificationRecord> run_suite(const SuiteConfig& config);

void write_records_jsonl(const std::vector<VerificationRecord>& records,
                         const std::filesystem::path& path);
std::vector<VerificationRecord> read_records_jsonl(const std::filesystem::path& path);

// records.jsonl (when not already on disk), report.csv, summary.md and
// series/*.tsv under out_dir.
void render_report(const std::vector<VerificationRecord>& records,
                   const std::filesystem::path& out_dir);

// Min slack per check against a stored baseline. Writes the baseline on
// first use; afterwards returns the worst relative drift observed.
struct BaselineDrift {
    bool baseline_created = false;
    double worst_drift = 0.0;
    std::string worst_check;
};

BaselineDrift compare_to_baseline(const std::vector<VerificationRecord>& records,
                                  const std::filesystem::path& baseline_path);

}  // namespace nmp
