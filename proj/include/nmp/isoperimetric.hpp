#pragma once

// Lower-bound estimators for the volume-normalized Neumann isoperimetric
// constant C*:
//
//  - variational ascent of the starred Sobolev ratio
//        S* = sup ||u - u_M||*_{2n/(n-2)} / ||grad u||*_2,
//    reported as Chat = S* (n-2)/(4(n-1)) so the Poincare-Sobolev
//    inequality holds with equality for the maximizer;
//  - Cheeger-style sweep cuts over eigenvector level sets, ratio
//    vol(Omega)^{(n-1)/n} / Area(boundary) over vol(Omega) <= vol/2,
//    times vol^{1/n};
//  - the analytic half-slab candidate on tori.
//
// All computed estimates are lower bounds of the true discrete constants;
// the true supremum is a nonconvex maximization and upper bounds are out of
// reach here. Downstream inequality checks report which side moved when a
// violation appears (estimator shortfall vs genuine failure).

#include <cstdint>
#include <string>

#include "nmp/model.hpp"

namespace nmp {

enum class CstarMethod { Variational, Sweep, AnalyticSlab, User };

std::string to_string(CstarMethod method);

struct CstarEstimate {
    double value = 0.0;
    CstarMethod method = CstarMethod::User;
    bool is_lower_bound = true;
    // diagnostics
    int restarts = 0;
    double best_ratio = 0.0;  // S* for ascent, best sweep ratio otherwise
    int iterations = 0;
    bool stagnation = false;
};

// Multi-start projected gradient ascent (mean projected out, gradient norm
// renormalized each step, backtracking halving). Deterministic: designed
// starts (bumps, spike, phi_1) are always included and random restarts are
// seeded per restart index.
CstarEstimate sobolev_ratio_ascent(const ModelPtr& model, int restarts, int iters,
                                   double step, std::uint64_t seed = 0);

// Sweep cuts of the leading eigenvectors (plus mixed pairs inside degenerate
// clusters). Supported on tori (axis-aligned cell faces) and graphs (cut
// conductance); the zonal model has no boundary-area notion here.
CstarEstimate cheeger_sweep(const ModelPtr& model);

// Exact half-slab ratio 2^{-(n-1)/n}/2 * vol^{1/n} on tori.
CstarEstimate slab_candidate(const ModelPtr& model);

struct CstarPolicy {
    bool automatic = true;  // max over applicable estimators
    double fixed_value = 0.0;
    int ascent_restarts = 8;
    int ascent_iters = 250;
    double ascent_step = 0.3;
    std::uint64_t seed = 0;
};

struct CstarResolution {
    double value = 0.0;
    std::string provenance;  // e.g. "auto:sweep=0.315,ascent=0.051 -> 0.315"
};

CstarResolution resolve_cstar(const ModelPtr& model, const CstarPolicy& policy);

}  // namespace nmp
