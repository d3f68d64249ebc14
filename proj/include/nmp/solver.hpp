#pragma once

// The auxiliary equation Delta v = (f - f_M) + div Phi with v_M = 0, solved
// two independent ways (spectral coefficient inversion and conjugate-
// direction descent on the Dirichlet energy functional), subsolution
// instances Delta u = f + div Phi + s with slack s >= 0, and the three
// maximum-principle checks:
//
//   moser.sup      sup(u - lambda) <= A C1 (||f-||*_p + ||Phi||*_2p)
//                                    + A (C1 + sqrt 2) ||(u-lambda)+||*_2
//   solution.sup   sup|u - u_M|    <= C2 (||f||*_p + ||Phi||*_2p)
//   theoremA.sup   sup u <= u_M + coef_f ||f-||*_p + coef_phi ||Phi||*_2p
//
// theoremA additionally replays the proof pipeline: v solves the auxiliary
// equation for f-, w = u - v, sigma = min off-diagonal of G_0, and the
// intermediate bounds (v) and (w) are checked individually.

#include <cstdint>
#include <optional>

#include "nmp/kernels.hpp"
#include "nmp/model.hpp"
#include "nmp/record.hpp"

namespace nmp {

struct ProblemInstance {
    ModelPtr model;
    ScalarField f;
    VectorField phi;
    ScalarField u;
    ScalarField slack;  // s >= 0 pointwise
    double p = 2.0;
    double lambda = 0.0;  // default shift: u_M
};

// Unique mean-zero weak solution of Delta v = (f - f_M) + div Phi.
ScalarField solve_poisson(const ScalarField& f, const VectorField& phi);

// Dirichlet energy functional whose Euler-Lagrange equation is the
// auxiliary equation; F(0) = 0 and the spectral solution is its minimizer.
double energy_functional(const ScalarField& v, const ScalarField& f, const VectorField& phi);

struct EnergyDescentResult {
    ScalarField v;
    int iterations = 0;
    bool converged = false;
    double objective = 0.0;
};

// Mean-zero conjugate-direction descent on the energy functional.
EnergyDescentResult minimize_energy(const ScalarField& f, const VectorField& phi, int max_iters);

// Builds f := Delta u - div Phi - s, so Delta u >= f + div Phi holds with
// equality plus the given slack.
ProblemInstance generate_subsolution(const ScalarField& u, const VectorField& phi,
                                     const ScalarField& slack, double p);

// Largest violation of the weak form over nonnegative test fields phi_t:
// integral grad u . grad phi_t + integral f phi_t - integral Phi . grad phi_t
// must be <= 0 for a subsolution.
double weak_form_violation(const ProblemInstance& inst, int n_tests, std::uint64_t seed);

VerificationRecord check_moser_bound(const ProblemInstance& inst, double cstar, double lambda,
                                     std::string cstar_provenance = {});

VerificationRecord check_solution_bound(const ScalarField& f, const VectorField& phi, double p,
                                        double cstar, std::string cstar_provenance = {});

struct TheoremAResult {
    VerificationRecord main;     // theoremA.sup
    VerificationRecord bound_v;  // theoremA.v
    VerificationRecord bound_w;  // theoremA.w
    double sigma = 0.0;          // min off-diagonal of G_0
};

// green may pass a precomputed G_0 kernel for the instance's model.
TheoremAResult check_theorem_A(const ProblemInstance& inst, double cstar,
                               const KernelMatrix* green = nullptr,
                               std::string cstar_provenance = {});

// Reports both sides of the Theorem A estimate for the conformally rescaled
// metric g -> alpha g: C* -> sqrt(alpha) C*, ||f-||*_p -> ||f-||*_p / alpha,
// ||Phi||*_2p -> ||Phi||*_2p / sqrt(alpha).
VerificationRecord rescale_diagnostic(const ProblemInstance& inst, double cstar, double alpha);

}  // namespace nmp
