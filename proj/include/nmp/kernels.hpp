#pragma once

// Heat kernel H(.,.,t), centered kernel G = H - 1/vol, and the Green
// function G_0 of the Laplace operator, realized as exact matrix functions
// of the discrete spectrum:
//
//   H(t) = sum_k exp(-lambda_k t) phi_k phi_k^T        (row-stochastic in w)
//   G(t) = H(t) - 1/vol                                 (w-row sums zero)
//   G_0  = sum_{k>=1} phi_k phi_k^T / lambda_k          (w-row sums zero)
//
// plus the semigroup / square-formula identity reports and the Green lower
// bound check G_0 >= -C_0(n) C*^2 / vol.

#include <filesystem>

#include "nmp/model.hpp"
#include "nmp/record.hpp"

namespace nmp {

enum class KernelKind { Heat, Centered, Green };

struct KernelMatrix {
    ModelPtr model;
    KernelKind kind = KernelKind::Heat;
    double time = 0.0;  // 0 for the Green function
    Matrix K;

    double symmetry_residual() const;  // max |K - K^T|
    // max_i |sum_j w_j K(i,j) - target|, target 1 for heat, 0 otherwise
    double row_sum_residual() const;
};

KernelMatrix heat_kernel(const ModelPtr& model, double t);
KernelMatrix centered_kernel(const ModelPtr& model, double t);
KernelMatrix green_function(const ModelPtr& model);

// Weighted kernel composition (K1 o K2)(i,j) = sum_z w_z K1(i,z) K2(z,j).
Matrix compose(const KernelMatrix& k1, const KernelMatrix& k2);

// G_0 via composite midpoint quadrature of int_0^{t_max} G(t) dt on a graded
// partition (panel boundaries t_j = t_max (j/panels)^grading) plus the
// analytic spectral tail sum_k exp(-lambda_k t_max)/lambda_k beyond t_max.
struct TimeIntegralOptions {
    double t_max = 1.0;
    int panels = 2000;
    double grading = 4.0;
    bool include_tail = true;
};

struct TimeIntegralResult {
    KernelMatrix kernel;
    // Certified entrywise bound on the quadrature error (plus the omitted
    // tail when include_tail = false).
    double error_bound = 0.0;
};

TimeIntegralResult green_by_time_integral(const ModelPtr& model, const TimeIntegralOptions& opts);

struct KernelIdentityReport {
    double t = 0.0, s = 0.0;
    double semigroup_residual = 0.0;      // G(t+s) vs G(s) o G(t)
    double square_residual = 0.0;         // G(x,x,t) vs int G(x,y,t/2)^2 dy
    double symmetry_residual = 0.0;
    double centering_residual = 0.0;      // w-row sums of G(t)
    double stochasticity_residual = 0.0;  // w-row sums of H(t) vs 1
    // Most negative H(t) entry. Strictly positive in the continuum; sampled
    // bases may dip a hair below zero at small t, so it is recorded rather
    // than folded into max().
    double heat_min_entry = 0.0;
    double max() const;
};

KernelIdentityReport kernel_identities(const ModelPtr& model, double t, double s);

// Checks min_{i != j} G_0 >= -C_0(n) Cstar^2 / vol. Recorded with
// lhs = -min_offdiag(G_0) and rhs = C_0(n) Cstar^2 / vol so that pass is
// lhs <= rhs as for every other record.
VerificationRecord green_lower_bound_check(const ModelPtr& model, double cstar,
                                           std::string cstar_provenance = {});

// --- kernel export block (magic "NMPK1") ----------------------------------
// Layout after the magic: node count, kind code (0 heat, 1 centered,
// 2 green), time, matrix row-major; all little-endian 64-bit floats.

void write_kernel_block(const KernelMatrix& kernel, const std::filesystem::path& path);
KernelMatrix read_kernel_block(const std::filesystem::path& path, ModelPtr model = nullptr);

}  // namespace nmp
