#pragma once

// Explicit constants of the maximum-principle estimates, assembled from
// (n, p, C*) with C* the volume-normalized Neumann isoperimetric constant:
//
//   C_1      = 2(n-1)/(n-2) C*
//   gamma_0  = 1 + (n(p-2) + 2p)/((n-2)p),   gamma_k = gamma_0 r^k,
//   r        = n(p-1)/((n-2)p)                         (> 1 for p > n/2)
//   A_gamma  = C* (n-1)(gamma+1)/(n-2) sqrt((gamma+2)/gamma)
//   A        = prod_{i>=1} (A_{gamma_i - 1} + sqrt 2)^{2/gamma_i}
//   C_2      = A C_1 [1 + 2 max(C_1,1)(C_1 + sqrt 2)]
//   C_0(n)   = 8 n^2 (n-1)^2/(n-2)^3 ((n-2)/2)^{4/n}
//
// The infinite product is truncated with a certified tail bound on log A:
// every omitted factor exceeds 1, so the partial product is a lower bound
// and log A lies within [partial, partial + tail_bound].

#include <vector>

#include "nmp/errors.hpp"

namespace nmp {

// C_0(n); requires n >= 3 (the formula degenerates at n = 2).
double c0_constant(int n);

struct GammaSchedule {
    double gamma0 = 0.0;
    double ratio = 0.0;  // r = n(p-1)/((n-2)p)
    // Reference truncation depth: smallest k whose certified tail bound on
    // log A (evaluated at C* = 1) is <= tol.
    int k_star = 0;
};

GammaSchedule gamma_schedule(int n, double p, double tol = 1e-9);

// A_gamma; requires gamma >= 1.
double a_gamma(int n, double cstar, double gamma);

struct ProductA {
    double value = 0.0;      // exp(log_value), lower bound of the true A
    double log_value = 0.0;  // truncated sum of (2/gamma_i) log(A_{gamma_i-1} + sqrt 2)
    double tail_bound = 0.0; // certified bound on the omitted log-tail
    int terms = 0;
};

ProductA product_A(int n, double p, double cstar, double tol);

// Partial products A_k after k factors, for diagnostics/plot data.
std::vector<double> product_A_partials(int n, double p, double cstar, int k_max);

struct ConstantSet {
    int n = 3;
    double p = 2.0;
    double cstar = 1.0;
    double c1 = 0.0;
    double gamma0 = 0.0;
    double ratio = 0.0;
    double big_a = 0.0;
    double a_tail_bound = 0.0;
    int a_terms = 0;
    double c2 = 0.0;
    double c0n = 0.0;
    double coef_f = 0.0;    // C_0(n) C*^2 + 2 C_2
    double coef_phi = 0.0;  // C_2
    // C* = 0 collapses every constant; impossible on a connected model and
    // flagged so reports can call it out.
    bool degenerate = false;
};

ConstantSet constant_set(int n, double p, double cstar, double tol = 1e-9);

}  // namespace nmp
