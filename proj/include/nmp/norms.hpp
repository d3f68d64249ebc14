#pragma once

// Volume-normalized L^p measurement vocabulary: ||u||*_p, averages,
// positive/negative parts, essential supremum (= node maximum), and the
// starred Hoelder pairing.

#include <limits>
#include <utility>

#include "nmp/model.hpp"

namespace nmp {

constexpr double kInfExponent = std::numeric_limits<double>::infinity();

// (1/vol) sum_i w_i u_i
double average(const ScalarField& u);

// ((1/vol) sum_i w_i |u_i|^p)^(1/p); p = inf gives the node max of |u|.
double norm_star(const ScalarField& u, double p);

// Unnormalized (sum_i w_i |u_i|^p)^(1/p).
double norm_lp(const ScalarField& u, double p);

// Starred norm of the pointwise Euclidean magnitude |Phi|.
double norm_star_vec(const VectorField& phi, double p);

// u+ = max(u,0), u- = min(u,0); u+ + u- = u pointwise.
std::pair<ScalarField, ScalarField> pos_neg_parts(const ScalarField& u);

// Discrete essential supremum: the (signed) node maximum.
double ess_sup(const ScalarField& u);
double ess_sup_abs(const ScalarField& u);

struct NormReport {
    double p = 2.0;
    bool starred = true;
    double value = 0.0;
};

NormReport norm_report(const ScalarField& u, double p, bool starred);

// Returns (||f1 f2||*_1, ||f1||*_p ||f2||*_q) for conjugate exponents.
std::pair<double, double> holder_star(const ScalarField& f1, const ScalarField& f2,
                                      double p, double q);

}  // namespace nmp
