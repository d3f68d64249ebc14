#include "nmp/norms.hpp"

#include <cmath>

namespace nmp {

namespace {

// Factor out the max so |u/M|^p never overflows for large p.
double weighted_p_mean_root(const Vector& absvals, const Vector& w, double vol, double p) {
    double m = absvals.maxCoeff();
    if (m <= 0.0) return 0.0;
    double acc = 0.0;
    for (Index i = 0; i < absvals.size(); ++i)
        acc += w[i] * std::pow(absvals[i] / m, p);
    return m * std::pow(acc / vol, 1.0 / p);
}

}  // namespace

double average(const ScalarField& u) {
    return u.model->weights.dot(u.values) / u.model->volume;
}

double norm_star(const ScalarField& u, double p) {
    if (std::isinf(p)) return ess_sup_abs(u);
    if (!(p >= 1.0)) throw UsageError("norm_star: p must be >= 1");
    return weighted_p_mean_root(u.values.cwiseAbs(), u.model->weights, u.model->volume, p);
}

double norm_lp(const ScalarField& u, double p) {
    if (std::isinf(p)) return ess_sup_abs(u);
    if (!(p >= 1.0)) throw UsageError("norm_lp: p must be >= 1");
    return weighted_p_mean_root(u.values.cwiseAbs(), u.model->weights, 1.0, p);
}

double norm_star_vec(const VectorField& phi, double p) {
    if (!(p >= 1.0) && !std::isinf(p)) throw UsageError("norm_star_vec: p must be >= 1");
    Vector mag = phi.pointwise_norm();
    if (std::isinf(p)) return mag.size() ? mag.maxCoeff() : 0.0;
    return weighted_p_mean_root(mag, phi.model->weights, phi.model->volume, p);
}

std::pair<ScalarField, ScalarField> pos_neg_parts(const ScalarField& u) {
    Vector up = u.values.cwiseMax(0.0);
    Vector un = u.values.cwiseMin(0.0);
    return {ScalarField{u.model, std::move(up)}, ScalarField{u.model, std::move(un)}};
}

double ess_sup(const ScalarField& u) { return u.values.maxCoeff(); }

double ess_sup_abs(const ScalarField& u) { return u.values.cwiseAbs().maxCoeff(); }

NormReport norm_report(const ScalarField& u, double p, bool starred) {
    NormReport rep;
    rep.p = p;
    rep.starred = starred;
    rep.value = starred ? norm_star(u, p) : norm_lp(u, p);
    return rep;
}

std::pair<double, double> holder_star(const ScalarField& f1, const ScalarField& f2,
                                      double p, double q) {
    require_same_model(f1, f2);
    if (!(p >= 1.0) || !(q >= 1.0) || std::abs(1.0 / p + 1.0 / q - 1.0) > 1e-9)
        throw UsageError("holder_star: exponents must be conjugate (1/p + 1/q = 1)");
    ScalarField prod{f1.model, f1.values.cwiseProduct(f2.values)};
    double lhs = norm_star(prod, 1.0);
    double rhs = norm_star(f1, p) * norm_star(f2, q);
    return {lhs, rhs};
}

}  // namespace nmp
