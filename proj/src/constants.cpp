#include "nmp/constants.hpp"

#include <cmath>

namespace nmp {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kSqrt3 = 1.7320508075688772;
constexpr int kMaxProductTerms = 10'000'000;

void require_exponents(int n, double p, const char* who) {
    if (n < 3) throw UsageError(std::string(who) + ": n must be >= 3");
    if (!(p > 0.5 * n)) throw UsageError(std::string(who) + ": p must exceed n/2");
}

// Certified bound on the log-tail sum_{i>k} (2/gamma_i) log(A_{gamma_i-1} + sqrt 2).
// Uses A_{gamma-1} <= sqrt(3) C* (n-1)/(n-2) gamma for gamma - 1 >= 1, then
// log(c1 gamma_i + c2) <= log gamma_i + log(c1 + c2/gamma_{k+1}) for i > k,
// and sums the geometric and arithmetico-geometric pieces in closed form.
double tail_bound_after(int n, double cstar, double gamma0, double r, int k) {
    double c1 = kSqrt3 * cstar * (n - 1) / (n - 2);
    double gamma_next = gamma0 * std::pow(r, k + 1);
    double ctil = c1 + kSqrt2 / gamma_next;
    double x = 1.0 / r;
    double xk1 = std::pow(x, k + 1);
    double s1 = xk1 / (1.0 - x);
    double s2 = xk1 * ((k + 1) - k * x) / ((1.0 - x) * (1.0 - x));
    return (2.0 / gamma0) * ((std::log(gamma0) + std::log(ctil)) * s1 + std::log(r) * s2);
}

}  // namespace

double c0_constant(int n) {
    if (n < 3) throw UsageError("c0_constant: n must be >= 3");
    double nd = n;
    return 8.0 * nd * nd * (nd - 1) * (nd - 1) / std::pow(nd - 2, 3) *
           std::pow((nd - 2) / 2.0, 4.0 / nd);
}

GammaSchedule gamma_schedule(int n, double p, double tol) {
    require_exponents(n, p, "gamma_schedule");
    GammaSchedule sched;
    sched.gamma0 = 1.0 + (n * (p - 2.0) + 2.0 * p) / ((n - 2.0) * p);
    sched.ratio = n * (p - 1.0) / ((n - 2.0) * p);
    // Self-check of the exponent identity gamma_0 p/(p-1) = 2n/(n-2).
    double lhs = sched.gamma0 * p / (p - 1.0);
    double rhs = 2.0 * n / (n - 2.0);
    if (std::abs(lhs - rhs) > 1e-12 * std::max(1.0, std::abs(rhs)))
        throw NumericalError("gamma_schedule: exponent identity violated");
    int k = 0;
    while (tail_bound_after(n, 1.0, sched.gamma0, sched.ratio, k) > tol) {
        if (++k > kMaxProductTerms)
            throw NumericalError("gamma_schedule: tolerance unreachable");
    }
    sched.k_star = k;
    return sched;
}

double a_gamma(int n, double cstar, double gamma) {
    if (n < 3) throw UsageError("a_gamma: n must be >= 3");
    if (!(cstar >= 0)) throw UsageError("a_gamma: Cstar must be nonnegative");
    if (!(gamma >= 1.0)) throw UsageError("a_gamma: gamma must be >= 1");
    return cstar * (n - 1.0) * (gamma + 1.0) / (n - 2.0) * std::sqrt((gamma + 2.0) / gamma);
}

ProductA product_A(int n, double p, double cstar, double tol) {
    require_exponents(n, p, "product_A");
    if (!(cstar >= 0)) throw UsageError("product_A: Cstar must be nonnegative");
    if (!(tol > 0)) throw UsageError("product_A: tol must be positive");
    GammaSchedule sched = gamma_schedule(n, p);
    ProductA out;
    double gamma_i = sched.gamma0;
    int k = 0;
    while (true) {
        ++k;
        gamma_i *= sched.ratio;
        out.log_value += (2.0 / gamma_i) * std::log(a_gamma(n, cstar, gamma_i - 1.0) + kSqrt2);
        double tail = tail_bound_after(n, cstar, sched.gamma0, sched.ratio, k);
        if (tail <= tol) {
            out.tail_bound = tail;
            break;
        }
        if (k >= kMaxProductTerms || !(gamma_i < 1e290))
            throw NumericalError("product_A: tolerance unreachable before float limits");
    }
    out.terms = k;
    out.value = std::exp(out.log_value);
    return out;
}

std::vector<double> product_A_partials(int n, double p, double cstar, int k_max) {
    require_exponents(n, p, "product_A_partials");
    GammaSchedule sched = gamma_schedule(n, p);
    std::vector<double> partials;
    partials.reserve(static_cast<size_t>(k_max));
    double log_acc = 0.0;
    double gamma_i = sched.gamma0;
    for (int k = 1; k <= k_max; ++k) {
        gamma_i *= sched.ratio;
        log_acc += (2.0 / gamma_i) * std::log(a_gamma(n, cstar, gamma_i - 1.0) + kSqrt2);
        partials.push_back(std::exp(log_acc));
    }
    return partials;
}

ConstantSet constant_set(int n, double p, double cstar, double tol) {
    require_exponents(n, p, "constant_set");
    if (!(cstar >= 0)) throw UsageError("constant_set: Cstar must be nonnegative");
    ConstantSet cs;
    cs.n = n;
    cs.p = p;
    cs.cstar = cstar;
    GammaSchedule sched = gamma_schedule(n, p, tol);
    cs.gamma0 = sched.gamma0;
    cs.ratio = sched.ratio;
    ProductA a = product_A(n, p, cstar, tol);
    cs.big_a = a.value;
    cs.a_tail_bound = a.tail_bound;
    cs.a_terms = a.terms;
    cs.c1 = 2.0 * (n - 1.0) / (n - 2.0) * cstar;
    cs.c2 = cs.big_a * cs.c1 * (1.0 + 2.0 * std::max(cs.c1, 1.0) * (cs.c1 + kSqrt2));
    cs.c0n = c0_constant(n);
    cs.coef_f = cs.c0n * cstar * cstar + 2.0 * cs.c2;
    cs.coef_phi = cs.c2;
    cs.degenerate = (cstar == 0.0);
    return cs;
}

}  // namespace nmp
