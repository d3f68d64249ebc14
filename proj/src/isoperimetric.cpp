#include "nmp/isoperimetric.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "nmp/norms.hpp"
#include "nmp/rng.hpp"

namespace nmp {

namespace {

double sobolev_exponent(int n) { return 2.0 * n / (n - 2.0); }

// ||u||*_s and its w-gradient, with the mean projected out of the gradient.
double starred_norm_and_grad(const SpectralModel& model, const Vector& u, double s, Vector& grad) {
    double vol = model.volume;
    double m = u.cwiseAbs().maxCoeff();
    if (m <= 0.0) {
        grad.setZero(u.size());
        return 0.0;
    }
    double acc = 0.0;
    for (Index i = 0; i < u.size(); ++i)
        acc += model.weights[i] * std::pow(std::abs(u[i]) / m, s);
    double value = m * std::pow(acc / vol, 1.0 / s);
    grad.resize(u.size());
    double scale = std::pow(value, 1.0 - s) / vol;
    for (Index i = 0; i < u.size(); ++i) {
        double a = std::abs(u[i]);
        grad[i] = scale * std::pow(a, s - 1.0) * (u[i] >= 0 ? 1.0 : -1.0);
    }
    double mean = model.weights.dot(grad) / vol;
    grad.array() -= mean;
    return value;
}

struct AscentOutcome {
    double ratio = 0.0;  // best S* reached from this start
    int iterations = 0;
    bool converged = false;
};

AscentOutcome ascend_from(const SpectralModel& model, Vector u, double s, int iters, double step0) {
    AscentOutcome out;
    const double vol = model.volume;
    auto project_mean = [&](Vector& v) { v.array() -= model.weights.dot(v) / vol; };
    auto dirichlet2 = [&](const Vector& v) {
        Vector c = model.analyze(v);
        return model.eigenvalues.cwiseProduct(c).dot(c) / vol;
    };

    project_mean(u);
    double d2 = dirichlet2(u);
    if (!(d2 > 0)) return out;
    u /= std::sqrt(d2);

    Vector grad_n;
    double ratio = starred_norm_and_grad(model, u, s, grad_n);
    double step = step0;
    int it = 0;
    for (; it < iters; ++it) {
        // Ascent direction of the ratio on the ||grad u||*_2 = 1 sphere.
        Vector c = model.analyze(u);
        Vector grad_d = model.synthesize(model.eigenvalues.cwiseProduct(c)) / vol;
        Vector dir = grad_n - ratio * grad_d;
        project_mean(dir);
        double dn = std::sqrt(model.weights.dot(dir.cwiseProduct(dir)) / vol);
        if (dn < 1e-14 * std::max(1.0, ratio)) {
            out.converged = true;
            break;
        }
        bool accepted = false;
        for (int bt = 0; bt < 30; ++bt) {
            Vector u2 = u + (step / dn) * dir;
            project_mean(u2);
            double d2n = dirichlet2(u2);
            if (d2n > 0) {
                u2 /= std::sqrt(d2n);
                Vector grad2;
                double r2 = starred_norm_and_grad(model, u2, s, grad2);
                if (r2 > ratio) {
                    u = std::move(u2);
                    ratio = r2;
                    grad_n = std::move(grad2);
                    step *= 1.5;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) {
            out.converged = true;  // no improving step at any scale
            break;
        }
    }
    out.ratio = ratio;
    out.iterations = it;
    return out;
}

// Heat-kernel columns centered at node 0 provide geometry-free "bump" starts
// at several widths; the spike and phi_1 cover the extremes.
std::vector<Vector> designed_starts(const SpectralModel& model) {
    std::vector<Vector> starts;
    const Index N = model.node_count();
    Vector spike = Vector::Zero(N);
    spike[0] = 1.0;
    starts.push_back(spike);
    if (model.mode_count() > 1) starts.push_back(model.eigenbasis.col(1));
    double lam1 = model.lambda1();
    if (lam1 > 0) {
        Vector delta_coeffs = model.eigenbasis.transpose() * model.weights.cwiseProduct(spike);
        for (double c : {0.03, 0.1, 0.3, 1.0}) {
            double t = c / lam1;
            Vector d = (-model.eigenvalues.array() * t).exp() * delta_coeffs.array();
            starts.push_back(model.synthesize(d));
        }
    }
    return starts;
}

}  // namespace

std::string to_string(CstarMethod method) {
    switch (method) {
        case CstarMethod::Variational: return "ascent";
        case CstarMethod::Sweep: return "sweep";
        case CstarMethod::AnalyticSlab: return "slab";
        case CstarMethod::User: return "user";
    }
    return "unknown";
}

CstarEstimate sobolev_ratio_ascent(const ModelPtr& model, int restarts, int iters,
                                   double step, std::uint64_t seed) {
    if (restarts < 0 || iters < 1 || !(step > 0))
        throw UsageError("sobolev_ratio_ascent: need restarts >= 0, iters >= 1, step > 0");
    const double s = sobolev_exponent(model->n_intrinsic);
    const Index N = model->node_count();

    CstarEstimate est;
    est.method = CstarMethod::Variational;
    est.restarts = restarts;

    bool best_converged = true;
    auto consider = [&](const Vector& u0) {
        AscentOutcome o = ascend_from(*model, u0, s, iters, step);
        est.iterations += o.iterations;
        if (o.ratio > est.best_ratio) {
            est.best_ratio = o.ratio;
            best_converged = o.converged;
        }
    };

    for (const Vector& u0 : designed_starts(*model)) consider(u0);
    for (int r = 0; r < restarts; ++r) {
        Rng rng(derive_seed(seed, "ascent", static_cast<std::uint64_t>(r)));
        Vector u0(N);
        for (Index i = 0; i < N; ++i) u0[i] = rng.normal();
        consider(u0);
    }

    int n = model->n_intrinsic;
    est.value = est.best_ratio * (n - 2.0) / (4.0 * (n - 1.0));
    est.stagnation = !best_converged;
    return est;
}

namespace {

struct CutGeometry {
    // Symmetric adjacency with boundary weights (face area or conductance).
    std::vector<std::vector<std::pair<Index, double>>> neighbors;
    Vector cell_volume;
};

CutGeometry torus_geometry(const SpectralModel& model) {
    const auto& det = *model.torus;
    const int n = model.n_intrinsic;
    const int m = det.m;
    const Index N = model.node_count();
    double face = std::pow(det.length / m, n - 1);
    CutGeometry geo;
    geo.neighbors.resize(static_cast<size_t>(N));
    geo.cell_volume = model.weights;
    std::vector<Index> strides(static_cast<size_t>(n));
    Index stride = 1;
    for (int a = n - 1; a >= 0; --a) {
        strides[static_cast<size_t>(a)] = stride;
        stride *= m;
    }
    for (Index j = 0; j < N; ++j) {
        Index rem = j;
        for (int a = n - 1; a >= 0; --a) {
            Index coord = rem % m;
            rem /= m;
            Index up = j + ((coord + 1 == m) ? (1 - m) : 1) * strides[static_cast<size_t>(a)];
            geo.neighbors[static_cast<size_t>(j)].push_back({up, face});
            geo.neighbors[static_cast<size_t>(up)].push_back({j, face});
        }
    }
    return geo;
}

CutGeometry graph_geometry(const SpectralModel& model) {
    CutGeometry geo;
    geo.neighbors.resize(static_cast<size_t>(model.node_count()));
    geo.cell_volume = model.weights;
    for (const auto& e : model.graph->edges) {
        geo.neighbors[static_cast<size_t>(e.a)].push_back({e.b, e.conductance});
        geo.neighbors[static_cast<size_t>(e.b)].push_back({e.a, e.conductance});
    }
    return geo;
}

// Best vol^{(n-1)/n}/area over prefix sets of the given ordering score.
double sweep_one(const CutGeometry& geo, const Vector& score, double vol_total, int n) {
    const Index N = score.size();
    std::vector<Index> order(static_cast<size_t>(N));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return score[a] > score[b]; });
    std::vector<char> inside(static_cast<size_t>(N), 0);
    double cut = 0.0, vol = 0.0, best = 0.0;
    double half = 0.5 * vol_total * (1.0 + 1e-12);
    for (Index t = 0; t < N; ++t) {
        Index v = order[static_cast<size_t>(t)];
        for (const auto& [u, area] : geo.neighbors[static_cast<size_t>(v)])
            cut += inside[static_cast<size_t>(u)] ? -area : area;
        inside[static_cast<size_t>(v)] = 1;
        vol += geo.cell_volume[v];
        if (vol <= half && cut > 0)
            best = std::max(best, std::pow(vol, (n - 1.0) / n) / cut);
    }
    return best;
}

}  // namespace

CstarEstimate cheeger_sweep(const ModelPtr& model) {
    CutGeometry geo;
    switch (model->kind) {
        case ModelKind::Torus: geo = torus_geometry(*model); break;
        case ModelKind::Graph: geo = graph_geometry(*model); break;
        case ModelKind::ZonalSphere:
            throw UnsupportedOperationError("cheeger_sweep: no boundary-area notion on the zonal model");
    }
    const int n = model->n_intrinsic;
    const double vol = model->volume;
    const Index K = std::min<Index>(model->mode_count() - 1, 12);

    std::vector<Vector> candidates;
    for (Index k = 1; k <= K; ++k) candidates.push_back(model->eigenbasis.col(k));
    // Generic rotations inside (near-)degenerate pairs; a single eigenvector
    // of a degenerate eigenvalue can have symmetric ties that hide the best
    // prefix, a golden-ratio mix breaks them.
    const double tau = 0.6180339887498949;
    for (Index k = 1; k < K; ++k) {
        if (std::abs(model->eigenvalues[k] - model->eigenvalues[k + 1]) <=
            1e-9 * (1.0 + model->eigenvalues[k])) {
            candidates.push_back(model->eigenbasis.col(k) + tau * model->eigenbasis.col(k + 1));
            candidates.push_back(model->eigenbasis.col(k) - tau * model->eigenbasis.col(k + 1));
        }
    }

    CstarEstimate est;
    est.method = CstarMethod::Sweep;
    for (const Vector& v : candidates) {
        est.best_ratio = std::max(est.best_ratio, sweep_one(geo, v, vol, n));
        est.best_ratio = std::max(est.best_ratio, sweep_one(geo, Vector(-v), vol, n));
        est.iterations += 2;
    }
    est.value = est.best_ratio * std::pow(vol, 1.0 / n);
    return est;
}

CstarEstimate slab_candidate(const ModelPtr& model) {
    if (model->kind != ModelKind::Torus)
        throw UnsupportedOperationError("slab_candidate: only defined on tori");
    const int n = model->n_intrinsic;
    CstarEstimate est;
    est.method = CstarMethod::AnalyticSlab;
    est.best_ratio = std::pow(2.0, -(n - 1.0) / n) / 2.0;
    est.value = est.best_ratio * std::pow(model->volume, 1.0 / n);
    return est;
}

CstarResolution resolve_cstar(const ModelPtr& model, const CstarPolicy& policy) {
    CstarResolution res;
    if (!policy.automatic) {
        if (!(policy.fixed_value > 0))
            throw UsageError("resolve_cstar: fixed Cstar must be positive");
        res.value = policy.fixed_value;
        res.provenance = "user:" + std::to_string(policy.fixed_value);
        return res;
    }
    std::ostringstream prov;
    prov << "auto:";
    double best = 0.0;
    std::string best_name;
    auto consider = [&](const char* name, double value) {
        prov << name << "=" << value << ";";
        if (value > best) {
            best = value;
            best_name = name;
        }
    };
    if (model->kind == ModelKind::Torus)
        consider("slab", slab_candidate(model).value);
    if (model->kind != ModelKind::ZonalSphere)
        consider("sweep", cheeger_sweep(model).value);
    consider("ascent", sobolev_ratio_ascent(model, policy.ascent_restarts, policy.ascent_iters,
                                            policy.ascent_step, policy.seed)
                           .value);
    if (!(best > 0)) throw NumericalError("resolve_cstar: no estimator produced a positive value");
    prov << "chosen=" << best_name;
    res.value = best;
    res.provenance = prov.str();
    return res;
}

}  // namespace nmp
