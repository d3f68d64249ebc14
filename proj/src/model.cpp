#include "nmp/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace nmp {

namespace {

constexpr double kPi = std::numbers::pi;

std::string format_double(double x) {
    std::ostringstream oss;
    oss.precision(15);
    oss << x;
    return oss.str();
}

// Union-find connectivity check.
bool graph_connected(Index n, const std::vector<GraphEdge>& edges) {
    std::vector<Index> parent(static_cast<size_t>(n));
    std::iota(parent.begin(), parent.end(), Index{0});
    auto find = [&](Index x) {
        while (parent[static_cast<size_t>(x)] != x) {
            parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
            x = parent[static_cast<size_t>(x)];
        }
        return x;
    };
    for (const auto& e : edges) {
        Index ra = find(e.a), rb = find(e.b);
        if (ra != rb) parent[static_cast<size_t>(ra)] = rb;
    }
    if (n == 0) return false;
    Index root = find(0);
    for (Index i = 1; i < n; ++i)
        if (find(i) != root) return false;
    return true;
}

}  // namespace

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Torus: return "torus";
        case ModelKind::ZonalSphere: return "sphere3";
        case ModelKind::Graph: return "graph";
    }
    return "unknown";
}

Vector SpectralModel::analyze(const Vector& values) const {
    return eigenbasis.transpose() * weights.cwiseProduct(values);
}

Vector SpectralModel::synthesize(const Vector& coeffs) const {
    return eigenbasis * coeffs;
}

Vector VectorField::pointwise_norm() const {
    if (components.empty()) return Vector::Zero(model->node_count());
    Vector sq = Vector::Zero(components.front().size());
    for (const auto& c : components) sq += c.cwiseAbs2();
    return sq.cwiseSqrt();
}

ScalarField make_field(ModelPtr model, Vector values) {
    if (!model) throw UsageError("make_field: null model");
    if (values.size() != model->node_count())
        throw UsageError("make_field: value count does not match node count");
    if (!values.allFinite()) throw UsageError("make_field: values must be finite");
    return ScalarField{std::move(model), std::move(values)};
}

ScalarField constant_field(ModelPtr model, double value) {
    Index n = model->node_count();
    return ScalarField{std::move(model), Vector::Constant(n, value)};
}

VectorField zero_vector_field(ModelPtr model) {
    return VectorField{std::move(model), {}};
}

void require_same_model(const ScalarField& a, const ScalarField& b) {
    if (a.model.get() != b.model.get())
        throw UsageError("fields live on different models");
}

// --- torus -----------------------------------------------------------------

namespace {

// 1D real trigonometric basis on m uniform points, ordered
// [q=0 cos][q=1 cos][q=1 sin]...[q=m/2 cos] so that degenerate cos/sin pairs
// are adjacent. Normalized to sum_j (L/m) f(j)^2 = 1 exactly.
struct Axis1D {
    std::vector<int> q;        // frequency per 1D mode
    std::vector<int> kind;     // 0 = cos, 1 = sin
    Matrix values;             // m x m, column t = mode t at grid points
    std::vector<int> dpartner; // derivative target mode, -1 if zero
    std::vector<double> dfactor;
};

Axis1D build_axis(int m, double L) {
    Axis1D ax;
    ax.values.resize(m, m);
    for (int q = 0; q <= m / 2; ++q) {
        int kinds = (q == 0 || q == m / 2) ? 1 : 2;
        for (int k = 0; k < kinds; ++k) {
            ax.q.push_back(q);
            ax.kind.push_back(k);
        }
    }
    const double norm_edge = 1.0 / std::sqrt(L);
    const double norm_mid = std::sqrt(2.0 / L);
    for (size_t t = 0; t < ax.q.size(); ++t) {
        int q = ax.q[t], kind = ax.kind[t];
        double norm = (q == 0 || q == m / 2) ? norm_edge : norm_mid;
        for (int j = 0; j < m; ++j) {
            double arg = 2.0 * kPi * q * j / m;
            ax.values(j, static_cast<Index>(t)) = norm * (kind == 0 ? std::cos(arg) : std::sin(arg));
        }
    }
    // d/dx: cos_q -> -(2 pi q / L) sin_q, sin_q -> +(2 pi q / L) cos_q;
    // the constant and Nyquist modes differentiate to zero on the grid.
    ax.dpartner.assign(ax.q.size(), -1);
    ax.dfactor.assign(ax.q.size(), 0.0);
    for (size_t t = 0; t < ax.q.size(); ++t) {
        int q = ax.q[t];
        if (q == 0 || q == m / 2) continue;
        double omega = 2.0 * kPi * q / L;
        if (ax.kind[t] == 0) {
            ax.dpartner[t] = static_cast<int>(t) + 1;
            ax.dfactor[t] = -omega;
        } else {
            ax.dpartner[t] = static_cast<int>(t) - 1;
            ax.dfactor[t] = omega;
        }
    }
    return ax;
}

}  // namespace

ModelPtr build_torus(int n, int m, double length, Index node_cap) {
    if (n != 3 && n != 4) throw UsageError("build_torus: n must be 3 or 4");
    if (m < 4 || m % 2 != 0) throw UsageError("build_torus: m must be even and >= 4");
    if (!(length > 0)) throw UsageError("build_torus: L must be positive");
    double nodes_d = std::pow(static_cast<double>(m), n);
    if (nodes_d > static_cast<double>(node_cap))
        throw SizeError("build_torus: m^n exceeds the node cap of " + std::to_string(node_cap));
    const Index N = static_cast<Index>(nodes_d);

    Axis1D ax = build_axis(m, length);

    // Enumerate tensor modes; sort by eigenvalue (stable on the flat index).
    std::vector<double> lam_flat(static_cast<size_t>(N));
    std::vector<std::array<int, 4>> tuple_of(static_cast<size_t>(N));
    for (Index flat = 0; flat < N; ++flat) {
        Index rem = flat;
        double lam = 0.0;
        std::array<int, 4> tup{0, 0, 0, 0};
        for (int a = n - 1; a >= 0; --a) {
            int t = static_cast<int>(rem % m);
            rem /= m;
            tup[static_cast<size_t>(a)] = t;
            double omega = 2.0 * kPi * ax.q[static_cast<size_t>(t)] / length;
            lam += omega * omega;
        }
        lam_flat[static_cast<size_t>(flat)] = lam;
        tuple_of[static_cast<size_t>(flat)] = tup;
    }
    std::vector<Index> order(static_cast<size_t>(N));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
        return lam_flat[static_cast<size_t>(a)] < lam_flat[static_cast<size_t>(b)];
    });
    std::vector<Index> rank(static_cast<size_t>(N));
    for (Index k = 0; k < N; ++k) rank[static_cast<size_t>(order[static_cast<size_t>(k)])] = k;

    auto model = std::make_shared<SpectralModel>();
    model->kind = ModelKind::Torus;
    model->n_intrinsic = n;
    model->id = "torus:" + std::to_string(n) + ":" + std::to_string(m) + ":" + format_double(length);
    model->volume = std::pow(length, n);
    model->diameter = 0.5 * length * std::sqrt(static_cast<double>(n));
    model->weights = Vector::Constant(N, std::pow(length / m, n));
    model->eigenvalues.resize(N);
    for (Index k = 0; k < N; ++k)
        model->eigenvalues[k] = lam_flat[static_cast<size_t>(order[static_cast<size_t>(k)])];

    // Node coordinates, axis 0 slowest.
    model->nodes.resize(N, n);
    for (Index j = 0; j < N; ++j) {
        Index rem = j;
        for (int a = n - 1; a >= 0; --a) {
            model->nodes(j, a) = static_cast<double>(rem % m) * length / m;
            rem /= m;
        }
    }

    // Eigenbasis: separable product of 1D modes.
    model->eigenbasis.resize(N, N);
    for (Index j = 0; j < N; ++j) {
        std::array<int, 4> x{0, 0, 0, 0};
        Index rem = j;
        for (int a = n - 1; a >= 0; --a) {
            x[static_cast<size_t>(a)] = static_cast<int>(rem % m);
            rem /= m;
        }
        for (Index k = 0; k < N; ++k) {
            const auto& tup = tuple_of[static_cast<size_t>(order[static_cast<size_t>(k)])];
            double v = 1.0;
            for (int a = 0; a < n; ++a)
                v *= ax.values(x[static_cast<size_t>(a)], tup[static_cast<size_t>(a)]);
            model->eigenbasis(j, k) = v;
        }
    }

    // Differentiation tables in the sorted ordering.
    TorusDetail det;
    det.m = m;
    det.length = length;
    det.partner.resize(N, n);
    det.factor.resize(N, n);
    Index stride = 1;
    std::array<Index, 4> strides{0, 0, 0, 0};
    for (int a = n - 1; a >= 0; --a) {
        strides[static_cast<size_t>(a)] = stride;
        stride *= m;
    }
    for (Index k = 0; k < N; ++k) {
        Index flat = order[static_cast<size_t>(k)];
        const auto& tup = tuple_of[static_cast<size_t>(flat)];
        for (int a = 0; a < n; ++a) {
            int t = tup[static_cast<size_t>(a)];
            int pt = ax.dpartner[static_cast<size_t>(t)];
            if (pt < 0) {
                det.partner(k, a) = -1;
                det.factor(k, a) = 0.0;
            } else {
                Index pflat = flat + (pt - t) * strides[static_cast<size_t>(a)];
                det.partner(k, a) = rank[static_cast<size_t>(pflat)];
                det.factor(k, a) = ax.dfactor[static_cast<size_t>(t)];
            }
        }
    }
    model->torus = std::move(det);
    return model;
}

// --- zonal 3-sphere ----------------------------------------------------------

ModelPtr build_zonal_sphere3(int m_theta) {
    if (m_theta < 16) throw UsageError("build_zonal_sphere3: m_theta must be >= 16");
    const Index N = m_theta;
    const double dtheta = kPi / m_theta;
    const double vol = 2.0 * kPi * kPi;

    Vector theta(N), w(N);
    for (Index j = 0; j < N; ++j) {
        theta[j] = (static_cast<double>(j) + 0.5) * dtheta;
        double s = std::sin(theta[j]);
        w[j] = 4.0 * kPi * s * s * dtheta;
    }
    w *= vol / w.sum();  // quadrature is already exact for sin^2; pin exactly

    // Analytic zonal eigenfunctions phi_k = sin((k+1)theta)/(sin(theta) sqrt(2 pi^2))
    // and their theta-derivatives.
    const double c = 1.0 / std::sqrt(vol);
    Matrix V(N, N), D(N, N);
    for (Index k = 0; k < N; ++k) {
        double kk = static_cast<double>(k) + 1.0;
        for (Index j = 0; j < N; ++j) {
            double s = std::sin(theta[j]), cth = std::cos(theta[j]);
            double skk = std::sin(kk * theta[j]), ckk = std::cos(kk * theta[j]);
            V(j, k) = c * skk / s;
            D(j, k) = c * (kk * ckk * s - skk * cth) / (s * s);
        }
    }

    // Re-orthonormalize under the discrete weights: QR of sqrt(W) V. Only the
    // top mode needs a visible correction (its sin^2((m)theta) component
    // aliases under midpoint quadrature); low modes are exact already.
    Vector sqw = w.cwiseSqrt();
    Matrix B = sqw.asDiagonal() * V;
    Eigen::HouseholderQR<Matrix> qr(B);
    Matrix Q = qr.householderQ() * Matrix::Identity(N, N);
    Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index k = 0; k < N; ++k) {
        if (R(k, k) < 0) {
            Q.col(k) = -Q.col(k);
            R.row(k) = -R.row(k);
        }
    }

    auto model = std::make_shared<SpectralModel>();
    model->kind = ModelKind::ZonalSphere;
    model->n_intrinsic = 3;
    model->id = "sphere3:" + std::to_string(m_theta);
    model->volume = vol;
    model->diameter = kPi;
    model->weights = w;
    model->nodes = theta;
    model->eigenvalues.resize(N);
    for (Index k = 0; k < N; ++k)
        model->eigenvalues[k] = static_cast<double>(k) * (static_cast<double>(k) + 2.0);
    model->eigenbasis = sqw.cwiseInverse().asDiagonal() * Q;

    // Map the analytic derivatives through the same change of basis:
    // Phi = V R^{-1}  =>  deriv = D R^{-1}.
    ZonalDetail det;
    Matrix Dt = R.transpose().triangularView<Eigen::Lower>().solve(D.transpose());
    det.deriv_basis = Dt.transpose();
    model->zonal = std::move(det);
    return model;
}

// --- weighted graph ----------------------------------------------------------

namespace {

ModelPtr assemble_graph_model(const Vector& node_masses,
                              const std::vector<GraphEdge>& edges,
                              int n_intrinsic,
                              Index node_cap,
                              const Vector* cached_eigenvalues,
                              const Matrix* cached_eigenbasis) {
    const Index N = node_masses.size();
    if (N < 2) throw UsageError("build_graph_model: need at least 2 nodes");
    if (N > node_cap)
        throw SizeError("build_graph_model: node count exceeds cap of " + std::to_string(node_cap));
    if (n_intrinsic < 3) throw UsageError("build_graph_model: n_intrinsic must be >= 3");
    if ((node_masses.array() <= 0).any())
        throw UsageError("build_graph_model: node masses must be positive");
    for (const auto& e : edges) {
        if (e.a < 0 || e.a >= N || e.b < 0 || e.b >= N || e.a == e.b)
            throw UsageError("build_graph_model: bad edge endpoints");
        if (!(e.conductance > 0))
            throw UsageError("build_graph_model: conductances must be positive");
    }
    if (!graph_connected(N, edges))
        throw ModelError("build_graph_model: graph is disconnected (lambda_1 = 0 breaks the Green function)");

    auto model = std::make_shared<SpectralModel>();
    model->kind = ModelKind::Graph;
    model->n_intrinsic = n_intrinsic;
    model->id = "graph:n" + std::to_string(N) + ":e" + std::to_string(edges.size());
    model->weights = node_masses;
    model->volume = node_masses.sum();
    model->nodes.resize(N, 0);

    if (cached_eigenvalues && cached_eigenbasis) {
        model->eigenvalues = *cached_eigenvalues;
        model->eigenbasis = *cached_eigenbasis;
    } else {
        // Stiffness matrix K, then the symmetric form M^{-1/2} K M^{-1/2}.
        Matrix K = Matrix::Zero(N, N);
        for (const auto& e : edges) {
            K(e.a, e.a) += e.conductance;
            K(e.b, e.b) += e.conductance;
            K(e.a, e.b) -= e.conductance;
            K(e.b, e.a) -= e.conductance;
        }
        Vector isq = node_masses.cwiseSqrt().cwiseInverse();
        Matrix B = isq.asDiagonal() * K * isq.asDiagonal();
        B = 0.5 * (B + B.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Matrix> es(B);
        if (es.info() != Eigen::Success)
            throw NumericalError("build_graph_model: eigendecomposition failed");
        model->eigenvalues = es.eigenvalues();
        model->eigenbasis = isq.asDiagonal() * es.eigenvectors();
        double lam_max = std::max(1.0, model->eigenvalues[N - 1]);
        if (std::abs(model->eigenvalues[0]) > 1e-10 * lam_max)
            throw NumericalError("build_graph_model: lambda_0 not numerically zero");
        // Pin the kernel mode exactly.
        model->eigenvalues[0] = 0.0;
        model->eigenbasis.col(0) = Vector::Constant(N, 1.0 / std::sqrt(model->volume));
    }

    GraphDetail det;
    det.edges = edges;
    model->graph = std::move(det);
    return model;
}

}  // namespace

ModelPtr build_graph_model(const Vector& node_masses,
                           const std::vector<GraphEdge>& edges,
                           int n_intrinsic,
                           Index node_cap) {
    return assemble_graph_model(node_masses, edges, n_intrinsic, node_cap, nullptr, nullptr);
}

// --- operators ---------------------------------------------------------------

ScalarField apply_laplacian(const ScalarField& u) {
    const auto& model = *u.model;
    Vector coeffs = model.analyze(u.values);
    coeffs = -model.eigenvalues.cwiseProduct(coeffs);
    return ScalarField{u.model, model.synthesize(coeffs)};
}

namespace {

// Apply the coefficient-space derivative along one torus axis.
Vector torus_axis_derivative(const SpectralModel& model, const Vector& coeffs, int axis) {
    const auto& det = *model.torus;
    Vector out = Vector::Zero(coeffs.size());
    for (Index k = 0; k < coeffs.size(); ++k) {
        Index p = det.partner(k, axis);
        if (p >= 0) out[p] += det.factor(k, axis) * coeffs[k];
    }
    return out;
}

}  // namespace

VectorField gradient(const ScalarField& u) {
    const auto& model = *u.model;
    VectorField g{u.model, {}};
    switch (model.kind) {
        case ModelKind::Torus: {
            Vector coeffs = model.analyze(u.values);
            int n = model.n_intrinsic;
            g.components.reserve(static_cast<size_t>(n));
            for (int a = 0; a < n; ++a)
                g.components.push_back(model.synthesize(torus_axis_derivative(model, coeffs, a)));
            return g;
        }
        case ModelKind::ZonalSphere: {
            g.components.push_back(model.zonal->deriv_basis * model.analyze(u.values));
            return g;
        }
        case ModelKind::Graph:
            throw UnsupportedOperationError(
                "gradient: graph models carry no tangent fields; use dirichlet_pairing");
    }
    throw UsageError("gradient: unknown model kind");
}

ScalarField divergence_weak(const VectorField& phi) {
    const auto& model = *phi.model;
    if (phi.is_zero()) return constant_field(phi.model, 0.0);
    switch (model.kind) {
        case ModelKind::Torus: {
            if (phi.components.size() != static_cast<size_t>(model.n_intrinsic))
                throw UsageError("divergence_weak: torus field needs one component per axis");
            Vector dcoeffs = Vector::Zero(model.mode_count());
            for (int a = 0; a < model.n_intrinsic; ++a)
                dcoeffs += torus_axis_derivative(model, model.analyze(phi.components[static_cast<size_t>(a)]), a);
            return ScalarField{phi.model, model.synthesize(dcoeffs)};
        }
        case ModelKind::ZonalSphere: {
            if (phi.components.size() != 1)
                throw UsageError("divergence_weak: zonal field needs a single theta component");
            // Exact adjoint of the theta-derivative operator under the weights.
            Vector coeffs = model.zonal->deriv_basis.transpose() *
                            model.weights.cwiseProduct(phi.components[0]);
            return ScalarField{phi.model, -model.synthesize(coeffs)};
        }
        case ModelKind::Graph: {
            if (!phi.is_zero())
                throw UnsupportedOperationError("divergence_weak: graphs support only the zero field");
            return constant_field(phi.model, 0.0);
        }
    }
    throw UsageError("divergence_weak: unknown model kind");
}

double dirichlet_pairing(const ScalarField& u, const ScalarField& v) {
    require_same_model(u, v);
    if (u.model->kind == ModelKind::Graph) return spectral_dirichlet(u, v);
    VectorField gu = gradient(u), gv = gradient(v);
    double acc = 0.0;
    for (size_t a = 0; a < gu.components.size(); ++a)
        acc += gu.components[a].cwiseProduct(gv.components[a]).dot(u.model->weights);
    return acc;
}

double spectral_dirichlet(const ScalarField& u, const ScalarField& v) {
    require_same_model(u, v);
    Vector cu = u.model->analyze(u.values);
    Vector cv = v.model->analyze(v.values);
    return u.model->eigenvalues.cwiseProduct(cu).dot(cv);
}

// --- NMPM1 cache -------------------------------------------------------------

namespace {

void put_f64(std::ostream& os, double x) {
    static_assert(sizeof(double) == 8);
    std::uint64_t bits;
    std::memcpy(&bits, &x, 8);
    unsigned char buf[8];
    for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xFF);
    os.write(reinterpret_cast<const char*>(buf), 8);
}

double get_f64(std::istream& is) {
    unsigned char buf[8];
    is.read(reinterpret_cast<char*>(buf), 8);
    if (!is) throw UsageError("model cache: truncated file");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    double x;
    std::memcpy(&x, &bits, 8);
    return x;
}

constexpr char kModelMagic[5] = {'N', 'M', 'P', 'M', '1'};

}  // namespace

void write_model_cache(const SpectralModel& model, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw UsageError("model cache: cannot open for writing: " + path.string());
    os.write(kModelMagic, 5);
    const Index N = model.node_count();
    put_f64(os, static_cast<double>(N));
    put_f64(os, static_cast<double>(model.n_intrinsic));
    put_f64(os, model.volume);
    put_f64(os, model.diameter ? 1.0 : 0.0);
    put_f64(os, model.diameter.value_or(0.0));
    for (Index i = 0; i < N; ++i) put_f64(os, model.weights[i]);
    for (Index i = 0; i < N; ++i) put_f64(os, model.eigenvalues[i]);
    for (Index i = 0; i < N; ++i)
        for (Index j = 0; j < N; ++j) put_f64(os, model.eigenbasis(i, j));
    if (!os) throw UsageError("model cache: write failed: " + path.string());
}

ModelCacheBlock read_model_cache(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw UsageError("model cache: cannot open: " + path.string());
    char magic[5];
    is.read(magic, 5);
    if (!is || std::memcmp(magic, kModelMagic, 5) != 0)
        throw UsageError("model cache: bad magic in " + path.string());
    ModelCacheBlock blk;
    double count_d = get_f64(is);
    auto N = static_cast<Index>(count_d);
    if (N <= 0 || static_cast<double>(N) != count_d)
        throw UsageError("model cache: bad node count");
    blk.n_intrinsic = get_f64(is);
    blk.volume = get_f64(is);
    blk.has_diameter = get_f64(is) != 0.0;
    blk.diameter = get_f64(is);
    blk.weights.resize(N);
    for (Index i = 0; i < N; ++i) blk.weights[i] = get_f64(is);
    blk.eigenvalues.resize(N);
    for (Index i = 0; i < N; ++i) blk.eigenvalues[i] = get_f64(is);
    blk.eigenbasis.resize(N, N);
    for (Index i = 0; i < N; ++i)
        for (Index j = 0; j < N; ++j) blk.eigenbasis(i, j) = get_f64(is);
    return blk;
}

ModelPtr build_graph_model_cached(const Vector& node_masses,
                                  const std::vector<GraphEdge>& edges,
                                  int n_intrinsic,
                                  const std::filesystem::path& cache_dir,
                                  const std::string& key) {
    std::filesystem::path file = cache_dir / (key + ".nmpm");
    if (std::filesystem::exists(file)) {
        ModelCacheBlock blk = read_model_cache(file);
        if (blk.weights.size() == node_masses.size())
            return assemble_graph_model(node_masses, edges, n_intrinsic,
                                        std::max<Index>(node_masses.size(), 2000),
                                        &blk.eigenvalues, &blk.eigenbasis);
    }
    ModelPtr model = build_graph_model(node_masses, edges, n_intrinsic);
    std::filesystem::create_directories(cache_dir);
    write_model_cache(*model, file);
    return model;
}

}  // namespace nmp
