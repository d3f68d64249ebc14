#pragma once

// Exact discrete spectral models of closed manifolds: flat tori on uniform
// grids, the zonal reduction of the unit 3-sphere, and weighted graphs.
//
// Every model is a finite measure space (positive quadrature weights w_i,
// volume = sum w_i) together with a w-orthonormal eigenbasis of its Laplace
// operator. Sign convention throughout: Delta = div grad (the negative
// Laplacian), eigenpairs stored as lambda_k >= 0 ascending with
// Delta phi_k = -lambda_k phi_k and lambda_0 = 0, phi_0 = vol^{-1/2}.
//
// Tori keep all m^n representable trigonometric modes, so spectral identities
// are exact matrix identities. The zonal sphere samples the analytic zonal
// eigenfunctions and re-orthonormalizes them under the discrete weights
// (weighted Householder QR); its eigenvalues k(k+2) are the analytic ones.

#include <Eigen/Dense>

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "nmp/errors.hpp"

namespace nmp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

enum class ModelKind { Torus, ZonalSphere, Graph };

std::string to_string(ModelKind kind);

struct GraphEdge {
    Index a = 0;
    Index b = 0;
    double conductance = 1.0;
};

// Spectral differentiation tables for the torus. For basis column k and axis
// a, d/dx_a maps mode k to factor(k,a) * mode partner(k,a); partner = -1
// means the derivative vanishes on the grid (constant and Nyquist modes).
struct TorusDetail {
    int m = 0;
    double length = 1.0;
    Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> partner;  // N x n
    Matrix factor;                                                 // N x n
};

struct ZonalDetail {
    // Column k = d/dtheta of the orthonormalized mode k sampled at the nodes.
    Matrix deriv_basis;
};

struct GraphDetail {
    std::vector<GraphEdge> edges;
};

struct SpectralModel {
    ModelKind kind = ModelKind::Graph;
    int n_intrinsic = 3;
    std::string id;  // build-parameter key, e.g. "torus:3:8:1"

    Matrix nodes;        // node coordinates, informational (may have 0 cols)
    Vector weights;      // w_i > 0, sum = volume
    Vector eigenvalues;  // ascending, eigenvalues[0] = 0
    Matrix eigenbasis;   // columns phi_k, Phi^T W Phi = I
    double volume = 0.0;
    std::optional<double> diameter;

    std::optional<TorusDetail> torus;
    std::optional<ZonalDetail> zonal;
    std::optional<GraphDetail> graph;

    Index node_count() const { return weights.size(); }
    Index mode_count() const { return eigenvalues.size(); }
    double lambda1() const { return mode_count() > 1 ? eigenvalues[1] : 0.0; }

    // Spectral analysis/synthesis; the basis is complete, so the round trip
    // is the identity up to rounding.
    Vector analyze(const Vector& values) const;
    Vector synthesize(const Vector& coeffs) const;
};

using ModelPtr = std::shared_ptr<const SpectralModel>;

struct ScalarField {
    ModelPtr model;
    Vector values;
};

// Tangent fields per model kind: torus stores one component per axis, the
// zonal sphere a single theta-component, graphs only the zero field
// (components empty).
struct VectorField {
    ModelPtr model;
    std::vector<Vector> components;

    Vector pointwise_norm() const;
    bool is_zero() const { return components.empty(); }
};

ScalarField make_field(ModelPtr model, Vector values);
ScalarField constant_field(ModelPtr model, double value);
VectorField zero_vector_field(ModelPtr model);
void require_same_model(const ScalarField& a, const ScalarField& b);

// --- builders ------------------------------------------------------------

// Flat torus [0,L)^n, uniform grid with m points per axis (m even). All m^n
// real trigonometric modes are kept; eigenvalues 4 pi^2 |k|^2 / L^2, weights
// (L/m)^n, volume exactly L^n.
ModelPtr build_torus(int n, int m, double length, Index node_cap = 4096);

// Zonal reduction of the unit S^3: nodes are theta midpoints on (0, pi),
// weights 4 pi sin^2(theta) dtheta rescaled so the volume is exactly 2 pi^2,
// eigenvalues k(k+2), diameter pi.
ModelPtr build_zonal_sphere3(int m_theta);

// Mass-weighted graph Laplacian (L u)_i = (1/m_i) sum_j c_ij (u_i - u_j);
// n_intrinsic is supplied by the caller for use in the constant formulas
// (a formal analogy, reported as such).
ModelPtr build_graph_model(const Vector& node_masses,
                           const std::vector<GraphEdge>& edges,
                           int n_intrinsic,
                           Index node_cap = 2000);

// --- differential operators ----------------------------------------------

// Spectral application: u_k -> -lambda_k u_k.
ScalarField apply_laplacian(const ScalarField& u);

// Torus: spectral differentiation per axis. Zonal: d/dtheta of the
// synthesized function. Graphs are unsupported (use dirichlet_pairing).
VectorField gradient(const ScalarField& u);

// Weak divergence, defined so that sum_i w_i d_i phi_i = -sum_i w_i
// (Phi . grad phi)_i holds for every scalar field phi. On the torus and the
// zonal sphere this is realized through the exact adjoint of the spectral
// derivative, so the pairing identity holds to machine precision.
ScalarField divergence_weak(const VectorField& phi);

// int grad u . grad v: gradient route on torus/zonal models, Dirichlet form
// (sum_k lambda_k u_k v_k) on graphs.
double dirichlet_pairing(const ScalarField& u, const ScalarField& v);

// sum_k lambda_k u_k v_k on any model.
double spectral_dirichlet(const ScalarField& u, const ScalarField& v);

// --- cache file (magic "NMPM1") -------------------------------------------
//
// Layout after the 5 magic bytes, all little-endian 64-bit floats:
// node count, n_intrinsic, volume, diameter flag, diameter value,
// weights, eigenvalues, eigenbasis row-major.

struct ModelCacheBlock {
    double n_intrinsic = 0;
    double volume = 0;
    bool has_diameter = false;
    double diameter = 0;
    Vector weights;
    Vector eigenvalues;
    Matrix eigenbasis;
};

void write_model_cache(const SpectralModel& model, const std::filesystem::path& path);
ModelCacheBlock read_model_cache(const std::filesystem::path& path);

// Graph builder that reuses a cached eigendecomposition when a block keyed
// by `key` exists under cache_dir (the only builder whose spectral data is
// expensive to recompute).
ModelPtr build_graph_model_cached(const Vector& node_masses,
                                  const std::vector<GraphEdge>& edges,
                                  int n_intrinsic,
                                  const std::filesystem::path& cache_dir,
                                  const std::string& key);

}  // namespace nmp
