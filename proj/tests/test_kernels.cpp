#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>
#include <filesystem>

#include "nmp/harness.hpp"
#include "nmp/kernels.hpp"
#include "nmp/model.hpp"
#include "nmp/norms.hpp"

using namespace nmp;

namespace {

// Stiffness matrix straight from the edge list (independent of the model's
// eigendecomposition).
Matrix stiffness_of(const SpectralModel& model) {
    const Index n = model.node_count();
    Matrix K = Matrix::Zero(n, n);
    for (const auto& e : model.graph->edges) {
        K(e.a, e.a) += e.conductance;
        K(e.b, e.b) += e.conductance;
        K(e.a, e.b) -= e.conductance;
        K(e.b, e.a) -= e.conductance;
    }
    return K;
}

// Weighted pseudoinverse oracle: G0 = P K^+ P^T with P = I - 1 w^T / vol,
// K^+ from an SVD: a fully independent route to the Green matrix.
Matrix green_pinv_oracle(const SpectralModel& model) {
    const Index n = model.node_count();
    Matrix K = stiffness_of(model);
    Eigen::JacobiSVD<Matrix> svd(K, Eigen::ComputeFullU | Eigen::ComputeFullV);
    double cutoff = 1e-10 * svd.singularValues()[0];
    Vector inv = svd.singularValues();
    for (Index i = 0; i < n; ++i) inv[i] = inv[i] > cutoff ? 1.0 / inv[i] : 0.0;
    Matrix Kpinv = svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
    Matrix P = Matrix::Identity(n, n) -
               Vector::Ones(n) * model.weights.transpose() / model.volume;
    return P * Kpinv * P.transpose();
}

}  // namespace

TEST_CASE("heat kernel basics") {
    ModelPtr t3 = build_torus(3, 8, 1.0);
    CHECK_THROWS_AS(heat_kernel(t3, 0.0), UsageError);
    CHECK_THROWS_AS(heat_kernel(t3, -1.0), UsageError);

    for (double t : {0.01, 0.1, 1.0}) {
        KernelMatrix H = heat_kernel(t3, t);
        CHECK(H.row_sum_residual() <= 1e-10);
        CHECK(H.symmetry_residual() <= 1e-10);
    }

    // only the constant mode survives at large t
    double t_large = 41.0 / t3->lambda1();
    KernelMatrix H = heat_kernel(t3, t_large);
    CHECK((H.K.array() - 1.0 / t3->volume).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("heat kernel matches the matrix exponential on K4") {
    ModelPtr k4 = parse_model_spec("graph:k4");
    double t = 1.0;
    KernelMatrix H = heat_kernel(k4, t);
    Matrix L = k4->weights.cwiseInverse().asDiagonal() * stiffness_of(*k4);
    Matrix expL = (-t * L).exp();
    Matrix H_oracle = expL * k4->weights.cwiseInverse().asDiagonal();
    CHECK((H.K - H_oracle).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("heat kernel positivity on connected graphs") {
    for (const std::string& spec :
         {"graph:k4", "graph:cycle:12", "graph:dumbbell:6:6", "graph:ring:40:20:3"}) {
        ModelPtr g = parse_model_spec(spec);
        CAPTURE(spec);
        double most_negative = 0.0;
        for (double t : {0.01, 0.1, 1.0, 10.0, 100.0}) {
            KernelMatrix H = heat_kernel(g, t);
            most_negative = std::min(most_negative, H.K.minCoeff());
        }
        CHECK(most_negative > -1e-12);
    }
}

TEST_CASE("centered kernel") {
    ModelPtr t3 = build_torus(3, 8, 1.0);
    for (double t : {0.01, 0.1, 1.0}) {
        KernelMatrix G = centered_kernel(t3, t);
        CHECK(G.row_sum_residual() <= 1e-10);
        // G(x,x,t) > 0 on connected models
        CHECK(G.K.diagonal().minCoeff() > 0.0);
    }
    ModelPtr c8 = parse_model_spec("graph:cycle:8");
    for (double t : {0.01, 0.1, 1.0})
        CHECK(centered_kernel(c8, t).K.diagonal().minCoeff() > 0.0);

    KernelMatrix G = centered_kernel(t3, 41.0 / t3->lambda1());
    CHECK(G.K.cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("green function vs pseudoinverse oracle") {
    // ten random connected graphs up to 200 nodes
    for (std::uint64_t s = 0; s < 10; ++s) {
        Index n = 20 + static_cast<Index>(18 * s);
        ModelPtr g = random_connected_graph(n, 2 * n, 1000 + s);
        CAPTURE(n);
        KernelMatrix G0 = green_function(g);
        Matrix oracle = green_pinv_oracle(*g);
        CHECK((G0.K - oracle).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("representation formulas") {
    ModelPtr t3 = build_torus(3, 8, 1.0);
    ModelPtr s3 = build_zonal_sphere3(128);
    for (const ModelPtr& model : {t3, s3}) {
        KernelMatrix G0 = green_function(model);
        Index band = std::min<Index>(model->mode_count() - 1, 24);
        for (std::uint64_t s = 0; s < 20; ++s) {
            ScalarField u = random_field(model, band, 5000 + s, false);
            double scale = ess_sup_abs(u);
            double um = average(u);

            // u = u_M - int G0(x,.) Delta u
            ScalarField lap = apply_laplacian(u);
            Vector rec = Vector::Constant(model->node_count(), um) -
                         G0.K * model->weights.cwiseProduct(lap.values);
            CHECK((rec - u.values).cwiseAbs().maxCoeff() <= 1e-8 * scale);

            // u = u_M + int grad_y G0(x,y) . grad u(y)
            VectorField gu = gradient(u);
            Vector rec2(model->node_count());
            for (Index x = 0; x < model->node_count(); ++x) {
                ScalarField row{model, G0.K.row(x).transpose()};
                VectorField gr = gradient(row);
                double acc = um;
                for (size_t a = 0; a < gr.components.size(); ++a)
                    acc += model->weights.cwiseProduct(gr.components[a]).dot(gu.components[a]);
                rec2[x] = acc;
            }
            CHECK((rec2 - u.values).cwiseAbs().maxCoeff() <= 1e-8 * scale);
        }
    }
}

TEST_CASE("green by time integral") {
    ModelPtr t3 = build_torus(3, 8, 1.0);
    KernelMatrix G0 = green_function(t3);

    TimeIntegralOptions opts;
    opts.t_max = 40.0 / t3->lambda1();
    opts.panels = 2000;
    TimeIntegralResult res = green_by_time_integral(t3, opts);
    double diff = (res.kernel.K - G0.K).cwiseAbs().maxCoeff();
    CHECK(diff <= 1e-6);
    CHECK(diff <= res.error_bound);  // the bound certifies the result

    // single-mode toy model: with t_max pushed to zero everything sits in the
    // analytic tail and the scalar integral formula phi phi^T / lambda is exact
    ModelPtr two = build_graph_model(Vector::Ones(2), {{0, 1, 1.0}}, 3);
    KernelMatrix g2 = green_function(two);
    TimeIntegralOptions o2{1e-8, 50, 4.0, true};
    TimeIntegralResult r2 = green_by_time_integral(two, o2);
    CHECK((r2.kernel.K - g2.K).cwiseAbs().maxCoeff() <= 1e-12);
    Matrix direct = two->eigenbasis.col(1) * two->eigenbasis.col(1).transpose() /
                    two->eigenvalues[1];
    CHECK((r2.kernel.K - direct).cwiseAbs().maxCoeff() <= 1e-12);

    // without the analytic tail the truncation error decreases as t_max grows
    double prev = std::numeric_limits<double>::infinity();
    for (double tmax : {opts.t_max / 4, opts.t_max / 2, opts.t_max}) {
        TimeIntegralOptions on{tmax, 2000, 4.0, false};
        double err = (green_by_time_integral(t3, on).kernel.K - G0.K).cwiseAbs().maxCoeff();
        CHECK(err < prev);
        prev = err;
    }

    // insufficient panels are visible in the reported bound
    TimeIntegralOptions coarse{opts.t_max, 20, 4.0, true};
    CHECK(green_by_time_integral(t3, coarse).error_bound > 1e-6);

    CHECK_THROWS_AS(green_by_time_integral(t3, TimeIntegralOptions{1.0, 100, 2.0, true}),
                    UsageError);
    CHECK_THROWS_AS(green_by_time_integral(t3, TimeIntegralOptions{-1.0, 100, 4.0, true}),
                    UsageError);
}

TEST_CASE("kernel identities") {
    ModelPtr t3 = build_torus(3, 8, 1.0);
    KernelIdentityReport rep = kernel_identities(t3, 0.05, 0.05);
    CHECK(rep.semigroup_residual <= 1e-10);
    CHECK(rep.symmetry_residual <= 1e-10);
    CHECK(rep.centering_residual <= 1e-10);
    CHECK(rep.stochasticity_residual <= 1e-10);
    KernelIdentityReport rep2 = kernel_identities(t3, 0.1, 0.05);
    CHECK(rep2.square_residual <= 1e-10);

    ModelPtr k4 = parse_model_spec("graph:k4");
    CHECK(kernel_identities(k4, 0.3, 0.2).max() <= 1e-10);

    // heat semigroup composed under the weighted product
    KernelMatrix Ht = heat_kernel(t3, 0.07), Hs = heat_kernel(t3, 0.11);
    KernelMatrix Hts = heat_kernel(t3, 0.18);
    CHECK((compose(Ht, Hs) - Hts.K).cwiseAbs().maxCoeff() <= 1e-10);

    // G(x,x,t) decreasing in t
    std::vector<double> ts{0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
    for (size_t i = 0; i + 1 < ts.size(); ++i) {
        Vector d0 = centered_kernel(t3, ts[i]).K.diagonal();
        Vector d1 = centered_kernel(t3, ts[i + 1]).K.diagonal();
        CHECK((d1 - d0).maxCoeff() <= 1e-12);
    }
}

TEST_CASE("green function inverts the laplacian off constants") {
    for (const std::string& spec : {"torus:3:6:1", "sphere3:48", "graph:cycle:16"}) {
        ModelPtr model = parse_model_spec(spec);
        CAPTURE(spec);
        KernelMatrix G0 = green_function(model);
        Index band = std::min<Index>(model->mode_count() - 1, 12);
        for (std::uint64_t s = 0; s < 5; ++s) {
            ScalarField u = random_field(model, band, 7000 + s, false);
            double um = average(u);
            // -G0 W Delta u = u - u_M
            Vector a = -G0.K * model->weights.cwiseProduct(apply_laplacian(u).values);
            CHECK((a - (u.values.array() - um).matrix()).cwiseAbs().maxCoeff() <=
                  1e-9 * std::max(1.0, ess_sup_abs(u)));
            // -Delta (G0 W u) = u - u_M
            ScalarField gu{model, G0.K * model->weights.cwiseProduct(u.values)};
            Vector b = -apply_laplacian(gu).values;
            CHECK((b - (u.values.array() - um).matrix()).cwiseAbs().maxCoeff() <=
                  1e-9 * std::max(1.0, ess_sup_abs(u)));
        }
    }
}

TEST_CASE("green lower bound check") {
    ModelPtr t3 = build_torus(3, 8, 1.0);
    VerificationRecord rec = green_lower_bound_check(t3, 0.3149802624737183, "slab");
    CHECK(rec.pass);
    CHECK(rec.slack >= 1.0);
    CHECK(rec.details.at("min_offdiag_G0") < 0.0);

    ModelPtr two = build_graph_model(Vector::Ones(2), {{0, 1, 1.0}}, 3);
    VerificationRecord rec2 = green_lower_bound_check(two, 1000.0);
    CHECK(rec2.pass);
    CHECK(std::isfinite(rec2.slack));

    CHECK_THROWS_AS(green_lower_bound_check(t3, 0.0), UsageError);
}

TEST_CASE("kernel export block round trip") {
    namespace fs = std::filesystem;
    ModelPtr k4 = parse_model_spec("graph:k4");
    KernelMatrix G0 = green_function(k4);
    fs::path file = fs::temp_directory_path() / "nmp_kernel_test.nmpk";
    write_kernel_block(G0, file);
    KernelMatrix back = read_kernel_block(file, k4);
    CHECK(back.kind == KernelKind::Green);
    CHECK(back.K == G0.K);  // bit-exact
    fs::remove(file);

    CHECK_THROWS_AS(read_kernel_block(fs::temp_directory_path() / "missing.nmpk"), UsageError);
}

