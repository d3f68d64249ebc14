#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "nmp/harness.hpp"
#include "nmp/model.hpp"
#include "nmp/norms.hpp"

using namespace nmp;

namespace {
constexpr double kPi = std::numbers::pi;

ScalarField sin_axis0(const ModelPtr& t) {
    Vector vals(t->node_count());
    for (Index i = 0; i < t->node_count(); ++i) vals[i] = std::sin(2.0 * kPi * t->nodes(i, 0));
    return ScalarField{t, vals};
}
}  // namespace

TEST_CASE("average") {
    ModelPtr t3 = build_torus(3, 8, 1.0);
    CHECK(average(constant_field(t3, -2.25)) == doctest::Approx(-2.25).epsilon(1e-15));

    ScalarField phi1{t3, t3->eigenbasis.col(1)};
    CHECK(std::abs(average(phi1)) <= 1e-10);

    ScalarField u = sin_axis0(t3);
    u.values.array() += 2.0;
    CHECK(average(u) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("starred norms") {
    ModelPtr t3 = build_torus(3, 8, 1.0);
    for (double p : {1.0, 2.0, 3.5, 64.0})
        CHECK(norm_star(constant_field(t3, -3.0), p) == doctest::Approx(3.0).epsilon(1e-13));

    CHECK(norm_star(constant_field(t3, 1.0), 2.0) == doctest::Approx(1.0).epsilon(1e-14));

    ScalarField u = sin_axis0(t3);
    CHECK(norm_star(u, 2.0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-10));

    CHECK_THROWS_AS(norm_star(u, 0.5), UsageError);

    // p = inf is the node max of |.|
    CHECK(norm_star(u, kInfExponent) == ess_sup_abs(u));
    NormReport rep = norm_report(u, kInfExponent, true);
    CHECK(rep.value == ess_sup_abs(u));
}

TEST_CASE("vector norms") {
    ModelPtr t3 = build_torus(3, 8, 1.0);
    CHECK(norm_star_vec(zero_vector_field(t3), 2.0) == 0.0);

    // |grad sin(2 pi x_1)| = 2 pi |cos(2 pi x_1)|, mean square (2 pi)^2 / 2
    VectorField g = gradient(sin_axis0(t3));
    CHECK(norm_star_vec(g, 2.0) == doctest::Approx(2.0 * kPi / std::sqrt(2.0)).epsilon(1e-8));

    // constant-length field: |Phi| = c for every p
    Vector c1 = Vector::Constant(t3->node_count(), 0.6);
    Vector c2 = Vector::Constant(t3->node_count(), 0.8);
    VectorField constant_len{t3, {c1, c2, Vector::Zero(t3->node_count())}};
    for (double p : {1.0, 2.0, 7.0})
        CHECK(norm_star_vec(constant_len, p) == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("positive and negative parts") {
    ModelPtr t3 = build_torus(3, 16, 1.0);

    auto [p1, n1] = pos_neg_parts(constant_field(t3, -3.0));
    CHECK(p1.values.maxCoeff() == 0.0);
    CHECK(n1.values.minCoeff() == -3.0);
    auto [p2, n2] = pos_neg_parts(constant_field(t3, 5.0));
    CHECK(p2.values.maxCoeff() == 5.0);
    CHECK(n2.values.minCoeff() == 0.0);

    // u+ + u- = u and the parts of sin split symmetrically. The grid value
    // converges to int_0^1 max(sin 2 pi x, 0) dx = 1/pi at O(m^-2) (kinked
    // integrand), so the continuum comparison carries an O(m^-2) envelope
    // while the grid oracle is matched to machine precision.
    ScalarField u = sin_axis0(t3);
    auto [up, un] = pos_neg_parts(u);
    CHECK((up.values + un.values - u.values).cwiseAbs().maxCoeff() == 0.0);
    CHECK(up.values.minCoeff() >= 0.0);
    CHECK(un.values.maxCoeff() <= 0.0);

    int m = 16;
    double oracle = 0.0;
    for (int j = 0; j < m; ++j) oracle += std::max(std::sin(2.0 * kPi * j / m), 0.0) / m;
    double np = norm_star(up, 1.0), nn = norm_star(un, 1.0);
    CHECK(np == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(nn == doctest::Approx(oracle).epsilon(1e-12));
    CHECK(std::abs(np - 1.0 / kPi) <= 2.0 / (m * m));
}

TEST_CASE("essential supremum") {
    ModelPtr t3 = build_torus(3, 8, 1.0);
    CHECK(ess_sup(constant_field(t3, -1.5)) == -1.5);

    ScalarField phi1{t3, t3->eigenbasis.col(1)};
    CHECK(std::abs(ess_sup(phi1) + phi1.values.minCoeff()) <= 1e-9);

    ScalarField neg = constant_field(t3, -2.0);
    CHECK(ess_sup(pos_neg_parts(neg).first) == 0.0);
}

TEST_CASE("starred Hoelder") {
    ModelPtr t3 = build_torus(3, 8, 1.0);

    auto [l1, r1] = holder_star(constant_field(t3, 1.0), constant_field(t3, 1.0), 2.0, 2.0);
    CHECK(l1 == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(r1 == doctest::Approx(1.0).epsilon(1e-14));

    ScalarField a1{t3, t3->eigenbasis.col(1).cwiseAbs()};
    auto [l2, r2] = holder_star(a1, a1, 2.0, 2.0);
    CHECK(std::abs(l2 - r2) <= 1e-10 * r2);  // Cauchy-Schwarz equality case

    for (std::uint64_t s = 0; s < 100; ++s) {
        ScalarField f1 = random_field(t3, 20, 500 + s, false);
        ScalarField f2 = random_field(t3, 20, 900 + s, false);
        auto [lhs, rhs] = holder_star(f1, f2, 3.0, 1.5);
        CHECK(lhs <= rhs + 1e-12 * std::max(1.0, rhs));
    }

    CHECK_THROWS_AS(holder_star(a1, a1, 3.0, 2.0), UsageError);
}

TEST_CASE("norm monotonicity in p") {
    for (const std::string& spec : {"torus:3:6:1", "sphere3:32", "graph:cycle:10"}) {
        ModelPtr model = parse_model_spec(spec);
        Index band = std::min<Index>(model->mode_count() - 1, 10);
        for (std::uint64_t s = 0; s < 20; ++s) {
            ScalarField u = random_field(model, band, 3000 + s, false);
            double prev = 0.0;
            for (double p : {1.0, 1.5, 2.0, 3.0, 5.0, 8.0}) {
                double np = norm_star(u, p);
                CHECK(np >= prev - 1e-12 * std::max(1.0, np));
                prev = np;
            }
        }
    }
}

TEST_CASE("norm approaches the sup as p grows (diagnostic)") {
    // At p = 64 the 5% window needs the near-max set to carry a few percent
    // of the volume; single-mode fields have codimension-1 level sets and
    // qualify on these grid sizes, generic 3D band-limited fields peak on
    // O(1) nodes and sit farther below the sup.
    ModelPtr t3 = build_torus(3, 8, 1.0);
    for (std::uint64_t s = 0; s < 10; ++s) {
        ScalarField u = random_field(t3, 1, 4000 + s);
        double sup = ess_sup_abs(u);
        double n64 = norm_star(u, 64.0);
        CHECK(n64 <= sup * (1.0 + 1e-12));
        CHECK(n64 >= 0.95 * sup);
        CHECK(norm_star(u, 8.0) <= norm_star(u, 32.0) + 1e-12);
        CHECK(norm_star(u, 32.0) <= n64 + 1e-12);
    }
}

TEST_CASE("norm scaling") {
    ModelPtr t3 = build_torus(3, 6, 1.0);
    ScalarField u = random_field(t3, 12, 77, false);
    for (double c : {-4.0, 0.5, 3.0}) {
        ScalarField cu{t3, c * u.values};
        for (double p : {1.0, 2.0, 5.0})
            CHECK(norm_star(cu, p) == doctest::Approx(std::abs(c) * norm_star(u, p)).epsilon(1e-13));
    }
}
