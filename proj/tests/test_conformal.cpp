#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "lightcone/conformal.hpp"
#include "lightcone/quadrature.hpp"

using namespace lightcone;

namespace {
std::shared_ptr<const SphereTransform> small_transform(int lmax = 12) {
    return std::make_shared<const SphereTransform>(lmax, 2 * (lmax + 1), 4 * (lmax + 1));
}

ScalarField random_spectral(Rng& rng, std::shared_ptr<const SphereTransform> tr, int lact,
                            double amp) {
    SpectralField f(tr->lmax());
    for (int l = 0; l <= lact; ++l)
        for (int m = -l; m <= l; ++m) f.at(l, m) = rng.normal() / ((1.0 + l) * (1.0 + l));
    const Mat g = tr->synthesize(f);
    f.coeffs *= amp / g.cwiseAbs().maxCoeff();
    return make_spectral_field(tr, f);
}
}  // namespace

TEST_CASE("obata parameter validation") {
    LorentzVec good(4);
    good << -std::cosh(0.5), std::sinh(0.5), 0, 0;
    CHECK_NOTHROW(ObataParameters(good, 2.0));
    CHECK_THROWS_AS(ObataParameters(good, -1.0), std::invalid_argument);
    LorentzVec future = -good;  // v0 > 0
    CHECK_THROWS_AS(ObataParameters(future, 1.0), std::invalid_argument);
    LorentzVec not_unit(4);
    not_unit << -2.0, 0, 0, 0;
    CHECK_THROWS_AS(ObataParameters(not_unit, 1.0), std::invalid_argument);
    // denominator bound |v0| - sqrt(v0^2 - 1) > 0 over the whole sphere
    Rng rng(2);
    const ObataParameters p = random_obata_parameters(rng, 2, 1.5);
    const double bound = -p.v[0] - std::sqrt(p.v[0] * p.v[0] - 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const SpherePoint x = random_sphere_point(rng, 2);
        const double denom = -p.v[0] + p.v.tail(3).dot(x.coords());
        CHECK(denom >= bound - 1e-12);
        CHECK(denom > 0.0);
    }
}

TEST_CASE("obata field closed forms") {
    LorentzVec e0(4);
    e0 << -1, 0, 0, 0;
    const ScalarField f1 = obata_field(ObataParameters(e0, 1.0));
    const ScalarField f4 = obata_field(ObataParameters(e0, 4.0));
    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const SpherePoint x = random_sphere_point(rng, 2);
        CHECK(f1.value(x) == doctest::Approx(0.0));
        CHECK(f4.value(x) == doctest::Approx(std::log(0.5)));
    }
}

TEST_CASE("scalar curvature: round metric, tilt field, solution family") {
    const SpherePoint np = north_pole(2);
    CHECK(scalar_curvature(make_constant(0.0, 2), np) == doctest::Approx(2.0));
    // f = x3 at the north pole: S = 6 / e^2
    CHECK(scalar_curvature(make_coordinate(2, 2), np) ==
          doctest::Approx(6.0 / std::exp(2.0)).epsilon(1e-12));
    Rng rng(5);
    for (int n : {2, 3}) {
        for (int draw = 0; draw < 20; ++draw) {
            const ObataParameters p = random_obata_parameters(rng, n);
            const ScalarField f = obata_field(p);
            for (int trial = 0; trial < 10; ++trial) {
                const SpherePoint x = random_sphere_point(rng, n);
                CHECK(scalar_curvature(f, x) ==
                      doctest::Approx(n * (n - 1.0) * p.k).epsilon(1e-11));
            }
        }
    }
}

TEST_CASE("squared mean curvature: poles and the vanishing circle") {
    for (int n : {2, 3}) {
        const ScalarField f = make_coordinate(n, n);
        CHECK(mean_curvature_sq(f, north_pole(n)) ==
              doctest::Approx(3.0 / std::exp(2.0)).epsilon(1e-13));
        CHECK(mean_curvature_sq(f, south_pole(n)) ==
              doctest::Approx(-std::exp(2.0)).epsilon(1e-13));
        CHECK(mean_curvature_sq(make_constant(0.0, n), north_pole(n)) == doctest::Approx(1.0));
    }
    // n = 2: <H,H> = (2 x3 + 1) e^{-2 x3}; zero where x3 = -1/2
    const ScalarField f = make_coordinate(2, 2);
    Rng rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const SpherePoint x = random_sphere_point(rng, 2);
        CHECK(mean_curvature_sq(f, x) ==
              doctest::Approx((2 * x[2] + 1) * std::exp(-2 * x[2])).epsilon(1e-12));
    }
    Vec half(3);
    half << std::sqrt(3.0) / 2.0, 0.0, -0.5;
    CHECK(std::abs(mean_curvature_sq(f, SpherePoint(half))) < 1e-13);
}

TEST_CASE("graph equation residual: solutions and the tilt example") {
    CHECK(graph_cmc_residual(make_constant(0.0, 2), 1.0, north_pole(2)) == doctest::Approx(0.0));
    // f = x3, k = 1, n = 2 at the north pole: residual = 2 e^2 - 6
    CHECK(graph_cmc_residual(make_coordinate(2, 2), 1.0, north_pole(2)) ==
          doctest::Approx(2 * std::exp(2.0) - 6.0).epsilon(1e-13));
    CHECK_THROWS_AS(graph_cmc_residual(make_constant(0.0, 2), -1.0, north_pole(2)),
                    std::invalid_argument);
    Rng rng(11);
    for (int n : {2, 3}) {
        for (int draw = 0; draw < 20; ++draw) {
            const ObataParameters p = random_obata_parameters(rng, n);
            const ScalarField f = obata_field(p);
            for (int trial = 0; trial < 10; ++trial) {
                const SpherePoint x = random_sphere_point(rng, n);
                CHECK(std::abs(graph_cmc_residual(f, p.k, x)) < 1e-9);
            }
        }
    }
}

TEST_CASE("residual routes agree: n (k - <H,H>) e^{2f}") {
    Rng rng(13);
    auto tr = small_transform();
    for (int draw = 0; draw < 10; ++draw) {
        const ScalarField f = random_spectral(rng, tr, 5, 0.5);
        const double k = std::exp(rng.uniform(-1.0, 1.0));
        for (int trial = 0; trial < 10; ++trial) {
            const SpherePoint x = random_sphere_point(rng, 2);
            CHECK(graph_cmc_residual(f, k, x) ==
                  doctest::Approx(graph_cmc_residual_via_mean_curvature(f, k, x))
                      .epsilon(1e-10));
        }
    }
}

TEST_CASE("n = 2: gradient term drops out of the residual") {
    Rng rng(17);
    const ScalarField f = make_expression_field("0.4*x3 + 0.2*x1*x2 - 0.1*x2", 2);
    for (int trial = 0; trial < 40; ++trial) {
        const SpherePoint x = random_sphere_point(rng, 2);
        const double k = 1.7;
        const double direct =
            2.0 * f.laplacian(x) - 2.0 * (1.0 - k * std::exp(2.0 * f.value(x)));
        CHECK(graph_cmc_residual(f, k, x) == doctest::Approx(direct).epsilon(1e-14));
    }
}

TEST_CASE("classical equation for h: solution family, constants") {
    Rng rng(19);
    for (int n : {2, 3}) {
        for (int draw = 0; draw < 15; ++draw) {
            const ObataParameters p = random_obata_parameters(rng, n);
            Vec vbar = p.v.tail(n + 1);
            const ScalarField h = make_linear(-p.v[0], vbar);
            for (int trial = 0; trial < 10; ++trial) {
                const SpherePoint x = random_sphere_point(rng, n);
                CHECK(std::abs(obata_equation_residual(h, x)) < 1e-12);
            }
        }
        CHECK(obata_equation_residual(make_constant(1.0, n), north_pole(n)) ==
              doctest::Approx(0.0));
        // plugging h = 2 into the equation: residual = 0 - (n/4)(1 - 4) = +3n/4
        CHECK(obata_equation_residual(make_constant(2.0, n), north_pole(n)) ==
              doctest::Approx(3.0 * n / 4.0));
    }
    const ScalarField hneg = make_constant(-1.0, 2);
    CHECK_THROWS_AS(obata_equation_residual(hneg, north_pole(2)), std::domain_error);
}

TEST_CASE("h-substitution consistency: fixed proportionality factor") {
    // Regression value: with h = e^{-f},
    //   obata_equation_residual(h) = -(e^{-f}/2) * graph_cmc_residual(f, 1).
    Rng rng(23);
    auto tr = small_transform();
    int checked = 0;
    for (int draw = 0; draw < 10; ++draw) {
        const ScalarField f = random_spectral(rng, tr, 4, 0.6);
        const ScalarField h = exp_scaled(f, -1.0);
        for (int trial = 0; trial < 10; ++trial) {
            const SpherePoint x = random_sphere_point(rng, 2);
            const double lhs = obata_equation_residual(h, x);
            const double rhs = -0.5 * std::exp(-f.value(x)) * graph_cmc_residual(f, 1.0, x);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
            ++checked;
        }
    }
    CHECK(checked == 100);
}

TEST_CASE("family closure under k") {
    Rng rng(29);
    const ObataParameters p = random_obata_parameters(rng, 2, 1.0);
    const ScalarField fk = obata_field(p);
    const ScalarField f1 = obata_field(ObataParameters(p.v, 1.0));
    for (int trial = 0; trial < 30; ++trial) {
        const SpherePoint x = random_sphere_point(rng, 2);
        CHECK(fk.value(x) ==
              doctest::Approx(f1.value(x) - 0.5 * std::log(p.k)).epsilon(1e-13));
    }
}

TEST_CASE("pointwise identity S = n(n-1) <H,H> across representations") {
    Rng rng(31);
    auto tr = small_transform();
    const ScalarField fields[] = {
        make_expression_field("0.3*exp(x3) - 0.2*x1", 2), random_spectral(rng, tr, 6, 0.5),
        obata_field(random_obata_parameters(rng, 2)),
        make_callable_field([](const SpherePoint& x) { return 0.25 * std::sin(x[1] + x[2]); },
                            2)};
    for (const auto& f : fields) {
        const double tol = f.analytic() ? 1e-9 : 1e-5;
        for (int trial = 0; trial < 20; ++trial) {
            const SpherePoint x = random_sphere_point(rng, 2);
            const int n = 2;
            CHECK(std::abs(scalar_curvature(f, x) - n * (n - 1.0) * mean_curvature_sq(f, x)) <
                  tol);
        }
    }
}

TEST_CASE("conformal volume: constants and the solution family") {
    const QuadratureRule s2 = sphere_quadrature(2, 48);
    CHECK(conformal_volume(make_constant(0.0, 2), s2) == doctest::Approx(4 * M_PI));
    Rng rng(37);
    for (int draw = 0; draw < 5; ++draw) {
        const ObataParameters p = random_obata_parameters(rng, 2, 1.0);
        // constant-curvature-k metric on S^2 has volume 4 pi / k
        CHECK(conformal_volume(obata_field(p), s2) ==
              doctest::Approx(4 * M_PI / p.k).epsilon(1e-8));
    }
    const QuadratureRule s3 = sphere_quadrature(3, 28);
    CHECK(conformal_volume(make_constant(std::log(2.0), 3), s3) ==
          doctest::Approx(8.0 * 2 * M_PI * M_PI).epsilon(1e-10));
}

TEST_CASE("yamabe form: guards, solutions, trivial case") {
    CHECK_THROWS_AS(yamabe_residual(make_constant(1.0, 2), 1.0, north_pole(2)),
                    std::invalid_argument);
    // phi = 1, k = 1, n = 3: box phi = -3/4, residual = -3/4 + 3/4 = 0
    CHECK(yamabe_residual(make_constant(1.0, 3), 1.0, north_pole(3)) == doctest::Approx(0.0));
    Rng rng(41);
    for (int draw = 0; draw < 10; ++draw) {
        const ObataParameters p = random_obata_parameters(rng, 3);
        const ScalarField phi = yamabe_phi_from_f(obata_field(p));
        for (int trial = 0; trial < 10; ++trial) {
            const SpherePoint x = random_sphere_point(rng, 3);
            CHECK(std::abs(yamabe_residual(phi, p.k, x)) < 1e-8);
        }
    }
    const ScalarField negative = make_constant(-2.0, 3);
    CHECK_THROWS_AS(yamabe_residual(negative, 1.0, north_pole(3)), std::domain_error);
}

TEST_CASE("yamabe energy identity and volume through the p-norm") {
    // For any f on S^3 and phi = e^{f/2}:
    //   (4/(n(n-2))) E(phi)|_{k=1} = int <H_f,H_f> dV_{g_f}
    //   |phi|_p^2 = (int dV_{g_f})^{2/p}
    Rng rng(43);
    const QuadratureRule s3 = sphere_quadrature(3, 28);
    const int n = 3;
    for (int draw = 0; draw < 5; ++draw) {
        // random low-degree polynomial field with analytic derivatives
        char buf[160];
        std::snprintf(buf, sizeof buf, "%.3f*x1 + %.3f*x2*x4 + %.3f*x3 + %.3f*x1*x2",
                      rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3),
                      rng.uniform(-0.3, 0.3));
        const ScalarField f = make_expression_field(buf, 3);
        const ScalarField phi = yamabe_phi_from_f(f);
        const YamabeEnergy e = yamabe_energy(phi, 1.0, s3);
        const double lhs = 4.0 / (n * (n - 2.0)) * e.energy;
        const double rhs = integrate_fn(
            [&](const SpherePoint& x) {
                return mean_curvature_sq(f, x) * std::exp(n * f.value(x));
            },
            s3);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
        const double vol = conformal_volume(f, s3);
        const double p = 2.0 * n / (n - 2.0);
        CHECK(std::pow(e.norm_p, 2.0) ==
              doctest::Approx(std::pow(vol, 2.0 / p)).epsilon(1e-9));
    }
}

TEST_CASE("conformal report aggregates") {
    Rng rng(47);
    std::vector<SpherePoint> pts;
    for (int i = 0; i < 10; ++i) pts.push_back(random_sphere_point(rng, 2));
    const QuadratureRule s2 = sphere_quadrature(2, 32);
    const ObataParameters p = random_obata_parameters(rng, 2);
    const ConformalReport rep = conformal_report(obata_field(p), p.k, pts, s2);
    CHECK(rep.max_identity_defect < 1e-9);
    CHECK(rep.max_residual < 1e-9);
    CHECK(rep.volume == doctest::Approx(4 * M_PI / p.k).epsilon(1e-8));
    CHECK(rep.samples.size() == 10);
}
