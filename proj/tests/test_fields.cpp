#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "lightcone/quadrature.hpp"
#include "lightcone/scalar_field.hpp"
#include "lightcone/spherical_harmonics.hpp"

using namespace lightcone;

namespace {
std::shared_ptr<const SphereTransform> small_transform(int lmax = 16) {
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

TEST_CASE("gradient of coordinate restrictions") {
    for (int n : {2, 3}) {
        const ScalarField f = make_coordinate(n, n);  // x_{n+1}
        Rng rng(23 + n);
        for (int trial = 0; trial < 40; ++trial) {
            const SpherePoint x = random_sphere_point(rng, n);
            const double g2 = f.gradient(x).squaredNorm();
            CHECK(g2 == doctest::Approx(1.0 - x[n] * x[n]).epsilon(1e-12));
        }
        const ScalarField c = make_constant(3.25, n);
        const SpherePoint x = random_sphere_point(rng, n);
        CHECK(c.gradient(x).norm() == doctest::Approx(0.0));
    }
    // f = x1 at the north pole of S^2 -> (1, 0, 0)
    const ScalarField fx1 = make_coordinate(0, 2);
    const Vec g = fx1.gradient(north_pole(2));
    CHECK(g[0] == doctest::Approx(1.0));
    CHECK(std::abs(g[1]) + std::abs(g[2]) < 1e-14);
}

TEST_CASE("laplacian of eigenfields and harmonics") {
    for (int n : {2, 3}) {
        const ScalarField f = make_coordinate(n, n);
        Rng rng(5 + n);
        for (int trial = 0; trial < 30; ++trial) {
            const SpherePoint x = random_sphere_point(rng, n);
            CHECK(f.laplacian(x) == doctest::Approx(-double(n) * x[n]).epsilon(1e-12));
        }
    }
    // degree-2 harmonic x1 x2 on S^2: eigenvalue -6
    const ScalarField h = make_expression_field("x1*x2", 2);
    Rng rng(9);
    for (int trial = 0; trial < 30; ++trial) {
        const SpherePoint x = random_sphere_point(rng, 2);
        CHECK(h.laplacian(x) == doctest::Approx(-6.0 * x[0] * x[1]).epsilon(1e-11));
    }
}

TEST_CASE("gradients are tangential for every representation") {
    Rng rng(31);
    auto tr = small_transform();
    const ScalarField fields[] = {
        make_expression_field("exp(x3)*x1 + cos(x2)", 2),
        make_obata_field((Vec(4) << -std::cosh(0.7), 0.2, std::sqrt(std::sinh(0.7) *
                          std::sinh(0.7) - 0.04), 0.0).finished(), 2.0),
        random_spectral(rng, tr, 5, 0.4),
        make_callable_field([](const SpherePoint& x) { return std::sin(x[2]) * x[0]; }, 2)};
    for (const auto& f : fields) {
        for (int trial = 0; trial < 25; ++trial) {
            const SpherePoint x = random_sphere_point(rng, 2);
            const Vec g = f.gradient(x);
            const double tol = f.analytic() ? 1e-8 : 10.0 * FdSettings{}.gradient_step;
            CHECK(std::abs(g.dot(x.coords())) < tol);
        }
    }
}

TEST_CASE("finite-difference oracle matches analytic paths") {
    Rng rng(41);
    const ScalarField f = make_expression_field("exp(x3) * (1 + x1*x2) - sinh(x2)", 2);
    for (int trial = 0; trial < 25; ++trial) {
        const SpherePoint x = random_sphere_point(rng, 2);
        const Vec g_fd = f.fd_gradient(x);
        const Vec g_an = f.gradient(x);
        CHECK((g_fd - g_an).norm() < 1e-8);
        CHECK(f.fd_laplacian(x) == doctest::Approx(f.laplacian(x)).epsilon(1e-6));
    }
}

TEST_CASE("fd laplacian vs spectral laplacian at h = 1e-4, order 2") {
    Rng rng(43);
    auto tr = small_transform();
    const ScalarField f = random_spectral(rng, tr, 6, 0.5);
    for (int trial = 0; trial < 20; ++trial) {
        const SpherePoint x = random_sphere_point(rng, 2);
        const double fd = f.fd_laplacian(x, 1e-4, 2);
        CHECK(std::abs(fd - f.laplacian(x)) < 1e-5);
    }
}

TEST_CASE("composed fields carry the chain rule") {
    Rng rng(47);
    const ScalarField f = make_expression_field("0.3*x3 + 0.1*x1*x2", 2);
    const ScalarField ef = exp_scaled(f, -1.0);  // e^{-f}
    for (int trial = 0; trial < 20; ++trial) {
        const SpherePoint x = random_sphere_point(rng, 2);
        CHECK(ef.value(x) == doctest::Approx(std::exp(-f.value(x))).epsilon(1e-14));
        CHECK((ef.gradient(x) - ef.fd_gradient(x)).norm() < 1e-8);
        CHECK(ef.laplacian(x) == doctest::Approx(ef.fd_laplacian(x)).epsilon(1e-5));
    }
}

TEST_CASE("sphere quadrature: weight sums match surface measures") {
    const QuadratureRule s2 = sphere_quadrature(2, 48);
    CHECK(std::abs(s2.total_weight() - 4 * M_PI) < 1e-10 * 4 * M_PI);
    const QuadratureRule s3 = sphere_quadrature(3, 32);
    CHECK(std::abs(s3.total_weight() - 2 * M_PI * M_PI) < 1e-10 * 2 * M_PI * M_PI);
    const QuadratureRule s4 = sphere_quadrature(4, 24);
    CHECK(std::abs(s4.total_weight() - 8 * M_PI * M_PI / 3) < 1e-10 * 8 * M_PI * M_PI / 3);
    for (double w : s2.weights) CHECK(w > 0.0);
    for (double w : s3.weights) CHECK(w > 0.0);
}

TEST_CASE("sphere quadrature: odd symmetry and second moment") {
    const QuadratureRule s2 = sphere_quadrature(2, 48);
    const ScalarField x3 = make_coordinate(2, 2);
    CHECK(std::abs(integrate(x3, s2)) < 1e-10);
    // int x3^2 over S^2 = vol/(n+1) = 4 pi / 3
    const ScalarField x3sq = make_expression_field("x3^2", 2);
    CHECK(integrate(x3sq, s2) == doctest::Approx(4 * M_PI / 3).epsilon(1e-12));
    // same moment on S^3: 2 pi^2 / 4
    const QuadratureRule s3 = sphere_quadrature(3, 32);
    const ScalarField x4sq = make_expression_field("x4^2", 3);
    CHECK(integrate(x4sq, s3) == doctest::Approx(2 * M_PI * M_PI / 4).epsilon(1e-10));
}

TEST_CASE("integrate rejects mismatched inputs") {
    const QuadratureRule s2 = sphere_quadrature(2, 16);
    std::vector<double> too_short(s2.nodes.size() - 1, 1.0);
    CHECK_THROWS_AS(integrate(too_short, s2), std::invalid_argument);
    const ScalarField f3 = make_constant(1.0, 3);
    CHECK_THROWS_AS(integrate(f3, s2), std::invalid_argument);
    std::vector<double> ones(s2.nodes.size(), 1.0);
    CHECK(integrate(ones, s2) == doctest::Approx(4 * M_PI));
}

TEST_CASE("divergence theorem: laplacians integrate to zero") {
    const QuadratureRule s2 = sphere_quadrature(2, 48);
    const ScalarField f = make_expression_field("exp(x3) + x1*x2*x3", 2);
    const double integral = integrate_fn(
        [&](const SpherePoint& x) { return f.laplacian(x); }, s2);
    CHECK(std::abs(integral) < 1e-8);
    Rng rng(53);
    auto tr = small_transform();
    const ScalarField g = random_spectral(rng, tr, 6, 0.6);
    const double integral_g = integrate_fn(
        [&](const SpherePoint& x) { return g.laplacian(x); }, s2);
    CHECK(std::abs(integral_g) < 1e-8);
}

TEST_CASE("spherical harmonic transform round trip") {
    Rng rng(59);
    const SphereTransform tr(32, 64, 128);
    SpectralField f(32);
    for (int l = 0; l <= 32; ++l)
        for (int m = -l; m <= l; ++m) f.at(l, m) = rng.normal();
    const SpectralField back = tr.analyze(tr.synthesize(f));
    CHECK((back.coeffs - f.coeffs).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("spectral laplacian scales degree blocks") {
    const SphereTransform tr(8, 18, 36);
    SpectralField f(8);
    f.at(1, -1) = 0.7;
    f.at(1, 0) = -0.2;
    f.at(1, 1) = 1.1;
    const SpectralField lap = sh_laplacian(f);
    CHECK(lap.at(1, -1) == doctest::Approx(-2.0 * 0.7));
    CHECK(lap.at(1, 0) == doctest::Approx(0.4));
    CHECK(lap.at(1, 1) == doctest::Approx(-2.2));
    CHECK(lap.at(0, 0) == 0.0);
}

TEST_CASE("x3 analyzed: one coefficient, value checked by quadrature") {
    const SphereTransform tr(8, 18, 36);
    Mat vals(tr.ntheta(), tr.nphi());
    for (int i = 0; i < tr.ntheta(); ++i)
        for (int j = 0; j < tr.nphi(); ++j) vals(i, j) = tr.grid_point(i, j)[2];
    const SpectralField c = tr.analyze(vals);
    // oracle: c_{1,0} = int x3 Y_{1,0} dV, computed by an independent rule
    const QuadratureRule rule = sphere_quadrature(2, 40);
    const double oracle = integrate_fn(
        [&](const SpherePoint& x) {
            return x[2] * std::sqrt(3.0 / (4.0 * M_PI)) * x[2];
        },
        rule);
    CHECK(oracle == doctest::Approx(std::sqrt(4.0 * M_PI / 3.0)).epsilon(1e-12));
    for (int l = 0; l <= 8; ++l)
        for (int m = -l; m <= l; ++m) {
            const double expect = (l == 1 && m == 0) ? oracle : 0.0;
            CHECK(std::abs(c.at(l, m) - expect) < 1e-12);
        }
}

TEST_CASE("spectral point evaluation and gradient") {
    Rng rng(61);
    auto tr = small_transform();
    const ScalarField f = random_spectral(rng, tr, 6, 0.5);
    for (int trial = 0; trial < 25; ++trial) {
        const SpherePoint x = random_sphere_point(rng, 2);
        if (std::abs(x[2]) > 0.995) continue;  // stay off the chart poles
        const Vec g_an = f.gradient(x);
        const Vec g_fd = f.fd_gradient(x);
        CHECK((g_an - g_fd).norm() < 1e-8);
    }
}

TEST_CASE("coefficient file round trip") {
    Rng rng(67);
    SpectralField f(5);
    for (int i = 0; i < f.coeffs.size(); ++i) f.coeffs[i] = rng.normal();
    std::stringstream ss;
    write_spectral_field(ss, f);
    std::string header;
    std::getline(ss, header);
    CHECK(header == "shcoeffs n=2 lmax=5");
    ss.seekg(0);
    const SpectralField back = read_spectral_field(ss);
    CHECK(back.lmax == 5);
    CHECK((back.coeffs - f.coeffs).cwiseAbs().maxCoeff() == 0.0);  // exact text round trip
    std::stringstream bad("shcoeffs n=3 lmax=2\n");
    CHECK_THROWS(read_spectral_field(bad));
}

TEST_CASE("transform rejects grids too coarse for the band limit") {
    CHECK_THROWS_AS(SphereTransform(16, 10, 64), std::invalid_argument);
    CHECK_THROWS_AS(SphereTransform(16, 32, 20), std::invalid_argument);
}
