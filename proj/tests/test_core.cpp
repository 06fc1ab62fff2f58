#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "lightcone/expression.hpp"
#include "lightcone/lorentz.hpp"
#include "lightcone/scalar_field.hpp"
#include "lightcone/sphere.hpp"

using namespace lightcone;

TEST_CASE("minkowski product: signature and axis examples") {
    const int dim = 4;
    CHECK(minkowski_dot(lorentz_axis(dim, 0), lorentz_axis(dim, 0)) == -1.0);
    CHECK(minkowski_dot(lorentz_axis(dim, 1), lorentz_axis(dim, 1)) == 1.0);
    LorentzVec nullvec(4);
    nullvec << 1, 1, 0, 0;
    CHECK(minkowski_dot(nullvec, nullvec) == 0.0);
    CHECK(minkowski_dot(lorentz_axis(dim, 0), lorentz_axis(dim, 1)) == 0.0);
    LorentzVec short3(3);
    short3 << 1, 0, 0;
    CHECK_THROWS_AS(minkowski_dot(nullvec, short3), std::invalid_argument);
}

TEST_CASE("minkowski product: bilinear and symmetric") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const LorentzVec a = rng.normal_vector(5), b = rng.normal_vector(5),
                         c = rng.normal_vector(5);
        const double s = rng.uniform(-2.0, 2.0);
        CHECK(minkowski_dot(a, b) == doctest::Approx(minkowski_dot(b, a)).epsilon(1e-14));
        CHECK(minkowski_dot(Vec(a + s * b), c) ==
              doctest::Approx(minkowski_dot(a, c) + s * minkowski_dot(b, c)).epsilon(1e-12));
    }
}

TEST_CASE("causal classification invariant under positive rescaling") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        LorentzVec a = rng.normal_vector(4);
        const double s = std::exp(rng.uniform(-8.0, 8.0));
        CHECK(causal_class(a) == causal_class(Vec(s * a)));
    }
    // exact null vectors stay null under scaling
    LorentzVec nv(4);
    nv << 2, 2, 0, 0;
    CHECK(causal_class(nv) == CausalClass::Lightlike);
    CHECK(causal_class(Vec(1e8 * nv)) == CausalClass::Lightlike);
    CHECK(causal_class(Vec::Zero(4)) == CausalClass::Zero);
    CHECK(causal_class(lorentz_axis(4, 0)) == CausalClass::Timelike);
    CHECK(causal_class(lorentz_axis(4, 2)) == CausalClass::Spacelike);
}

TEST_CASE("sphere points renormalize close input and reject junk") {
    Vec x(3);
    x << 0.0, 0.0, 1.0 + 1e-8;
    const SpherePoint p(x);
    CHECK(std::abs(p.coords().norm() - 1.0) < 1e-15);
    Vec bad(3);
    bad << 0.5, 0.0, 0.0;
    CHECK_THROWS_AS(SpherePoint{bad}, std::invalid_argument);
    CHECK_THROWS_AS(SpherePoint::normalized(Vec::Zero(3)), std::invalid_argument);
    const SpherePoint q = SpherePoint::normalized(bad);
    CHECK(q[0] == doctest::Approx(1.0));
}

TEST_CASE("hyperspherical charts land on the sphere") {
    Rng rng(3);
    for (int n : {2, 3, 4}) {
        for (int trial = 0; trial < 25; ++trial) {
            Vec t(n);
            for (int i = 0; i < n - 1; ++i) t[i] = rng.uniform(0.05, M_PI - 0.05);
            t[n - 1] = rng.uniform(0.0, 2 * M_PI);
            const Vec x = sphere_chart_point(t, n);
            CHECK(std::abs(x.norm() - 1.0) < 1e-14);
        }
    }
    // S^2 chart is the standard one
    Vec t(2);
    t << M_PI / 2, 0.0;
    const Vec x = sphere_chart_point(t, 2);
    CHECK(x[0] == doctest::Approx(1.0));
    CHECK(x[2] == doctest::Approx(0.0));
}

TEST_CASE("parser: basic fields and precedence") {
    const FieldExpression fe = parse_field("x3", 2);
    Vec p(3);
    p << 0.1, 0.2, 0.9;
    CHECK(fe(p) == doctest::Approx(0.9));

    const FieldExpression prec = parse_field("2+3*x1^2", 2);
    Vec q(3);
    q << 2.0, 0, 0;  // raw evaluation, not restricted to the sphere here
    CHECK(prec(q) == doctest::Approx(2 + 3 * 4));

    // right-associative power
    const FieldExpression pw = parse_field("2^3^2", 2);
    CHECK(pw(Vec::Zero(3)) == doctest::Approx(512.0));

    // unary minus binds tighter than '^' in this grammar: -x1^2 = (-x1)^2
    const FieldExpression neg = parse_field("-x1^2", 2);
    CHECK(neg(q) == doctest::Approx(4.0));
    const FieldExpression neg2 = parse_field("0-x1^2", 2);
    CHECK(neg2(q) == doctest::Approx(-4.0));
}

TEST_CASE("parser: expression matching the explicit solution family") {
    // v = (-2, sqrt(3), 0, 0), k = 1 gives f = log(1/(2 + sqrt(3) x1)).
    const ScalarField parsed = make_expression_field("log(1/( -(-2) + 1.732*x1 ))", 2);
    LorentzVec v(4);
    v << -2.0, std::sqrt(3.0), 0.0, 0.0;
    const ScalarField exact = make_obata_field(v, 1.0);
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const SpherePoint x = random_sphere_point(rng, 2);
        CHECK(parsed.value(x) == doctest::Approx(exact.value(x)).epsilon(5e-4));
    }
}

TEST_CASE("parser: errors carry byte offsets and expectations") {
    try {
        parse_field("exp(", 2);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset == 4);
        CHECK(e.expected.find("number") != std::string::npos);
    }
    try {
        parse_field("x1 + x5", 2);  // x5 exceeds n+1 = 3
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.offset == 5);
    }
    CHECK_THROWS_AS(parse_field("x1 + ", 2), ParseError);
    CHECK_THROWS_AS(parse_field("(x1", 2), ParseError);
    CHECK_THROWS_AS(parse_field("x1 x2", 2), ParseError);
    CHECK_THROWS_AS(parse_field("x1 + u", 2), ParseError);  // mixed spaces
    CHECK_THROWS_AS(parse_field("foo(x1)", 2), ParseError);
}

TEST_CASE("parser: chart expressions use u, w") {
    const FieldExpression phi = parse_field("1 + 0.5*sin(u)", 2);
    CHECK(phi.space == VarSpace::Chart);
    Vec t(2);
    t << M_PI / 2, 0.3;
    CHECK(phi(t) == doctest::Approx(1.5));
}

TEST_CASE("parser: evaluation domain errors") {
    const FieldExpression bad_log = parse_field("log(x1 - 2)", 2);
    Vec p(3);
    p << 0.5, 0.5, std::sqrt(0.5);
    CHECK_THROWS_AS(bad_log(p), FieldDomainError);
    const FieldExpression bad_div = parse_field("1/(x1 - x1)", 2);
    CHECK_THROWS_AS(bad_div(p), FieldDomainError);
    const FieldExpression bad_sqrt = parse_field("sqrt(-1 - x1^2)", 2);
    CHECK_THROWS_AS(bad_sqrt(p), FieldDomainError);
}

TEST_CASE("symbolic derivatives agree with finite differences") {
    // oracle: raw central differences on the unconstrained expression
    Rng rng(17);
    const char* sources[] = {"exp(x1)*sin(x2) - x3^3 + x1*x2*x3",
                             "log(2 + x1) / (1 + x2^2)",
                             "sqrt(1 + x1^2 + x3^2) * cosh(x2)",
                             "x1^(2)*sinh(x3) + cos(x1*x2)"};
    for (const char* src : sources) {
        const FieldExpression fe = parse_field(src, 2);
        std::vector<expr::NodePtr> partials;
        for (int i = 0; i < 3; ++i) partials.push_back(expr::diff(fe.root, i));
        for (int trial = 0; trial < 20; ++trial) {
            Vec p = rng.normal_vector(3) * 0.4;
            for (int i = 0; i < 3; ++i) {
                auto f1 = [&](double s) {
                    Vec q = p;
                    q[i] += s;
                    return fe(q);
                };
                const double fd = fd_derivative(f1, 0.0, 1e-6, 4);
                CHECK(expr::eval(partials[i], p) == doctest::Approx(fd).epsilon(1e-6));
            }
        }
    }
}
