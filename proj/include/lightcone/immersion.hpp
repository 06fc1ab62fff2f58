#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lightcone/conformal.hpp"
#include "lightcone/lorentz.hpp"
#include "lightcone/quadrature.hpp"
#include "lightcone/scalar_field.hpp"
#include "lightcone/sphere.hpp"

namespace lightcone {

// Chart-parametrized spacelike immersion into L^{n+2}. Charts are
// rectangles; sphere-parametrized immersions use the hyperspherical chart of
// sphere.hpp and additionally expose the map as a function of sphere points.
struct Immersion {
    std::string name;
    int n = 2;        // submanifold dimension = chart dimension
    int ambient = 4;  // n + 2

    std::function<Vec(const Vec&)> map;  // chart point -> L^{n+2}
    Vec chart_lo, chart_hi;              // sampling rectangle
    std::vector<bool> periodic;

    bool in_light_cone = false;
    bool compact = false;

    // present for immersions parametrized over S^n
    std::function<Vec(const SpherePoint&)> sphere_map;
    std::shared_ptr<const ScalarField> graph_field;  // present for graphs i_f

    // closed-form lightlike normal frame when available (preferred in audits)
    std::function<Vec(const Vec&)> xi_fn, eta_fn;
    bool has_analytic_frame() const { return static_cast<bool>(xi_fn); }

    Vec chart_center() const { return 0.5 * (chart_lo + chart_hi); }
};

namespace immersion_detail {

inline Vec embed_sphere_point(const ScalarField& f, const SpherePoint& x) {
    const double ef = std::exp(f.value(x));
    Vec out(x.ambient_dim() + 1);
    out[0] = ef;
    out.tail(x.ambient_dim()) = ef * x.coords();
    return out;
}

// Closed-form second null normal along a graph i_f, valid whenever f has
// analytic derivatives:
//   eta = e^{-f} [ ((1 - |grad f|^2)/2) (1, x) - e_0 - (0, grad f) ].
inline Vec graph_eta(const ScalarField& f, const SpherePoint& x) {
    const int m = x.ambient_dim();
    const double ef = std::exp(f.value(x));
    const Vec grad = f.gradient(x);
    const double g2 = grad.squaredNorm();
    Vec out(m + 1);
    out[0] = 0.5 * (1.0 - g2) - 1.0;
    out.tail(m) = 0.5 * (1.0 - g2) * x.coords() - grad;
    return out / ef;
}

}  // namespace immersion_detail

// Light-cone graph x -> e^{f(x)} (1, x) over S^n.
inline Immersion graph_immersion(const ScalarField& f, std::string name = "") {
    const int n = f.n();
    if (n < 2 || n > 4)
        throw std::invalid_argument("graph_immersion: charts available for n = 2, 3, 4");
    Immersion im;
    im.name = name.empty() ? "graph(" + f.describe() + ")" : std::move(name);
    im.n = n;
    im.ambient = n + 2;
    auto fc = std::make_shared<const ScalarField>(f);
    im.graph_field = fc;
    im.sphere_map = [fc](const SpherePoint& x) {
        return immersion_detail::embed_sphere_point(*fc, x);
    };
    im.map = [fc, n](const Vec& t) {
        return immersion_detail::embed_sphere_point(*fc, SpherePoint(sphere_chart_point(t, n)));
    };
    im.chart_lo = Vec::Zero(n);
    im.chart_hi = Vec::Zero(n);
    for (int i = 0; i < n - 1; ++i) {
        im.chart_lo[i] = 0.0;
        im.chart_hi[i] = M_PI;
    }
    im.chart_lo[n - 1] = 0.0;
    im.chart_hi[n - 1] = 2.0 * M_PI;
    im.periodic.assign(n, false);
    im.periodic[n - 1] = true;
    im.in_light_cone = true;
    im.compact = true;
    im.xi_fn = im.map;
    if (f.analytic()) {
        im.eta_fn = [fc, n](const Vec& t) {
            return immersion_detail::graph_eta(*fc, SpherePoint(sphere_chart_point(t, n)));
        };
    }
    return im;
}

inline Immersion round_graph(int n = 2) {
    return graph_immersion(make_constant(0.0, n), "round-graph");
}

inline Immersion obata_graph(const ObataParameters& p) {
    return graph_immersion(obata_field(p), "obata-graph");
}

// The umbilical sphere {x : <x,x> = 0, <v,x> = r} parametrized by
// x -> (r / <v,(1,x)>) (1, x). Same image as obata_graph(v, 1/r^2) but an
// independent code path with its own closed-form frame.
inline Immersion snvr(const LorentzVec& v, double r) {
    if (r <= 0.0) throw std::invalid_argument("snvr: radius must be positive");
    if (std::abs(minkowski_norm2(v) + 1.0) > 1e-10 || !(v[0] < 0.0))
        throw std::invalid_argument("snvr: need <v,v> = -1 and v0 < 0");
    const int n = static_cast<int>(v.size()) - 2;
    if (n < 2 || n > 4) throw std::invalid_argument("snvr: charts available for n = 2, 3, 4");
    Immersion im;
    im.name = "snvr";
    im.n = n;
    im.ambient = n + 2;
    const LorentzVec vv = v;
    auto embed = [vv, r](const SpherePoint& x) {
        Vec u(x.ambient_dim() + 1);
        u[0] = 1.0;
        u.tail(x.ambient_dim()) = x.coords();
        const double h = minkowski_dot(vv, u);
        if (h <= 0.0) throw std::domain_error("snvr: chart point outside the sphere domain");
        return Vec((r / h) * u);
    };
    im.sphere_map = embed;
    im.map = [embed, n](const Vec& t) { return embed(SpherePoint(sphere_chart_point(t, n))); };
    im.chart_lo = Vec::Zero(n);
    im.chart_hi = Vec::Zero(n);
    for (int i = 0; i < n - 1; ++i) im.chart_hi[i] = M_PI;
    im.chart_hi[n - 1] = 2.0 * M_PI;
    im.periodic.assign(n, false);
    im.periodic[n - 1] = true;
    im.in_light_cone = true;
    im.compact = true;
    im.xi_fn = im.map;
    im.eta_fn = [embed, vv, r, n](const Vec& t) {
        const Vec psi = embed(SpherePoint(sphere_chart_point(t, n)));
        return Vec(psi / (2.0 * r * r) + vv / r);
    };
    return im;
}

// Counter-example (a): flat complete cylinder in the light cone,
//   psi(x, y) = (cosh x, sinh x, cos y, sin y).
inline Immersion flat_cylinder() {
    Immersion im;
    im.name = "flat-cylinder";
    im.n = 2;
    im.ambient = 4;
    im.map = [](const Vec& t) {
        Vec p(4);
        p << std::cosh(t[0]), std::sinh(t[0]), std::cos(t[1]), std::sin(t[1]);
        return p;
    };
    im.chart_lo = Vec::Zero(2);
    im.chart_hi = Vec::Zero(2);
    im.chart_lo << -1.5, 0.0;
    im.chart_hi << 1.5, 2.0 * M_PI;
    im.periodic = {false, true};
    im.in_light_cone = true;
    im.compact = false;
    im.xi_fn = im.map;
    im.eta_fn = [](const Vec& t) {
        Vec e(4);
        e << -0.5 * std::cosh(t[0]), -0.5 * std::sinh(t[0]), 0.5 * std::cos(t[1]),
            0.5 * std::sin(t[1]);
        return e;
    };
    return im;
}

// Counter-example (b): psi(x, y) = (1/x) (cosh x, sinh x, cos y, sin y) on
// x > 0; induced metric is the hyperbolic half-plane metric.
inline Immersion poincare_halfplane() {
    Immersion im;
    im.name = "poincare-halfplane";
    im.n = 2;
    im.ambient = 4;
    im.map = [](const Vec& t) {
        const double x = t[0];
        if (x <= 0.0) throw std::domain_error("poincare-halfplane: chart requires x > 0");
        Vec p(4);
        p << std::cosh(x) / x, std::sinh(x) / x, std::cos(t[1]) / x, std::sin(t[1]) / x;
        return p;
    };
    im.chart_lo = Vec::Zero(2);
    im.chart_hi = Vec::Zero(2);
    im.chart_lo << 0.3, 0.0;
    im.chart_hi << 2.5, 2.0 * M_PI;
    im.periodic = {false, true};
    im.in_light_cone = true;
    im.compact = false;
    im.xi_fn = im.map;
    // eta from the parallel-frame formula, written out for psi = e^s psihat
    // with e^{s(x)} = 1/x.
    im.eta_fn = [](const Vec& t) {
        const double x = t[0], y = t[1];
        if (x <= 0.0) throw std::domain_error("poincare-halfplane: chart requires x > 0");
        const double ch = std::cosh(x), sh = std::sinh(x);
        const double sx = -1.0 / x;                  // s'(x)
        const double P = sx * ch + sh;               // component of grad psi0
        Vec psihat(4), dpsihat(4), e0(4);
        psihat << ch, sh, std::cos(y), std::sin(y);
        dpsihat << sh, ch, 0.0, 0.0;
        e0 << 1.0, 0.0, 0.0, 0.0;
        Vec eta = ((1.0 + P * P) / (2.0 * ch * ch)) * psihat -
                  (1.0 / ch) * (e0 + P * (sx * psihat + dpsihat));
        return Vec(x * eta);  // e^{-s} factor
    };
    return im;
}

// Flat Euclidean graph in the light cone (totally umbilical, <H,H> = 0):
//   psi(p, q) = ((1 + p^2 + q^2)/2, (-1 + p^2 + q^2)/2, p, q).
inline Immersion euclid_graph() {
    Immersion im;
    im.name = "euclid-graph";
    im.n = 2;
    im.ambient = 4;
    im.map = [](const Vec& t) {
        const double s = t[0] * t[0] + t[1] * t[1];
        Vec p(4);
        p << 0.5 * (1.0 + s), 0.5 * (-1.0 + s), t[0], t[1];
        return p;
    };
    im.chart_lo = Vec::Zero(2);
    im.chart_hi = Vec::Zero(2);
    im.chart_lo << -1.5, -1.5;
    im.chart_hi << 1.5, 1.5;
    im.periodic = {false, false};
    im.in_light_cone = true;
    im.compact = false;
    im.xi_fn = im.map;
    im.eta_fn = [](const Vec&) {
        Vec e(4);
        e << -1.0, -1.0, 0.0, 0.0;
        return e;
    };
    return im;
}

// Torus of revolution inside the spacelike hyperplane x0 = 0 of L^4; compact
// spacelike codimension-two submanifold that does not lie in the light cone.
// Carries the parallel frame xi = (d0 + nu)/sqrt2, eta = (-d0 + nu)/sqrt2
// built from the outward Euclidean normal nu (alpha = 0 for this frame).
inline Immersion torus(double R = 2.0, double rho = 0.7) {
    if (!(R > rho && rho > 0.0)) throw std::invalid_argument("torus: need R > rho > 0");
    Immersion im;
    im.name = "torus";
    im.n = 2;
    im.ambient = 4;
    im.map = [R, rho](const Vec& t) {
        const double u = t[0], w = t[1];
        Vec p(4);
        p << 0.0, (R + rho * std::cos(w)) * std::cos(u), (R + rho * std::cos(w)) * std::sin(u),
            rho * std::sin(w);
        return p;
    };
    im.chart_lo = Vec::Zero(2);
    im.chart_hi = Vec::Zero(2);
    im.chart_hi << 2.0 * M_PI, 2.0 * M_PI;
    im.periodic = {true, true};
    im.in_light_cone = false;
    im.compact = true;
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
    auto nu = [](const Vec& t) {
        Vec v(4);
        v << 0.0, std::cos(t[1]) * std::cos(t[0]), std::cos(t[1]) * std::sin(t[0]),
            std::sin(t[1]);
        return v;
    };
    im.xi_fn = [nu, inv_sqrt2](const Vec& t) {
        Vec v = nu(t);
        v[0] = 1.0;
        return Vec(inv_sqrt2 * v);
    };
    im.eta_fn = [nu, inv_sqrt2](const Vec& t) {
        Vec v = nu(t);
        v[0] = -1.0;
        return Vec(inv_sqrt2 * v);
    };
    return im;
}

// Catalog lookup used by the CLI; obata-graph/snvr take (v, k) / (v, r).
struct CatalogRequest {
    std::string example;
    LorentzVec v;
    double k = 1.0;
    double r = 1.0;
    double R = 2.0;
    double rho = 0.7;
    int n = 2;
    std::optional<ScalarField> field;  // for graph(<expr>)
};

inline Immersion make_catalog_immersion(const CatalogRequest& req) {
    if (req.example == "round-graph") return round_graph(req.n);
    if (req.example == "obata-graph") return obata_graph(ObataParameters(req.v, req.k));
    if (req.example == "snvr") return snvr(req.v, req.r);
    if (req.example == "flat-cylinder") return flat_cylinder();
    if (req.example == "poincare-halfplane") return poincare_halfplane();
    if (req.example == "euclid-graph") return euclid_graph();
    if (req.example == "torus") return torus(req.R, req.rho);
    if (req.example == "graph") {
        if (!req.field) throw std::invalid_argument("catalog: graph needs a field");
        return graph_immersion(*req.field);
    }
    throw std::invalid_argument("catalog: unknown example '" + req.example + "'");
}

// Chart quadrature used by the integral audits; resolution = nodes per
// chart direction.
inline ChartRule make_chart_rule(const Immersion& im, int resolution) {
    if (!im.compact) throw std::invalid_argument("make_chart_rule: immersion is not compact");
    if (im.n != 2) throw std::invalid_argument("make_chart_rule: audits cover n = 2 charts");
    if (im.sphere_map) return chart_rule_sphere(resolution, 2 * resolution);
    return chart_rule_biperiodic(im.chart_hi[0] - im.chart_lo[0], im.chart_hi[1] - im.chart_lo[1],
                                 resolution, resolution);
}

// Uniform interior samples of the chart rectangle (for invariant sweeps).
inline std::vector<Vec> sample_chart_points(const Immersion& im, Rng& rng, int count,
                                            double margin = 0.02) {
    std::vector<Vec> pts;
    pts.reserve(count);
    for (int s = 0; s < count; ++s) {
        Vec t(im.n);
        for (int i = 0; i < im.n; ++i) {
            const double lo = im.chart_lo[i], hi = im.chart_hi[i];
            const double pad = im.periodic[i] ? 0.0 : margin * (hi - lo);
            t[i] = rng.uniform(lo + pad, hi - pad);
        }
        pts.push_back(std::move(t));
    }
    return pts;
}

}  // namespace lightcone
