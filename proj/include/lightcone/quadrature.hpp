#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "lightcone/numerics.hpp"
#include "lightcone/scalar_field.hpp"
#include "lightcone/sphere.hpp"

namespace lightcone {

// Quadrature on S^n (n = 2, 3, 4) for the round measure dV_0. Built as a
// tensor product: Gauss-Legendre across the polar angles (in cos t where the
// sin-power weight is a polynomial in cos t, otherwise in t with the weight
// folded into the node weight) and the trapezoid rule in the periodic angle.
// Positive weights; spectrally accurate on smooth integrands.
struct QuadratureRule {
    int n = 2;
    std::vector<SpherePoint> nodes;
    std::vector<double> weights;
    std::string descriptor;

    double total_weight() const { return pairwise_sum(weights); }
};

inline double sphere_volume(int n) {
    switch (n) {
        case 2: return 4.0 * M_PI;
        case 3: return 2.0 * M_PI * M_PI;
        case 4: return 8.0 * M_PI * M_PI / 3.0;
        default: throw std::invalid_argument("sphere_volume: supported for n = 2, 3, 4");
    }
}

namespace quad_detail {

struct Angle1D {
    std::vector<double> t;  // polar angle in (0, pi)
    std::vector<double> w;  // includes the sin-power weight
};

// Rule for integrals of F(t) sin^k(t) dt over (0, pi).
inline Angle1D polar_rule(int npoints, int sin_power) {
    const GaussLegendreRule gl = gauss_legendre(npoints);
    Angle1D out;
    out.t.resize(npoints);
    out.w.resize(npoints);
    if (sin_power % 2 == 1) {
        // substitute u = cos t: sin^k t dt = (1-u^2)^{(k-1)/2} du, polynomial weight
        const int p = (sin_power - 1) / 2;
        for (int i = 0; i < npoints; ++i) {
            const double u = gl.nodes[i];
            out.t[i] = std::acos(u);
            out.w[i] = gl.weights[i] * std::pow(1.0 - u * u, p);
        }
    } else {
        // map [-1,1] -> (0,pi) and fold sin^k into the weight
        for (int i = 0; i < npoints; ++i) {
            const double t = 0.5 * M_PI * (gl.nodes[i] + 1.0);
            out.t[i] = t;
            out.w[i] = gl.weights[i] * (0.5 * M_PI) * std::pow(std::sin(t), sin_power);
        }
    }
    return out;
}

}  // namespace quad_detail

// resolution = node count per polar angle; the periodic angle gets twice as
// many. Defaults match the n = 2 transform grid (64 x 128).
inline QuadratureRule sphere_quadrature(int n, int resolution = 64) {
    if (resolution < 4) throw std::invalid_argument("sphere_quadrature: resolution too small");
    QuadratureRule rule;
    rule.n = n;
    const int nphi = 2 * resolution;
    const double dphi = 2.0 * M_PI / nphi;
    using quad_detail::polar_rule;
    if (n == 2) {
        auto a = polar_rule(resolution, 1);
        for (int i = 0; i < resolution; ++i)
            for (int j = 0; j < nphi; ++j) {
                const double phi = j * dphi;
                Vec x(3);
                x << std::sin(a.t[i]) * std::cos(phi), std::sin(a.t[i]) * std::sin(phi),
                    std::cos(a.t[i]);
                rule.nodes.emplace_back(std::move(x));
                rule.weights.push_back(a.w[i] * dphi);
            }
    } else if (n == 3) {
        auto a1 = polar_rule(resolution, 2);
        auto a2 = polar_rule(resolution, 1);
        for (int i = 0; i < resolution; ++i)
            for (int k = 0; k < resolution; ++k)
                for (int j = 0; j < nphi; ++j) {
                    const double phi = j * dphi;
                    Vec t(3);
                    t << a1.t[i], a2.t[k], phi;
                    rule.nodes.emplace_back(sphere_chart_point(t, 3));
                    rule.weights.push_back(a1.w[i] * a2.w[k] * dphi);
                }
    } else if (n == 4) {
        auto a1 = polar_rule(resolution, 3);
        auto a2 = polar_rule(resolution, 2);
        auto a3 = polar_rule(resolution, 1);
        for (int i = 0; i < resolution; ++i)
            for (int k = 0; k < resolution; ++k)
                for (int l = 0; l < resolution; ++l)
                    for (int j = 0; j < nphi; ++j) {
                        const double phi = j * dphi;
                        Vec t(4);
                        t << a1.t[i], a2.t[k], a3.t[l], phi;
                        rule.nodes.emplace_back(sphere_chart_point(t, 4));
                        rule.weights.push_back(a1.w[i] * a2.w[k] * a3.w[l] * dphi);
                    }
    } else {
        throw std::invalid_argument("sphere_quadrature: supported for n = 2, 3, 4");
    }
    rule.descriptor = "sphere n=" + std::to_string(n) + " res=" + std::to_string(resolution);
    return rule;
}

inline double integrate(const std::vector<double>& values, const QuadratureRule& rule) {
    if (values.size() != rule.weights.size())
        throw std::invalid_argument("integrate: value/weight count mismatch");
    std::vector<double> terms(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) terms[i] = values[i] * rule.weights[i];
    return pairwise_sum(terms);
}

inline double integrate(const ScalarField& f, const QuadratureRule& rule) {
    if (f.n() != rule.n) throw std::invalid_argument("integrate: field/rule dimension mismatch");
    std::vector<double> terms(rule.nodes.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        terms[i] = f.value(rule.nodes[i]) * rule.weights[i];
    return pairwise_sum(terms);
}

template <class F>
double integrate_fn(F&& f, const QuadratureRule& rule) {
    std::vector<double> terms(rule.nodes.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i)
        terms[i] = f(rule.nodes[i]) * rule.weights[i];
    return pairwise_sum(terms);
}

// 2D parameter-chart rule; weights are for the coordinate measure du dw.
// Integrals over an immersed surface multiply by sqrt(det g) per node.
struct ChartRule {
    std::vector<Eigen::Vector2d> nodes;
    std::vector<double> weights;
    std::string descriptor;

    double total_weight() const { return pairwise_sum(weights); }
};

// Doubly periodic chart (e.g. torus angles): trapezoid x trapezoid.
inline ChartRule chart_rule_biperiodic(double period_u, double period_w, int nu, int nw) {
    ChartRule r;
    const double du = period_u / nu, dw = period_w / nw;
    for (int i = 0; i < nu; ++i)
        for (int j = 0; j < nw; ++j) {
            r.nodes.emplace_back(i * du, j * dw);
            r.weights.push_back(du * dw);
        }
    r.descriptor = "biperiodic " + std::to_string(nu) + "x" + std::to_string(nw);
    return r;
}

// Spherical chart (theta, phi): Gauss-Legendre in cos(theta), trapezoid in
// phi, with weights expressed for d theta d phi (divide the area weight by
// sin theta). Nodes stay strictly inside the chart.
inline ChartRule chart_rule_sphere(int ntheta, int nphi) {
    ChartRule r;
    const GaussLegendreRule gl = gauss_legendre(ntheta);
    const double dphi = 2.0 * M_PI / nphi;
    for (int i = 0; i < ntheta; ++i) {
        const double theta = std::acos(gl.nodes[i]);
        const double w_theta = gl.weights[i] / std::sin(theta);
        for (int j = 0; j < nphi; ++j) {
            r.nodes.emplace_back(theta, j * dphi);
            r.weights.push_back(w_theta * dphi);
        }
    }
    r.descriptor = "sphere-chart " + std::to_string(ntheta) + "x" + std::to_string(nphi);
    return r;
}

}  // namespace lightcone
