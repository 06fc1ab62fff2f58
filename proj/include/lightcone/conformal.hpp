#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "lightcone/lorentz.hpp"
#include "lightcone/numerics.hpp"
#include "lightcone/quadrature.hpp"
#include "lightcone/scalar_field.hpp"

namespace lightcone {

// Pointwise conformal geometry of g_f = e^{2f} g_0 on S^n, and the elliptic
// equation satisfied by light-cone graphs whose squared mean curvature is a
// positive constant k:
//
//   2 lap f + (n-2) |grad f|^2 = n (1 - k e^{2f}).           (graph equation)
//
// All derivatives are for the round metric g_0.

// Parameters of the explicit solution family
//   f(x) = log( (1/sqrt k) / (-v0 + <vbar, x>) ),
// with v in L^{n+2}, <v,v> = -1 and v0 < 0, so the denominator stays
// >= |v0| - sqrt(v0^2 - 1) > 0 on the whole sphere.
struct ObataParameters {
    LorentzVec v;
    double k = 1.0;

    ObataParameters(LorentzVec v_, double k_) : v(std::move(v_)), k(k_) {
        if (v.size() < 4)
            throw std::invalid_argument("ObataParameters: v must have dimension n+2 >= 4");
        if (k <= 0.0) throw std::invalid_argument("ObataParameters: k must be positive");
        const double q = minkowski_norm2(v);
        if (std::abs(q + 1.0) > 1e-10)
            throw std::invalid_argument("ObataParameters: <v,v> must equal -1");
        if (!(v[0] < 0.0)) throw std::invalid_argument("ObataParameters: v0 must be negative");
    }

    int n() const { return static_cast<int>(v.size()) - 2; }
};

inline ScalarField obata_field(const ObataParameters& p) { return make_obata_field(p.v, p.k); }

// Uniform draw of a valid parameter set: v = (-cosh s, sinh s * direction)
// with s in [0, s_max], k log-uniform in [k_lo, k_hi].
inline ObataParameters random_obata_parameters(Rng& rng, int n, double s_max = 1.2,
                                               double k_lo = 0.25, double k_hi = 4.0) {
    const double s = rng.uniform(0.0, s_max);
    Vec dir = rng.normal_vector(n + 1);
    while (dir.norm() < 1e-8) dir = rng.normal_vector(n + 1);
    dir.normalize();
    LorentzVec v(n + 2);
    v[0] = -std::cosh(s);
    v.tail(n + 1) = std::sinh(s) * dir;
    const double k = std::exp(rng.uniform(std::log(k_lo), std::log(k_hi)));
    return ObataParameters(std::move(v), k);
}

// e^{2f} S_f = n(n-1) - 2(n-1) lap f - (n-1)(n-2) |grad f|^2
inline double scalar_curvature(const ScalarField& f, const SpherePoint& x) {
    const int n = x.n();
    const double lap = f.laplacian(x);
    const double g2 = f.gradient_norm2(x);
    return std::exp(-2.0 * f.value(x)) *
           (n * (n - 1.0) - 2.0 * (n - 1.0) * lap - (n - 1.0) * (n - 2.0) * g2);
}

// <H_f, H_f> = (n - 2 lap f - (n-2) |grad f|^2) / (n e^{2f})
inline double mean_curvature_sq(const ScalarField& f, const SpherePoint& x) {
    const int n = x.n();
    const double lap = f.laplacian(x);
    const double g2 = f.gradient_norm2(x);
    return (n - 2.0 * lap - (n - 2.0) * g2) / (n * std::exp(2.0 * f.value(x)));
}

// Signed residual 2 lap f + (n-2) |grad f|^2 - n (1 - k e^{2f}); zero exactly
// when the graph i_f has constant squared mean curvature k.
inline double graph_cmc_residual(const ScalarField& f, double k, const SpherePoint& x) {
    if (k <= 0.0) throw std::invalid_argument("graph_cmc_residual: k must be positive");
    const int n = x.n();
    const double lap = f.laplacian(x);
    const double g2 = f.gradient_norm2(x);
    return 2.0 * lap + (n - 2.0) * g2 - n * (1.0 - k * std::exp(2.0 * f.value(x)));
}

// Equivalent route: the residual equals n (k - <H_f,H_f>) e^{2f} pointwise.
inline double graph_cmc_residual_via_mean_curvature(const ScalarField& f, double k,
                                                    const SpherePoint& x) {
    const int n = x.n();
    return n * (k - mean_curvature_sq(f, x)) * std::exp(2.0 * f.value(x));
}

// Residual of the classical equation for h = e^{-f} > 0 with unit constant:
//   lap h - (n / 2h) (1 - h^2 + |grad h|^2).
inline double obata_equation_residual(const ScalarField& h, const SpherePoint& x) {
    const double hv = h.value(x);
    if (hv <= 0.0) throw std::domain_error("obata_equation_residual: h must be positive");
    const int n = x.n();
    return h.laplacian(x) - (n / (2.0 * hv)) * (1.0 - hv * hv + h.gradient_norm2(x));
}

// Volume of g_f: integral of e^{nf} dV_0.
inline double conformal_volume(const ScalarField& f, const QuadratureRule& rule) {
    const int n = f.n();
    return integrate_fn(
        [&](const SpherePoint& x) { return std::exp(n * f.value(x)); }, rule);
}

// --- Yamabe form, n >= 3 ---------------------------------------------------
// With phi = e^{(n-2) f / 2} the graph equation becomes
//   box phi + (n(n-2)/4) k phi^{(n+2)/(n-2)} = 0,
//   box phi = lap phi - (n(n-2)/4) phi.

inline void require_yamabe_dim(int n) {
    if (n < 3)
        throw std::invalid_argument("yamabe form: needs n >= 3 (exponent 2n/(n-2) undefined)");
}

inline ScalarField yamabe_phi_from_f(const ScalarField& f) {
    require_yamabe_dim(f.n());
    return exp_scaled(f, (f.n() - 2.0) / 2.0);
}

inline double yamabe_residual(const ScalarField& phi, double k, const SpherePoint& x) {
    const int n = x.n();
    require_yamabe_dim(n);
    const double p = phi.value(x);
    if (p <= 0.0) throw std::domain_error("yamabe_residual: phi must be positive");
    const double c = n * (n - 2.0) / 4.0;
    return phi.laplacian(x) - c * p + c * k * std::pow(p, (n + 2.0) / (n - 2.0));
}

struct YamabeEnergy {
    double energy = 0.0;  // E(phi) = int |grad phi|^2 + (n(n-2)k/4) phi^2 dV_0
    double norm_p = 0.0;  // (int phi^p dV_0)^{1/p}, p = 2n/(n-2)
};

inline YamabeEnergy yamabe_energy(const ScalarField& phi, double k, const QuadratureRule& rule) {
    const int n = phi.n();
    require_yamabe_dim(n);
    const double c = n * (n - 2.0) / 4.0;
    const double p = 2.0 * n / (n - 2.0);
    std::vector<double> eterms(rule.nodes.size()), pterms(rule.nodes.size());
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double pv = phi.value(rule.nodes[i]);
        if (pv <= 0.0) throw std::domain_error("yamabe_energy: phi must be positive at nodes");
        const double g2 = phi.gradient_norm2(rule.nodes[i]);
        eterms[i] = (g2 + c * k * pv * pv) * rule.weights[i];
        pterms[i] = std::pow(pv, p) * rule.weights[i];
    }
    YamabeEnergy out;
    out.energy = pairwise_sum(eterms);
    out.norm_p = std::pow(pairwise_sum(pterms), 1.0 / p);
    return out;
}

// --- batch report ----------------------------------------------------------

struct ConformalSample {
    SpherePoint x;
    double scalar_curv;
    double hh;        // <H_f, H_f>
    double residual;  // graph equation residual at the given k
};

struct ConformalReport {
    std::vector<ConformalSample> samples;
    double max_identity_defect = 0.0;  // max |S_f - n(n-1) <H,H>|
    double max_residual = 0.0;
    double volume = 0.0;
    double tolerance = 0.0;  // tier used (analytic vs finite differences)
};

inline ConformalReport conformal_report(const ScalarField& f, double k,
                                        const std::vector<SpherePoint>& points,
                                        const QuadratureRule& rule) {
    ConformalReport rep;
    const int n = f.n();
    rep.tolerance = f.analytic() ? 1e-9 : 1e-5;
    for (const auto& x : points) {
        ConformalSample s{x, scalar_curvature(f, x), mean_curvature_sq(f, x),
                          graph_cmc_residual(f, k, x)};
        rep.max_identity_defect =
            std::max(rep.max_identity_defect, std::abs(s.scalar_curv - n * (n - 1.0) * s.hh));
        rep.max_residual = std::max(rep.max_residual, std::abs(s.residual));
        rep.samples.push_back(std::move(s));
    }
    rep.volume = conformal_volume(f, rule);
    return rep;
}

}  // namespace lightcone
