#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lightcone/immersion.hpp"
#include "lightcone/lorentz.hpp"
#include "lightcone/numerics.hpp"

namespace lightcone {

// Finite-difference policy for chart derivatives. First derivatives of the
// immersion and of frame fields use (h1, order1); nested derivatives of
// already-FD quantities (metric coefficients, operator traces) use the wider
// 4th-order stencil (h2, order2) to keep roundoff amplification down.
struct ChartFd {
    double h1 = 1e-5;
    int order1 = 2;
    double h2 = 1e-3;
    int order2 = 4;
};

inline double fd_tolerance(const ChartFd& fd) { return std::max(1e-6, 100.0 * fd.h1 * fd.h1); }

// Lightlike normal frame along an immersion, as chart-point evaluators.
struct LightlikeFrame {
    std::function<Vec(const Vec&)> xi, eta;
    std::string name;
};

namespace shape_detail {

template <class F>
Vec fd_vector_derivative(F&& f, const Vec& t, int dir, double h, int order) {
    Vec tp = t;
    if (order == 2) {
        tp[dir] = t[dir] + h;
        Vec a = f(tp);
        tp[dir] = t[dir] - h;
        Vec b = f(tp);
        return (a - b) / (2.0 * h);
    }
    tp[dir] = t[dir] + 2 * h;
    Vec a = f(tp);
    tp[dir] = t[dir] + h;
    Vec b = f(tp);
    tp[dir] = t[dir] - h;
    Vec c = f(tp);
    tp[dir] = t[dir] - 2 * h;
    Vec d = f(tp);
    return (-a + 8.0 * b - 8.0 * c + d) / (12.0 * h);
}

template <class F>
double fd_scalar_derivative(F&& f, const Vec& t, int dir, double h, int order) {
    Vec tp = t;
    if (order == 2) {
        tp[dir] = t[dir] + h;
        const double a = f(tp);
        tp[dir] = t[dir] - h;
        const double b = f(tp);
        return (a - b) / (2.0 * h);
    }
    tp[dir] = t[dir] + 2 * h;
    const double a = f(tp);
    tp[dir] = t[dir] + h;
    const double b = f(tp);
    tp[dir] = t[dir] - h;
    const double c = f(tp);
    tp[dir] = t[dir] - 2 * h;
    const double d = f(tp);
    return (-a + 8.0 * b - 8.0 * c + d) / (12.0 * h);
}

}  // namespace shape_detail

// Tangent vectors d_i psi at a chart point.
inline std::vector<Vec> immersion_tangents(const Immersion& im, const Vec& t,
                                           const ChartFd& fd = {}) {
    std::vector<Vec> tang(im.n);
    for (int i = 0; i < im.n; ++i)
        tang[i] = shape_detail::fd_vector_derivative(im.map, t, i, fd.h1, fd.order1);
    return tang;
}

inline Mat gram_matrix(const std::vector<Vec>& tangents) {
    const int n = static_cast<int>(tangents.size());
    Mat g(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j) {
            g(i, j) = minkowski_dot(tangents[i], tangents[j]);
            g(j, i) = g(i, j);
        }
    return g;
}

inline Mat induced_metric(const Immersion& im, const Vec& t, const ChartFd& fd = {}) {
    return gram_matrix(immersion_tangents(im, t, fd));
}

// The generic frame along a light-cone immersion: xi = psi and
//   eta = ((1 + |grad psi0|^2) / (2 psi0^2)) xi - (1/psi0)(e_0 + push(grad psi0)),
// with the gradient taken for the induced metric.
inline LightlikeFrame lightcone_frame(const Immersion& im, const ChartFd& fd = {}) {
    if (!im.in_light_cone)
        throw std::invalid_argument("lightcone_frame: immersion does not lie in the light cone");
    auto map = im.map;
    const int n = im.n;
    LightlikeFrame fr;
    fr.name = "lightcone-formula";
    fr.xi = map;
    fr.eta = [map, n, fd, im](const Vec& t) {
        const Vec psi = map(t);
        const double psi0 = psi[0];
        if (psi0 <= 0.0) throw std::domain_error("lightcone_frame: psi0 must be positive");
        std::vector<Vec> tang(n);
        Vec dpsi0(n);
        for (int i = 0; i < n; ++i) {
            tang[i] = shape_detail::fd_vector_derivative(map, t, i, fd.h1, fd.order1);
            dpsi0[i] = tang[i][0];
        }
        const Mat g = gram_matrix(tang);
        const Vec c = g.ldlt().solve(dpsi0);  // chart components of grad psi0
        const double grad2 = c.dot(dpsi0);
        Vec push = Vec::Zero(psi.size());
        for (int i = 0; i < n; ++i) push += c[i] * tang[i];
        Vec e0 = Vec::Zero(psi.size());
        e0[0] = 1.0;
        return Vec(((1.0 + grad2) / (2.0 * psi0 * psi0)) * psi - (e0 + push) / psi0);
    };
    return fr;
}

// Oracle construction of the same frame: solve for the second null direction
// of the normal plane algebraically and scale it with <xi, eta> = 1. The
// normal plane is Lorentzian, so that direction is unique; this path shares
// no formula with lightcone_frame.
inline LightlikeFrame algebraic_null_frame(const Immersion& im, const ChartFd& fd = {}) {
    if (!im.in_light_cone)
        throw std::invalid_argument("algebraic_null_frame: immersion must lie in the light cone");
    auto map = im.map;
    const int n = im.n;
    LightlikeFrame fr;
    fr.name = "algebraic-null";
    fr.xi = map;
    fr.eta = [map, n, fd](const Vec& t) {
        const Vec xi = map(t);
        const int m = static_cast<int>(xi.size());
        Mat constraints(n, m);
        for (int i = 0; i < n; ++i) {
            Vec row = shape_detail::fd_vector_derivative(map, t, i, fd.h1, fd.order1);
            row[0] = -row[0];  // Minkowski lowering
            constraints.row(i) = row.transpose();
        }
        // the normal plane is the kernel of the tangency constraints; it is
        // Lorentzian and contains exactly two null lines, one of them xi
        Eigen::FullPivLU<Mat> lu(constraints);
        lu.setThreshold(1e-10);
        Mat ker = lu.kernel();
        if (ker.cols() != 2)
            throw std::runtime_error("algebraic_null_frame: degenerate chart point");
        // pick a basis vector of the normal plane transversal to xi
        Vec b2 = ker.col(0);
        {
            const Vec alt = ker.col(1);
            const double a0 = std::abs(b2.normalized().dot(xi.normalized()));
            const double a1 = std::abs(alt.normalized().dot(xi.normalized()));
            if (a1 < a0) b2 = alt;
        }
        // eta = s b2 + c xi with <eta, xi> = 1 and <eta, eta> = 0
        const double s = 1.0 / minkowski_dot(b2, xi);
        const double c0 = -0.5 * s * s * minkowski_norm2(b2);
        return Vec(s * b2 + c0 * xi);
    };
    return fr;
}

// Closed-form frame when the catalog provides one, generic formula otherwise.
inline LightlikeFrame canonical_frame(const Immersion& im, const ChartFd& fd = {}) {
    if (im.has_analytic_frame()) {
        LightlikeFrame fr;
        fr.xi = im.xi_fn;
        fr.eta = im.eta_fn;
        fr.name = "analytic";
        if (!fr.eta) {
            fr.eta = lightcone_frame(im, fd).eta;
            fr.name = "analytic-xi";
        }
        return fr;
    }
    return lightcone_frame(im, fd);
}

// xi -> xi/phi, eta -> phi eta for a positive chart function phi.
inline LightlikeFrame rescaled_frame(const LightlikeFrame& frame,
                                     std::function<double(const Vec&)> phi) {
    LightlikeFrame out;
    out.name = frame.name + "-rescaled";
    auto xi = frame.xi;
    auto eta = frame.eta;
    out.xi = [xi, phi](const Vec& t) {
        const double p = phi(t);
        if (p <= 0.0) throw std::domain_error("rescaled_frame: phi must be positive");
        return Vec(xi(t) / p);
    };
    out.eta = [eta, phi](const Vec& t) {
        const double p = phi(t);
        if (p <= 0.0) throw std::domain_error("rescaled_frame: phi must be positive");
        return Vec(p * eta(t));
    };
    return out;
}

// First/second fundamental data at a chart point, in the coordinate basis.
struct ShapeData {
    Vec chart_point;
    Vec psi;
    std::vector<Vec> tangents;
    Mat g;         // induced metric
    Mat g_inv;
    double sqrt_det_g = 0.0;
    Vec xi, eta;
    Mat A_xi, A_eta;  // endomorphisms: column j = A(d_j) in the coordinate basis
    Vec alpha;        // alpha(d_i) = <d_i xi, eta>
    double tr_A_xi = 0.0, tr_A_eta = 0.0;

    Vec mean_curvature() const {
        const int n = static_cast<int>(tangents.size());
        return (tr_A_eta * xi + tr_A_xi * eta) / n;
    }
    double hh_traces() const {
        const int n = static_cast<int>(tangents.size());
        return 2.0 * tr_A_xi * tr_A_eta / (n * n);
    }
    double scalar_curvature_extrinsic() const {
        return 2.0 * tr_A_xi * tr_A_eta - 2.0 * (A_xi * A_eta).trace();
    }
    double second_form_sq() const { return 2.0 * (A_xi * A_eta).trace(); }
    double umbilicity_defect() const {
        const int n = static_cast<int>(tangents.size());
        return (A_eta * A_eta).trace() - tr_A_eta * tr_A_eta / n;
    }
    // <A_mu X, Y> for chart-component vectors
    double b_form(const Mat& A, const Vec& X, const Vec& Y) const {
        return (A * X).dot(g * Y);
    }
};

// Weingarten operators from ambient finite differences of the normal fields:
// A_mu d_i = -(d_i mu)^tangential, solved through the Gram system.
inline ShapeData shape_operators(const Immersion& im, const LightlikeFrame& frame, const Vec& t,
                                 const ChartFd& fd = {}) {
    ShapeData sd;
    sd.chart_point = t;
    sd.psi = im.map(t);
    sd.tangents = immersion_tangents(im, t, fd);
    const int n = im.n;
    sd.g = gram_matrix(sd.tangents);
    Eigen::LDLT<Mat> ldlt(sd.g);
    if (ldlt.info() != Eigen::Success)
        throw std::runtime_error("shape_operators: chart singularity (Gram system not SPD)");
    const double det = sd.g.determinant();
    if (!(det > 0.0))
        throw std::runtime_error("shape_operators: chart singularity (degenerate metric)");
    sd.g_inv = ldlt.solve(Mat::Identity(n, n));
    sd.sqrt_det_g = std::sqrt(det);
    sd.xi = frame.xi(t);
    sd.eta = frame.eta(t);

    Mat dxi(n, sd.psi.size()), deta(n, sd.psi.size());
    for (int i = 0; i < n; ++i) {
        dxi.row(i) =
            shape_detail::fd_vector_derivative(frame.xi, t, i, fd.h1, fd.order1).transpose();
        deta.row(i) =
            shape_detail::fd_vector_derivative(frame.eta, t, i, fd.h1, fd.order1).transpose();
    }
    auto weingarten = [&](const Mat& dmu) {
        Mat M(n, n);  // M(i,k) = <d_i mu, d_k psi>
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) M(i, k) = minkowski_dot(dmu.row(i), sd.tangents[k]);
        // tangential coefficients C with C g = M; A = -C^T
        Mat C = ldlt.solve(M.transpose()).transpose();
        return Mat(-C.transpose());
    };
    sd.A_xi = weingarten(dxi);
    sd.A_eta = weingarten(deta);
    sd.tr_A_xi = sd.A_xi.trace();
    sd.tr_A_eta = sd.A_eta.trace();
    sd.alpha.resize(n);
    for (int i = 0; i < n; ++i) sd.alpha[i] = minkowski_dot(dxi.row(i), sd.eta);
    return sd;
}

inline Vec mean_curvature(const Immersion& im, const LightlikeFrame& frame, const Vec& t,
                          const ChartFd& fd = {}) {
    return shape_operators(im, frame, t, fd).mean_curvature();
}

// Decomposition of a constant ambient vector at a chart point:
// a = a_top + <a,xi> eta + <a,eta> xi.
struct VectorSplit {
    Vec top_chart;    // chart components of the tangential part
    Vec top_ambient;
    Vec normal_ambient;
    double a_xi = 0.0, a_eta = 0.0;  // <a, xi>, <a, eta>
};

inline VectorSplit decompose_vector(const ShapeData& sd, const LorentzVec& a) {
    const int n = static_cast<int>(sd.tangents.size());
    Vec rhs(n);
    for (int k = 0; k < n; ++k) rhs[k] = minkowski_dot(a, sd.tangents[k]);
    VectorSplit out;
    out.top_chart = sd.g_inv * rhs;
    out.top_ambient = Vec::Zero(a.size());
    for (int i = 0; i < n; ++i) out.top_ambient += out.top_chart[i] * sd.tangents[i];
    out.a_xi = minkowski_dot(a, sd.xi);
    out.a_eta = minkowski_dot(a, sd.eta);
    out.normal_ambient = out.a_xi * sd.eta + out.a_eta * sd.xi;
    return out;
}

// Sectional curvature of the plane spanned by chart vectors X, Y via the
// Gauss equation R(X,Y)Z = A_{II(Y,Z)} X - A_{II(X,Z)} Y.
inline double gauss_sectional(const ShapeData& sd, const Vec& X, const Vec& Y) {
    const double gXX = X.dot(sd.g * X), gYY = Y.dot(sd.g * Y), gXY = X.dot(sd.g * Y);
    const double area2 = gXX * gYY - gXY * gXY;
    if (!(area2 > 1e-12 * gXX * gYY))
        throw std::invalid_argument("gauss_sectional: degenerate plane");
    const double bEtaYY = sd.b_form(sd.A_eta, Y, Y), bXiXX = sd.b_form(sd.A_xi, X, X);
    const double bXiYY = sd.b_form(sd.A_xi, Y, Y), bEtaXX = sd.b_form(sd.A_eta, X, X);
    const double bEtaXY = sd.b_form(sd.A_eta, X, Y), bXiXY = sd.b_form(sd.A_xi, X, Y);
    const double num = bEtaYY * bXiXX + bXiYY * bEtaXX - 2.0 * bEtaXY * bXiXY;
    return num / area2;
}

// Christoffel symbols of the induced metric by finite differences of the
// metric coefficients. Gamma[k](i,j) = Gamma^k_{ij}.
inline std::vector<Mat> christoffels(const Immersion& im, const Vec& t, const ChartFd& fd = {}) {
    const int n = im.n;
    auto metric_entry = [&](const Vec& s, int a, int b) {
        return induced_metric(im, s, fd)(a, b);
    };
    // dg[c](a,b) = d_c g_ab
    std::vector<Mat> dg(n, Mat(n, n));
    for (int c = 0; c < n; ++c)
        for (int a = 0; a < n; ++a)
            for (int b = 0; b <= a; ++b) {
                const double v = shape_detail::fd_scalar_derivative(
                    [&](const Vec& s) { return metric_entry(s, a, b); }, t, c, fd.h2, fd.order2);
                dg[c](a, b) = v;
                dg[c](b, a) = v;
            }
    const Mat g = induced_metric(im, t, fd);
    const Mat ginv = g.ldlt().solve(Mat::Identity(n, n));
    std::vector<Mat> gamma(n, Mat::Zero(n, n));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double s = 0.0;
                for (int l = 0; l < n; ++l)
                    s += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
                gamma[k](i, j) = 0.5 * s;
            }
    return gamma;
}

// (grad_X A_eta) Y in the coordinate basis, for constant-component chart
// directions X, Y.
inline Vec covariant_shape_derivative(const Immersion& im, const LightlikeFrame& frame,
                                      const Vec& t, const Vec& X, const Vec& Y,
                                      const ChartFd& fd = {}) {
    const int n = im.n;
    auto A_at = [&](const Vec& s) { return shape_operators(im, frame, s, fd).A_eta; };
    std::vector<Mat> dA(n);
    for (int c = 0; c < n; ++c) {
        Mat acc = Mat::Zero(n, n);
        const double h = fd.h2;
        if (fd.order2 == 2) {
            Vec tp = t;
            tp[c] += h;
            acc = A_at(tp);
            tp[c] = t[c] - h;
            acc -= A_at(tp);
            acc /= 2.0 * h;
        } else {
            Vec tp = t;
            tp[c] = t[c] + 2 * h;
            Mat a = A_at(tp);
            tp[c] = t[c] + h;
            Mat b = A_at(tp);
            tp[c] = t[c] - h;
            Mat cmat = A_at(tp);
            tp[c] = t[c] - 2 * h;
            Mat d = A_at(tp);
            acc = (-a + 8.0 * b - 8.0 * cmat + d) / (12.0 * h);
        }
        dA[c] = acc;
    }
    const std::vector<Mat> gamma = christoffels(im, t, fd);
    const Mat A = shape_operators(im, frame, t, fd).A_eta;
    Vec out = Vec::Zero(n);
    for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                s += X[i] * dA[i](k, j) * Y[j];
                for (int l = 0; l < n; ++l) {
                    s += X[i] * gamma[k](i, l) * A(l, j) * Y[j];
                    s -= A(k, l) * X[i] * gamma[l](i, j) * Y[j];
                }
            }
        out[k] = s;
    }
    return out;
}

// | (grad_X A)Y - (grad_Y A)X + alpha(X) A Y - alpha(Y) A X |_g
inline double codazzi_defect(const Immersion& im, const LightlikeFrame& frame, const Vec& t,
                             const Vec& X, const Vec& Y, const ChartFd& fd = {}) {
    const ShapeData sd = shape_operators(im, frame, t, fd);
    const Vec lhs = covariant_shape_derivative(im, frame, t, X, Y, fd) -
                    covariant_shape_derivative(im, frame, t, Y, X, fd);
    const double aX = sd.alpha.dot(X), aY = sd.alpha.dot(Y);
    const Vec defect = lhs + aX * (sd.A_eta * Y) - aY * (sd.A_eta * X);
    return std::sqrt(std::max(0.0, defect.dot(sd.g * defect)));
}

// Independent route to A_eta for light-cone immersions through the Hessian
// of psi0 in the induced metric:
//   A_eta = -((1 + |grad psi0|^2)/(2 psi0^2)) Id + (1/psi0) Hess(psi0).
// Cross-check for the ambient-difference Weingarten path.
inline Mat hessian_shape_operator(const Immersion& im, const Vec& t, const ChartFd& fd = {}) {
    if (!im.in_light_cone)
        throw std::invalid_argument("hessian_shape_operator: needs a light-cone immersion");
    const int n = im.n;
    auto grad_components = [&](const Vec& s) {
        std::vector<Vec> tang(n);
        Vec dpsi0(n);
        for (int i = 0; i < n; ++i) {
            tang[i] = shape_detail::fd_vector_derivative(im.map, s, i, fd.h1, fd.order1);
            dpsi0[i] = tang[i][0];
        }
        return Vec(gram_matrix(tang).ldlt().solve(dpsi0));
    };
    const Vec psi = im.map(t);
    const double psi0 = psi[0];
    const Vec G = grad_components(t);
    Vec dpsi0(n);
    const std::vector<Vec> tang = immersion_tangents(im, t, fd);
    for (int i = 0; i < n; ++i) dpsi0[i] = tang[i][0];
    const double grad2 = G.dot(dpsi0);
    const std::vector<Mat> gamma = christoffels(im, t, fd);
    Mat hess(n, n);  // hess(k, i) = component k of grad_{d_i}(grad psi0)
    for (int i = 0; i < n; ++i) {
        const Vec dG = shape_detail::fd_vector_derivative(grad_components, t, i, fd.h2, fd.order2);
        for (int k = 0; k < n; ++k) {
            double s = dG[k];
            for (int l = 0; l < n; ++l) s += gamma[k](i, l) * G[l];
            hess(k, i) = s;
        }
    }
    return Mat(-((1.0 + grad2) / (2.0 * psi0 * psi0)) * Mat::Identity(n, n) + hess / psi0);
}

// Squared mean curvature through the graph-function route:
// <H,H> = (1 + |grad psi0|^2)/psi0^2 - (2/(n psi0)) lap psi0, with the
// gradient and Laplacian of the induced metric (nested finite differences).
inline double hh_via_psi0(const Immersion& im, const Vec& t, const ChartFd& fd = {}) {
    const int n = im.n;
    const Vec psi = im.map(t);
    const double psi0 = psi[0];
    auto grad_field = [&](const Vec& s) {
        // sqrt(det g) * (g^{-1} d psi0)  evaluated at chart point s
        std::vector<Vec> tang(n);
        Vec dpsi0(n);
        for (int i = 0; i < n; ++i) {
            tang[i] = shape_detail::fd_vector_derivative(im.map, s, i, fd.h1, fd.order1);
            dpsi0[i] = tang[i][0];
        }
        const Mat g = gram_matrix(tang);
        Vec c = g.ldlt().solve(dpsi0);
        const double sq = std::sqrt(g.determinant());
        return std::make_pair(c, sq);
    };
    auto [c0, sq0] = grad_field(t);
    Vec dpsi0(n);
    {
        std::vector<Vec> tang = immersion_tangents(im, t, fd);
        for (int i = 0; i < n; ++i) dpsi0[i] = tang[i][0];
    }
    const double grad2 = c0.dot(dpsi0);
    double div = 0.0;
    for (int i = 0; i < n; ++i) {
        div += shape_detail::fd_scalar_derivative(
            [&](const Vec& s) {
                auto [c, sq] = grad_field(s);
                return sq * c[i];
            },
            t, i, fd.h2, fd.order2);
    }
    const double lap_psi0 = div / sq0;
    return (1.0 + grad2) / (psi0 * psi0) - 2.0 * lap_psi0 / (n * psi0);
}

// Cross-checked per-point report for catalog immersions.
struct InvariantsReport {
    int samples = 0;
    double max_cone_defect = 0.0;      // |<psi,psi>| for light-cone members
    double max_frame_null_xi = 0.0;    // |<xi,xi>|
    double max_frame_null_eta = 0.0;   // |<eta,eta>|
    double max_frame_pairing = 0.0;    // |<xi,eta> - 1|
    double max_frame_tangency = 0.0;   // |<xi, d_i psi>|, |<eta, d_i psi>|
    double max_a_xi_defect = 0.0;      // |A_xi + Id| (light cone)
    double max_trace_xi_defect = 0.0;  // |tr A_xi + n|
    double max_hh_spread = 0.0;        // spread across <H,H> routes
    double max_identity_2805 = 0.0;    // |S - n(n-1)<H,H>|
    double max_identity_2607 = 0.0;    // |n<H,H> - <II,II>|
    double min_umbilic_defect = 0.0;
    double max_umbilic_defect = 0.0;
    double max_self_adjoint_defect = 0.0;  // asymmetry of g A
    double max_second_form_defect = 0.0;   // II vs normal part of dd psi
    double hh_mean = 0.0;
    double hh_min = 0.0, hh_max = 0.0;
};

inline InvariantsReport invariants_report(const Immersion& im, const LightlikeFrame& frame,
                                          const std::vector<Vec>& points, const ChartFd& fd = {},
                                          bool with_psi0_route = true) {
    InvariantsReport rep;
    rep.samples = static_cast<int>(points.size());
    const int n = im.n;
    bool first = true;
    std::vector<double> hh_vals;
    for (const Vec& t : points) {
        const ShapeData sd = shape_operators(im, frame, t, fd);
        if (im.in_light_cone)
            rep.max_cone_defect =
                std::max(rep.max_cone_defect, std::abs(minkowski_norm2(sd.psi)));
        rep.max_frame_null_xi =
            std::max(rep.max_frame_null_xi, std::abs(minkowski_norm2(sd.xi)));
        rep.max_frame_null_eta =
            std::max(rep.max_frame_null_eta, std::abs(minkowski_norm2(sd.eta)));
        rep.max_frame_pairing =
            std::max(rep.max_frame_pairing, std::abs(minkowski_dot(sd.xi, sd.eta) - 1.0));
        for (const Vec& tv : sd.tangents) {
            rep.max_frame_tangency = std::max(rep.max_frame_tangency,
                                              std::abs(minkowski_dot(sd.xi, tv)));
            rep.max_frame_tangency = std::max(rep.max_frame_tangency,
                                              std::abs(minkowski_dot(sd.eta, tv)));
        }
        if (im.in_light_cone) {
            rep.max_a_xi_defect = std::max(
                rep.max_a_xi_defect,
                (sd.A_xi + Mat::Identity(n, n)).cwiseAbs().maxCoeff());
            rep.max_trace_xi_defect =
                std::max(rep.max_trace_xi_defect, std::abs(sd.tr_A_xi + n));
        }
        const double hh0 = sd.hh_traces();
        hh_vals.push_back(hh0);
        double spread = 0.0;
        if (with_psi0_route && im.in_light_cone) {
            const double hh1 = hh_via_psi0(im, t, fd);
            spread = std::max(spread, std::abs(hh1 - hh0));
        }
        if (im.graph_field) {
            const SpherePoint x = SpherePoint::normalized(sd.psi.tail(sd.psi.size() - 1));
            const double hh2 = mean_curvature_sq(*im.graph_field, x);
            spread = std::max(spread, std::abs(hh2 - hh0));
        }
        rep.max_hh_spread = std::max(rep.max_hh_spread, spread);
        rep.max_identity_2805 =
            std::max(rep.max_identity_2805,
                     std::abs(sd.scalar_curvature_extrinsic() - n * (n - 1.0) * hh0));
        rep.max_identity_2607 =
            std::max(rep.max_identity_2607, std::abs(n * hh0 - sd.second_form_sq()));
        const double ud = sd.umbilicity_defect();
        if (first) {
            rep.min_umbilic_defect = rep.max_umbilic_defect = ud;
            rep.hh_min = rep.hh_max = hh0;
            first = false;
        } else {
            rep.min_umbilic_defect = std::min(rep.min_umbilic_defect, ud);
            rep.max_umbilic_defect = std::max(rep.max_umbilic_defect, ud);
            rep.hh_min = std::min(rep.hh_min, hh0);
            rep.hh_max = std::max(rep.hh_max, hh0);
        }
        rep.hh_mean += hh0;
        rep.max_self_adjoint_defect = std::max(
            rep.max_self_adjoint_defect,
            ((sd.g * sd.A_xi) - (sd.g * sd.A_xi).transpose()).cwiseAbs().maxCoeff());
        rep.max_self_adjoint_defect = std::max(
            rep.max_self_adjoint_defect,
            ((sd.g * sd.A_eta) - (sd.g * sd.A_eta).transpose()).cwiseAbs().maxCoeff());
        // second fundamental form against ambient second derivatives
        for (int i = 0; i < n; ++i)
            for (int j = 0; j <= i; ++j) {
                auto di = [&](const Vec& s) {
                    return shape_detail::fd_vector_derivative(im.map, s, j, fd.h2, 2);
                };
                Vec ddpsi = shape_detail::fd_vector_derivative(di, t, i, fd.h2, 2);
                Vec rhs(n);
                for (int k = 0; k < n; ++k) rhs[k] = minkowski_dot(ddpsi, sd.tangents[k]);
                const Vec c = sd.g_inv * rhs;
                Vec normal_part = ddpsi;
                for (int k = 0; k < n; ++k) normal_part -= c[k] * sd.tangents[k];
                Vec ei = Vec::Zero(n), ej = Vec::Zero(n);
                ei[i] = 1.0;
                ej[j] = 1.0;
                const Vec II = sd.b_form(sd.A_eta, ei, ej) * sd.xi +
                               sd.b_form(sd.A_xi, ei, ej) * sd.eta;
                rep.max_second_form_defect = std::max(
                    rep.max_second_form_defect, (normal_part - II).cwiseAbs().maxCoeff());
            }
    }
    if (!hh_vals.empty()) rep.hh_mean = pairwise_sum(hh_vals) / hh_vals.size();
    return rep;
}

// Factor a sphere-parametrized light-cone immersion as psi = i_f o Phi.
struct GraphFactorization {
    ScalarField f;                                     // f = log psi0
    std::function<SpherePoint(const SpherePoint&)> Phi;  // x -> spatial(psi)/psi0
    double max_sphere_defect = 0.0;   // | |Phi(x)| - 1 |
    double max_metric_defect = 0.0;   // induced metric vs e^{2 f o Phi} Phi* g0
};

inline GraphFactorization graph_factorization(const Immersion& im, Rng& rng, int check_samples = 50,
                                              const ChartFd& fd = {}) {
    if (!im.in_light_cone || !im.sphere_map)
        throw std::invalid_argument(
            "graph_factorization: needs a sphere-parametrized light-cone immersion");
    auto smap = im.sphere_map;
    GraphFactorization out{
        make_callable_field(
            [smap](const SpherePoint& x) {
                const Vec psi = smap(x);
                if (psi[0] <= 0.0)
                    throw std::domain_error("graph_factorization: psi0 must be positive");
                return std::log(psi[0]);
            },
            im.n, "log-psi0"),
        [smap](const SpherePoint& x) {
            const Vec psi = smap(x);
            return SpherePoint::normalized(psi.tail(psi.size() - 1) / psi[0]);
        }};
    // checks at random chart samples
    for (int s = 0; s < check_samples; ++s) {
        const SpherePoint x = random_sphere_point(rng, im.n);
        const Vec psi = smap(x);
        const Vec spatial = psi.tail(psi.size() - 1) / psi[0];
        out.max_sphere_defect = std::max(out.max_sphere_defect, std::abs(spatial.norm() - 1.0));
    }
    std::vector<Vec> pts = sample_chart_points(im, rng, check_samples, 0.05);
    for (const Vec& t : pts) {
        std::vector<Vec> tang = immersion_tangents(im, t, fd);
        const Mat g = gram_matrix(tang);
        // pull back the round metric through Phi in chart coordinates
        auto phi_chart = [&](const Vec& s) {
            const Vec psi = im.map(s);
            return Vec(psi.tail(psi.size() - 1) / psi[0]);
        };
        Mat pullback(im.n, im.n);
        std::vector<Vec> dphi(im.n);
        for (int i = 0; i < im.n; ++i)
            dphi[i] = shape_detail::fd_vector_derivative(phi_chart, t, i, fd.h1, fd.order1);
        const Vec phi_val = phi_chart(t);
        const double ef2_at_phi =
            std::exp(2.0 * out.f.value(SpherePoint::normalized(phi_val)));
        for (int i = 0; i < im.n; ++i)
            for (int j = 0; j < im.n; ++j) pullback(i, j) = ef2_at_phi * dphi[i].dot(dphi[j]);
        out.max_metric_defect =
            std::max(out.max_metric_defect, (g - pullback).cwiseAbs().maxCoeff());
    }
    return out;
}

}  // namespace lightcone
