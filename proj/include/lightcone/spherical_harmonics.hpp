#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "lightcone/numerics.hpp"
#include "lightcone/sphere.hpp"

namespace lightcone {

// Real spherical harmonics on S^2 with orthonormal L^2 normalization.
// Coefficient layout: index(l, m) = l^2 + l + m with m = -l..l.
//   Y_{l,0}  =        Pbar_{l,0}(cos th)
//   Y_{l,m}  = sqrt2  Pbar_{l,m}(cos th) cos(m ph)   (m > 0)
//   Y_{l,-m} = sqrt2  Pbar_{l,m}(cos th) sin(m ph)   (m > 0)
// Pbar is the fully normalized associated Legendre function (no
// Condon-Shortley phase).

inline int sh_index(int l, int m) { return l * l + l + m; }
inline int sh_coeff_count(int lmax) { return (lmax + 1) * (lmax + 1); }

struct SpectralField {
    int lmax = 0;
    Vec coeffs;  // size (lmax+1)^2

    SpectralField() = default;
    explicit SpectralField(int lmax_) : lmax(lmax_), coeffs(Vec::Zero(sh_coeff_count(lmax_))) {}
    SpectralField(int lmax_, Vec c) : lmax(lmax_), coeffs(std::move(c)) {
        if (coeffs.size() != sh_coeff_count(lmax))
            throw std::invalid_argument("SpectralField: coefficient count does not match lmax");
    }

    double& at(int l, int m) { return coeffs[sh_index(l, m)]; }
    double at(int l, int m) const { return coeffs[sh_index(l, m)]; }
};

// Multiply each degree-l coefficient by -l(l+1): the Laplace-Beltrami
// operator of the round metric in this basis.
inline SpectralField sh_laplacian(const SpectralField& f) {
    SpectralField out(f.lmax);
    for (int l = 0; l <= f.lmax; ++l)
        for (int m = -l; m <= l; ++m)
            out.at(l, m) = -static_cast<double>(l) * (l + 1) * f.at(l, m);
    return out;
}

namespace detail {

// Packed (l,m) index for m >= 0 tables: rows m, entries l = m..lmax.
inline int plm_index(int lmax, int l, int m) {
    return m * (lmax + 1) - (m * (m - 1)) / 2 + (l - m);
}
inline int plm_count(int lmax) { return (lmax + 1) * (lmax + 2) / 2; }

// Fully normalized associated Legendre values at x = cos(theta).
// Stable three-term recurrences; fine for the moderate degrees used here.
inline void legendre_normalized(int lmax, double x, double* out) {
    const double sx = std::sqrt(std::max(0.0, 1.0 - x * x));  // sin(theta)
    out[plm_index(lmax, 0, 0)] = std::sqrt(1.0 / (4.0 * M_PI));
    for (int m = 1; m <= lmax; ++m) {
        out[plm_index(lmax, m, m)] =
            out[plm_index(lmax, m - 1, m - 1)] * sx * std::sqrt((2.0 * m + 1.0) / (2.0 * m));
    }
    for (int m = 0; m < lmax; ++m) {
        out[plm_index(lmax, m + 1, m)] =
            out[plm_index(lmax, m, m)] * x * std::sqrt(2.0 * m + 3.0);
    }
    for (int m = 0; m <= lmax; ++m) {
        for (int l = m + 2; l <= lmax; ++l) {
            const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - m * m));
            const double b = std::sqrt((static_cast<double>(l - 1) * (l - 1) - m * m) /
                                       (4.0 * static_cast<double>(l - 1) * (l - 1) - 1.0));
            out[plm_index(lmax, l, m)] =
                a * (x * out[plm_index(lmax, l - 1, m)] - b * out[plm_index(lmax, l - 2, m)]);
        }
    }
}

}  // namespace detail

// Pseudospectral grid: Gauss-Legendre in cos(theta) times uniform phi.
// Analysis is exact for band-limited input when ntheta >= lmax+1 and
// nphi >= 2*lmax+1.
class SphereTransform {
public:
    SphereTransform(int lmax, int ntheta, int nphi) : lmax_(lmax), ntheta_(ntheta), nphi_(nphi) {
        if (lmax < 0) throw std::invalid_argument("SphereTransform: lmax < 0");
        if (ntheta < lmax + 1 || nphi < 2 * lmax + 1)
            throw std::invalid_argument(
                "SphereTransform: grid too coarse for lmax (need >= (lmax+1) x (2 lmax+1))");
        const GaussLegendreRule gl = gauss_legendre(ntheta);
        u_ = gl.nodes;
        wu_ = gl.weights;
        theta_.resize(ntheta);
        plm_.resize(static_cast<std::size_t>(ntheta) * detail::plm_count(lmax));
        for (int i = 0; i < ntheta; ++i) {
            theta_[i] = std::acos(std::clamp(u_[i], -1.0, 1.0));
            detail::legendre_normalized(lmax, u_[i],
                                        plm_.data() + static_cast<std::size_t>(i) * detail::plm_count(lmax));
        }
        cosm_.assign(static_cast<std::size_t>(lmax + 1) * nphi, 0.0);
        sinm_.assign(static_cast<std::size_t>(lmax + 1) * nphi, 0.0);
        for (int m = 0; m <= lmax; ++m)
            for (int j = 0; j < nphi; ++j) {
                const double phi = 2.0 * M_PI * j / nphi;
                cosm_[static_cast<std::size_t>(m) * nphi + j] = std::cos(m * phi);
                sinm_[static_cast<std::size_t>(m) * nphi + j] = std::sin(m * phi);
            }
    }

    // default grid 64 x 128, widened only when the band limit requires it
    static SphereTransform with_default_grid(int lmax) {
        const int nt = std::max(64, lmax + 2);
        return SphereTransform(lmax, nt, 2 * nt);
    }

    int lmax() const { return lmax_; }
    int ntheta() const { return ntheta_; }
    int nphi() const { return nphi_; }
    double theta(int i) const { return theta_[i]; }
    double phi(int j) const { return 2.0 * M_PI * j / nphi_; }
    double gl_weight(int i) const { return wu_[i]; }

    SpherePoint grid_point(int i, int j) const {
        Vec x(3);
        const double st = std::sin(theta_[i]);
        x << st * std::cos(phi(j)), st * std::sin(phi(j)), u_[i];
        return SpherePoint(std::move(x));
    }

    // Area weight of node (i, j) for the round metric.
    double node_weight(int i) const { return wu_[i] * (2.0 * M_PI / nphi_); }

    // values(i, j) = f(theta_i, phi_j)
    Mat synthesize(const SpectralField& f) const {
        check_field(f);
        Mat vals(ntheta_, nphi_);
        const int L = lmax_;
        std::vector<double> gc(L + 1), gs(L + 1);
        const double sqrt2 = std::sqrt(2.0);
        for (int i = 0; i < ntheta_; ++i) {
            const double* P = plm_row(i);
            for (int m = 0; m <= L; ++m) {
                double ac = 0.0, as = 0.0;
                for (int l = m; l <= L; ++l) {
                    const double p = P[detail::plm_index(L, l, m)];
                    ac += f.at(l, m) * p;
                    if (m > 0) as += f.at(l, -m) * p;
                }
                gc[m] = (m == 0) ? ac : sqrt2 * ac;
                gs[m] = (m == 0) ? 0.0 : sqrt2 * as;
            }
            for (int j = 0; j < nphi_; ++j) {
                double s = gc[0];
                for (int m = 1; m <= L; ++m)
                    s += gc[m] * cosm(m, j) + gs[m] * sinm(m, j);
                vals(i, j) = s;
            }
        }
        return vals;
    }

    SpectralField analyze(const Mat& vals) const {
        if (vals.rows() != ntheta_ || vals.cols() != nphi_)
            throw std::invalid_argument("analyze: grid size mismatch");
        const int L = lmax_;
        SpectralField f(L);
        const double dphi = 2.0 * M_PI / nphi_;
        const double sqrt2 = std::sqrt(2.0);
        std::vector<double> fc(L + 1), fs(L + 1);
        for (int i = 0; i < ntheta_; ++i) {
            for (int m = 0; m <= L; ++m) {
                double ac = 0.0, as = 0.0;
                for (int j = 0; j < nphi_; ++j) {
                    ac += vals(i, j) * cosm(m, j);
                    as += vals(i, j) * sinm(m, j);
                }
                fc[m] = ac;
                fs[m] = as;
            }
            const double wi = wu_[i] * dphi;
            const double* P = plm_row(i);
            for (int m = 0; m <= L; ++m) {
                for (int l = m; l <= L; ++l) {
                    const double p = P[detail::plm_index(L, l, m)];
                    if (m == 0) {
                        f.at(l, 0) += wi * p * fc[0];
                    } else {
                        f.at(l, m) += wi * sqrt2 * p * fc[m];
                        f.at(l, -m) += wi * sqrt2 * p * fs[m];
                    }
                }
            }
        }
        return f;
    }

    // Point evaluation of a band-limited field at an arbitrary sphere point.
    double evaluate(const SpectralField& f, const SpherePoint& p) const {
        check_field(f);
        double val, dth, dph;
        evaluate_impl(f, p, false, val, dth, dph);
        return val;
    }

    // Value plus tangential gradient (ambient components, orthogonal to p).
    std::pair<double, Vec> evaluate_with_gradient(const SpectralField& f,
                                                  const SpherePoint& p) const {
        check_field(f);
        double val, dth, dph;
        evaluate_impl(f, p, true, val, dth, dph);
        const Vec& x = p.coords();
        double st = std::sqrt(std::max(1.0 - x[2] * x[2], 1e-28));
        const double phi = std::atan2(x[1], x[0]);
        auto [et, ep] = sphere2_tangent_frame(std::acos(std::clamp(x[2], -1.0, 1.0)), phi);
        Vec grad = dth * et + (dph / st) * ep;
        return {val, grad};
    }

private:
    void check_field(const SpectralField& f) const {
        if (f.lmax != lmax_) throw std::invalid_argument("SpectralField lmax mismatch");
    }

    const double* plm_row(int i) const {
        return plm_.data() + static_cast<std::size_t>(i) * detail::plm_count(lmax_);
    }
    double cosm(int m, int j) const { return cosm_[static_cast<std::size_t>(m) * nphi_ + j]; }
    double sinm(int m, int j) const { return sinm_[static_cast<std::size_t>(m) * nphi_ + j]; }

    void evaluate_impl(const SpectralField& f, const SpherePoint& p, bool with_grad, double& val,
                       double& dval_dtheta, double& dval_dphi) const {
        const int L = lmax_;
        const Vec& x = p.coords();
        const double ct = std::clamp(x[2], -1.0, 1.0);
        const double st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
        const double phi = std::atan2(x[1], x[0]);
        std::vector<double> P(detail::plm_count(L));
        detail::legendre_normalized(L, ct, P.data());
        const double sqrt2 = std::sqrt(2.0);
        val = 0.0;
        dval_dtheta = 0.0;
        dval_dphi = 0.0;
        for (int m = 0; m <= L; ++m) {
            const double cm = std::cos(m * phi), sm = std::sin(m * phi);
            double ac = 0.0, as = 0.0, dc = 0.0, ds = 0.0;
            for (int l = m; l <= L; ++l) {
                const double plm = P[detail::plm_index(L, l, m)];
                ac += f.at(l, m) * plm;
                if (m > 0) as += f.at(l, -m) * plm;
                if (with_grad) {
                    // d Pbar_{l,m}/d theta = (l ct Pbar_{l,m} - c_lm Pbar_{l-1,m}) / st
                    double dplm = l * ct * plm;
                    if (l > m) {
                        const double c =
                            std::sqrt((static_cast<double>(l) * l - m * m) * (2.0 * l + 1.0) /
                                      (2.0 * l - 1.0));
                        dplm -= c * P[detail::plm_index(L, l - 1, m)];
                    }
                    dplm /= std::max(st, 1e-14);
                    dc += f.at(l, m) * dplm;
                    if (m > 0) ds += f.at(l, -m) * dplm;
                }
            }
            if (m == 0) {
                val += ac;
                dval_dtheta += dc;
            } else {
                val += sqrt2 * (ac * cm + as * sm);
                if (with_grad) {
                    dval_dtheta += sqrt2 * (dc * cm + ds * sm);
                    dval_dphi += sqrt2 * m * (-ac * sm + as * cm);
                }
            }
        }
    }

    int lmax_, ntheta_, nphi_;
    std::vector<double> u_, wu_, theta_;
    std::vector<double> plm_;
    std::vector<double> cosm_, sinm_;
};

// Text format: header "shcoeffs n=2 lmax=<L>", then one "<l> <m> <value>"
// line per coefficient.
inline void write_spectral_field(std::ostream& os, const SpectralField& f) {
    os << "shcoeffs n=2 lmax=" << f.lmax << "\n";
    char buf[64];
    for (int l = 0; l <= f.lmax; ++l)
        for (int m = -l; m <= l; ++m) {
            std::snprintf(buf, sizeof buf, "%d %d %.17g\n", l, m, f.at(l, m));
            os << buf;
        }
}

inline void save_spectral_field(const std::string& path, const SpectralField& f) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    write_spectral_field(os, f);
}

inline SpectralField read_spectral_field(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw std::runtime_error("shcoeffs: empty input");
    int n = 0, lmax = -1;
    if (std::sscanf(header.c_str(), "shcoeffs n=%d lmax=%d", &n, &lmax) != 2 || n != 2 || lmax < 0)
        throw std::runtime_error("shcoeffs: bad header '" + header + "'");
    SpectralField f(lmax);
    std::string line;
    int count = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        int l, m;
        double v;
        if (!(ls >> l >> m >> v)) throw std::runtime_error("shcoeffs: bad line '" + line + "'");
        if (l < 0 || l > lmax || m < -l || m > l)
            throw std::runtime_error("shcoeffs: (l,m) out of range in '" + line + "'");
        f.at(l, m) = v;
        ++count;
    }
    if (count != sh_coeff_count(lmax))
        throw std::runtime_error("shcoeffs: expected " + std::to_string(sh_coeff_count(lmax)) +
                                 " coefficient lines, got " + std::to_string(count));
    return f;
}

inline SpectralField load_spectral_field(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open for reading: " + path);
    return read_spectral_field(is);
}

}  // namespace lightcone
