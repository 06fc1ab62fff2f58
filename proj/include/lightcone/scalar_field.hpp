#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lightcone/expression.hpp"
#include "lightcone/numerics.hpp"
#include "lightcone/sphere.hpp"
#include "lightcone/spherical_harmonics.hpp"

namespace lightcone {

// A smooth real function on S^n. Representations:
//   - constant / linear restriction  b + <c, x>
//   - expression over ambient coordinates x1..x{n+1} (symbolic derivatives)
//   - member of the explicit solution family (v, k)
//   - band-limited spherical-harmonic coefficients (n = 2)
//   - pointwise composition g(f) with smooth g
//   - arbitrary callable (finite differences only)
//
// Derivatives: representations above except the last provide analytic
// tangential gradients and Laplace-Beltrami values. The uniform fallback is
// central finite differences applied to the degree-0 homogeneous extension
// F(y) = f(y/|y|); for that extension the ambient gradient at |y| = 1 is
// already tangential and the ambient Laplacian equals Laplace-Beltrami.

struct FdSettings {
    double gradient_step = 1e-5;
    double laplacian_step = 1e-4;
    int order = 2;  // 2 or 4
};

namespace field_detail {

class Impl {
public:
    virtual ~Impl() = default;
    virtual double value(const SpherePoint& x) const = 0;
    virtual bool analytic() const = 0;
    virtual Vec gradient(const SpherePoint&) const {
        throw std::logic_error("no analytic gradient");
    }
    virtual double laplacian(const SpherePoint&) const {
        throw std::logic_error("no analytic laplacian");
    }
    virtual std::string describe() const = 0;
};

using ImplPtr = std::shared_ptr<const Impl>;

// Tangential projection of an ambient vector at x.
inline Vec project_tangent(const Vec& g, const Vec& x) { return g - g.dot(x) * x; }

class LinearImpl final : public Impl {
public:
    LinearImpl(double b, Vec c) : b_(b), c_(std::move(c)) {}
    double value(const SpherePoint& x) const override { return b_ + c_.dot(x.coords()); }
    bool analytic() const override { return true; }
    Vec gradient(const SpherePoint& x) const override {
        return project_tangent(c_, x.coords());
    }
    double laplacian(const SpherePoint& x) const override {
        const int n = x.n();
        return -static_cast<double>(n) * c_.dot(x.coords());
    }
    std::string describe() const override { return "linear"; }

private:
    double b_;
    Vec c_;
};

class ExpressionImpl final : public Impl {
public:
    explicit ExpressionImpl(FieldExpression fe) : fe_(std::move(fe)) {
        if (fe_.space != VarSpace::Ambient)
            throw std::invalid_argument("field expression must use sphere variables x1..x9");
        const int nv = fe_.nvars;
        grad_.resize(nv);
        hess_.resize(nv);
        for (int i = 0; i < nv; ++i) grad_[i] = expr::diff(fe_.root, i);
        for (int i = 0; i < nv; ++i) {
            hess_[i].resize(nv);
            for (int j = 0; j <= i; ++j) hess_[i][j] = expr::diff(grad_[i], j);
        }
    }

    double value(const SpherePoint& x) const override { return expr::eval(fe_.root, x.coords()); }
    bool analytic() const override { return true; }

    Vec gradient(const SpherePoint& x) const override {
        const Vec& p = x.coords();
        Vec g = Vec::Zero(p.size());
        for (int i = 0; i < static_cast<int>(grad_.size()); ++i) g[i] = expr::eval(grad_[i], p);
        return project_tangent(g, p);
    }

    double laplacian(const SpherePoint& x) const override {
        // For the degree-0 extension: lap = tr(H) - x^T H x - n <x, grad>.
        const Vec& p = x.coords();
        const int dim = static_cast<int>(p.size());
        const int nv = static_cast<int>(grad_.size());
        Vec g = Vec::Zero(dim);
        Mat H = Mat::Zero(dim, dim);
        for (int i = 0; i < nv; ++i) {
            g[i] = expr::eval(grad_[i], p);
            for (int j = 0; j <= i; ++j) {
                const double v = expr::eval(hess_[i][j], p);
                H(i, j) = v;
                H(j, i) = v;
            }
        }
        const int n = x.n();
        return H.trace() - p.dot(H * p) - n * p.dot(g);
    }

    std::string describe() const override { return "expr:" + fe_.source; }

    const FieldExpression& expression() const { return fe_; }

private:
    FieldExpression fe_;
    std::vector<expr::NodePtr> grad_;
    std::vector<std::vector<expr::NodePtr>> hess_;
};

// f(x) = log( (1/sqrt(k)) / (-v0 + <vbar, x>) ), the solution family of the
// constant-curvature graph equation.
class ObataImpl final : public Impl {
public:
    ObataImpl(Vec v, double k) : v_(std::move(v)), k_(k) {
        if (k_ <= 0.0) throw std::invalid_argument("obata field: k must be positive");
        if (v_.size() < 4) throw std::invalid_argument("obata field: v must live in L^{n+2}, n >= 2");
    }

    double denom(const SpherePoint& x) const {
        return -v_[0] + v_.tail(v_.size() - 1).dot(x.coords());
    }

    double value(const SpherePoint& x) const override {
        const double h = denom(x);
        if (h <= 0.0) throw FieldDomainError("obata field: nonpositive denominator");
        return -0.5 * std::log(k_) - std::log(h);
    }
    bool analytic() const override { return true; }

    Vec gradient(const SpherePoint& x) const override {
        const Vec vbar = v_.tail(v_.size() - 1);
        const double h = denom(x);
        return -project_tangent(vbar, x.coords()) / h;
    }

    double laplacian(const SpherePoint& x) const override {
        const Vec vbar = v_.tail(v_.size() - 1);
        const Vec& p = x.coords();
        const double h = denom(x);
        const int n = x.n();
        const double lap_h = -static_cast<double>(n) * vbar.dot(p);
        const double grad_h2 = project_tangent(vbar, p).squaredNorm();
        return -lap_h / h + grad_h2 / (h * h);
    }

    std::string describe() const override { return "obata"; }

    const Vec& v() const { return v_; }
    double k() const { return k_; }

private:
    Vec v_;
    double k_;
};

class SpectralImpl final : public Impl {
public:
    SpectralImpl(std::shared_ptr<const SphereTransform> tr, SpectralField f)
        : tr_(std::move(tr)), f_(std::move(f)), lap_(sh_laplacian(f_)) {}

    double value(const SpherePoint& x) const override { return tr_->evaluate(f_, x); }
    bool analytic() const override { return true; }
    Vec gradient(const SpherePoint& x) const override {
        return tr_->evaluate_with_gradient(f_, x).second;
    }
    double laplacian(const SpherePoint& x) const override { return tr_->evaluate(lap_, x); }
    std::string describe() const override { return "spectral lmax=" + std::to_string(f_.lmax); }

    const SpectralField& coefficients() const { return f_; }
    const std::shared_ptr<const SphereTransform>& transform() const { return tr_; }

private:
    std::shared_ptr<const SphereTransform> tr_;
    SpectralField f_;
    SpectralField lap_;
};

class CallableImpl final : public Impl {
public:
    explicit CallableImpl(std::function<double(const SpherePoint&)> f, std::string name)
        : f_(std::move(f)), name_(std::move(name)) {}
    double value(const SpherePoint& x) const override { return f_(x); }
    bool analytic() const override { return false; }
    std::string describe() const override { return name_; }

private:
    std::function<double(const SpherePoint&)> f_;
    std::string name_;
};

}  // namespace field_detail

class ScalarField {
public:
    ScalarField(field_detail::ImplPtr impl, int n) : impl_(std::move(impl)), n_(n) {
        if (n_ < 2) throw std::invalid_argument("ScalarField: need n >= 2");
    }

    int n() const { return n_; }
    bool analytic() const { return impl_->analytic(); }
    std::string describe() const { return impl_->describe(); }

    double value(const SpherePoint& x) const {
        check(x);
        return impl_->value(x);
    }
    double operator()(const SpherePoint& x) const { return value(x); }

    // Tangential gradient for the round metric, as an ambient vector.
    Vec gradient(const SpherePoint& x) const {
        check(x);
        if (impl_->analytic()) return impl_->gradient(x);
        return fd_gradient(x);
    }

    double laplacian(const SpherePoint& x) const {
        check(x);
        if (impl_->analytic()) return impl_->laplacian(x);
        return fd_laplacian(x);
    }

    double gradient_norm2(const SpherePoint& x) const { return gradient(x).squaredNorm(); }

    // Finite-difference oracle on the homogeneous extension; independent of
    // the analytic path and available for every representation.
    Vec fd_gradient(const SpherePoint& x, double h = FdSettings{}.gradient_step,
                    int order = 2) const {
        const Vec& p = x.coords();
        Vec g(p.size());
        for (int i = 0; i < p.size(); ++i) {
            auto f1 = [&](double s) {
                Vec y = p;
                y[i] += s;
                return impl_->value(SpherePoint::normalized(y));
            };
            g[i] = fd_derivative(f1, 0.0, h, order);
        }
        return g;
    }

    double fd_laplacian(const SpherePoint& x, double h = FdSettings{}.laplacian_step,
                        int order = 2) const {
        const Vec& p = x.coords();
        double s = 0.0;
        for (int i = 0; i < p.size(); ++i) {
            auto f1 = [&](double t) {
                Vec y = p;
                y[i] += t;
                return impl_->value(SpherePoint::normalized(y));
            };
            s += fd_second_derivative(f1, 0.0, h, order);
        }
        return s;
    }

    const field_detail::Impl* impl() const { return impl_.get(); }

    template <class T>
    const T* as() const {
        return dynamic_cast<const T*>(impl_.get());
    }

private:
    void check(const SpherePoint& x) const {
        if (x.n() != n_)
            throw std::invalid_argument("ScalarField: point dimension mismatch (field n=" +
                                        std::to_string(n_) + ", point n=" + std::to_string(x.n()) +
                                        ")");
    }

    field_detail::ImplPtr impl_;
    int n_;
};

inline ScalarField make_constant(double c, int n) {
    return ScalarField(std::make_shared<field_detail::LinearImpl>(c, Vec::Zero(n + 1)), n);
}

// b + <c, x> restricted to S^n.
inline ScalarField make_linear(double b, const Vec& c) {
    return ScalarField(std::make_shared<field_detail::LinearImpl>(b, c),
                       static_cast<int>(c.size()) - 1);
}

// Coordinate restriction x_{i+1} (0-based index i).
inline ScalarField make_coordinate(int i, int n) {
    Vec c = Vec::Zero(n + 1);
    c[i] = 1.0;
    return ScalarField(std::make_shared<field_detail::LinearImpl>(0.0, c), n);
}

inline ScalarField make_expression_field(const std::string& text, int n) {
    return ScalarField(std::make_shared<field_detail::ExpressionImpl>(parse_field(text, n)), n);
}

inline ScalarField make_expression_field(FieldExpression fe, int n) {
    return ScalarField(std::make_shared<field_detail::ExpressionImpl>(std::move(fe)), n);
}

// v in L^{n+2} with <v,v> = -1, v0 < 0; k > 0.
inline ScalarField make_obata_field(const Vec& v, double k) {
    return ScalarField(std::make_shared<field_detail::ObataImpl>(v, k),
                       static_cast<int>(v.size()) - 2);
}

inline ScalarField make_spectral_field(std::shared_ptr<const SphereTransform> tr,
                                       SpectralField f) {
    return ScalarField(std::make_shared<field_detail::SpectralImpl>(std::move(tr), std::move(f)),
                       2);
}

inline ScalarField make_callable_field(std::function<double(const SpherePoint&)> f, int n,
                                       std::string name = "callable") {
    return ScalarField(std::make_shared<field_detail::CallableImpl>(std::move(f), std::move(name)),
                       n);
}

namespace field_detail {

// g(f) with analytic chain rule when both pieces permit.
class ChainImpl final : public Impl {
public:
    ChainImpl(ScalarField inner, std::function<double(double)> g, std::function<double(double)> dg,
              std::function<double(double)> d2g, std::string name)
        : inner_(std::move(inner)),
          g_(std::move(g)),
          dg_(std::move(dg)),
          d2g_(std::move(d2g)),
          name_(std::move(name)) {}

    double value(const SpherePoint& x) const override { return g_(inner_.value(x)); }
    bool analytic() const override { return inner_.analytic(); }
    Vec gradient(const SpherePoint& x) const override {
        return dg_(inner_.value(x)) * inner_.gradient(x);
    }
    double laplacian(const SpherePoint& x) const override {
        const double u = inner_.value(x);
        return dg_(u) * inner_.laplacian(x) + d2g_(u) * inner_.gradient(x).squaredNorm();
    }
    std::string describe() const override { return name_ + "(" + inner_.describe() + ")"; }

private:
    ScalarField inner_;
    std::function<double(double)> g_, dg_, d2g_;
    std::string name_;
};

}  // namespace field_detail

inline ScalarField compose(ScalarField f, std::function<double(double)> g,
                           std::function<double(double)> dg, std::function<double(double)> d2g,
                           std::string name = "chain") {
    const int n = f.n();
    return ScalarField(std::make_shared<field_detail::ChainImpl>(
                           std::move(f), std::move(g), std::move(dg), std::move(d2g),
                           std::move(name)),
                       n);
}

// e^{c f}
inline ScalarField exp_scaled(const ScalarField& f, double c) {
    return compose(
        f, [c](double u) { return std::exp(c * u); }, [c](double u) { return c * std::exp(c * u); },
        [c](double u) { return c * c * std::exp(c * u); }, "exp_scaled");
}

// f + c
inline ScalarField shifted(const ScalarField& f, double c) {
    return compose(
        f, [c](double u) { return u + c; }, [](double) { return 1.0; },
        [](double) { return 0.0; }, "shifted");
}

}  // namespace lightcone
