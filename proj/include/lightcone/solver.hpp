#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "lightcone/conformal.hpp"
#include "lightcone/quadrature.hpp"
#include "lightcone/scalar_field.hpp"
#include "lightcone/spherical_harmonics.hpp"

namespace lightcone {

// Damped pseudospectral Newton solver, n = 2, for
//   r(f) = lap f - (1 - k e^{2f}) = 0
// (half of the general graph equation, whose gradient term vanishes at
// n = 2). The linearization L = lap + 2 k e^{2f} has a three-dimensional
// near-kernel along solutions (the tangent of the solution family), so the
// Newton step is taken in the Levenberg-Marquardt least-squares sense
//   (L^2 + lambda) delta = -L r,
// solved by conjugate gradients with a diagonal spectral preconditioner.

struct SolverConfig {
    double k = 1.0;
    int lmax = 32;
    int ntheta = 64, nphi = 128;
    double tol = 1e-10;  // max-norm of r on the grid
    int max_iterations = 60;
    double lambda0 = 1e-3;
    double lambda_decrease = 0.33;
    double lambda_increase = 3.0;
    double lambda_min = 1e-14, lambda_max = 1e8;
    int max_line_search = 10;
    int cg_max_iterations = 500;
    double cg_tol = 1e-13;
    double overflow_guard = 40.0;  // reject steps with max |2 f| beyond this
    double max_step_sup = 1.0;     // trust cap on max |delta f| per step
    std::uint64_t seed = 0;        // recorded in diagnostics

    void validate() const {
        if (k <= 0.0) throw std::invalid_argument("SolverConfig: k must be positive");
        if (tol <= 0.0 || lambda0 <= 0.0) throw std::invalid_argument("SolverConfig: tolerances must be positive");
        if (ntheta < lmax + 1 || nphi < 2 * lmax + 1)
            throw std::invalid_argument("SolverConfig: grid must be at least (lmax+1) x (2 lmax+1)");
    }
};

struct SolveDiagnostics {
    bool converged = false;
    int iterations = 0;
    double residual_max = std::numeric_limits<double>::infinity();
    std::vector<double> residual_max_history;
    std::vector<double> residual_l2_history;
    std::vector<double> lambda_history;
    std::vector<int> cg_iterations;
    int rejected_steps = 0;
    std::string message;
};

struct SolveResult {
    SpectralField f;
    std::shared_ptr<const SphereTransform> transform;
    SolveDiagnostics diag;
    SolverConfig config;

    ScalarField field() const { return make_spectral_field(transform, f); }
};

namespace solver_detail {

inline Vec laplacian_diagonal(int lmax) {
    Vec d(sh_coeff_count(lmax));
    for (int l = 0; l <= lmax; ++l)
        for (int m = -l; m <= l; ++m) d[sh_index(l, m)] = -static_cast<double>(l) * (l + 1);
    return d;
}

// L v = lap v + 2k analyze(e^{2f} . synth(v)); symmetric in coefficient space.
struct Linearization {
    const SphereTransform* tr;
    const Vec* lap_diag;
    const Mat* weight;  // e^{2f} on the grid
    double k;

    Vec apply(const Vec& v) const {
        SpectralField s(tr->lmax(), v);
        Mat g = tr->synthesize(s);
        g.array() *= weight->array();
        SpectralField out = tr->analyze(g);
        return Vec(lap_diag->cwiseProduct(v) + 2.0 * k * out.coeffs);
    }
};

// Preconditioned CG for (L^2 + lambda) x = b.
inline std::pair<Vec, int> cg_normal(const Linearization& L, const Vec& b, double lambda,
                                     const Vec& precond_diag, int max_iter, double tol) {
    Vec x = Vec::Zero(b.size());
    Vec r = b;
    Vec z = r.cwiseQuotient(precond_diag);
    Vec p = z;
    double rz = r.dot(z);
    const double b_norm = b.norm();
    if (b_norm == 0.0) return {x, 0};
    int it = 0;
    for (; it < max_iter; ++it) {
        const Vec Ap = L.apply(L.apply(p)) + lambda * p;
        const double denom = p.dot(Ap);
        if (!(denom > 0.0)) break;
        const double alpha = rz / denom;
        x += alpha * p;
        r -= alpha * Ap;
        if (r.norm() <= tol * b_norm) {
            ++it;
            break;
        }
        z = r.cwiseQuotient(precond_diag);
        const double rz_new = r.dot(z);
        p = z + (rz_new / rz) * p;
        rz = rz_new;
    }
    return {x, it};
}

}  // namespace solver_detail

// Spectral residual and grid residual of the current iterate. The line
// search merit is the L^2(S^2) norm of the grid residual, which also sees
// the aliasing part that the projected coefficients cannot.
struct ResidualEval {
    Vec spec;       // coefficients of lap f - 1 + k e^{2f} (grid-projected)
    Mat grid;       // pointwise residual on the grid
    Mat exp2f;      // e^{2f} on the grid
    double max_abs; // max-norm over grid nodes
    double l2;      // L^2 norm of the grid residual
    bool finite;
};

inline ResidualEval evaluate_residual(const SphereTransform& tr, const Vec& lap_diag,
                                      const Vec& coeffs, double k, double overflow_guard) {
    ResidualEval ev;
    SpectralField f(tr.lmax(), coeffs);
    const Mat fg = tr.synthesize(f);
    ev.finite = fg.allFinite() && (2.0 * fg.cwiseAbs().maxCoeff() <= overflow_guard);
    if (!ev.finite) {
        ev.max_abs = std::numeric_limits<double>::infinity();
        ev.l2 = std::numeric_limits<double>::infinity();
        return ev;
    }
    ev.exp2f = (2.0 * fg).array().exp();
    SpectralField lap(tr.lmax(), Vec(lap_diag.cwiseProduct(coeffs)));
    ev.grid = tr.synthesize(lap).array() - 1.0 + k * ev.exp2f.array();
    ev.max_abs = ev.grid.cwiseAbs().maxCoeff();
    double l2sq = 0.0;
    for (int i = 0; i < tr.ntheta(); ++i) {
        double row = 0.0;
        for (int j = 0; j < tr.nphi(); ++j) row += ev.grid(i, j) * ev.grid(i, j);
        l2sq += tr.node_weight(i) * row;
    }
    ev.l2 = std::sqrt(l2sq);
    SpectralField rhs = tr.analyze(Mat(k * ev.exp2f.array() - 1.0));
    ev.spec = lap_diag.cwiseProduct(coeffs) + rhs.coeffs;
    return ev;
}

inline SolveResult solve_E(const SolverConfig& config, const SpectralField& f0) {
    config.validate();
    if (f0.lmax != config.lmax)
        throw std::invalid_argument("solve_E: initial field lmax differs from config");
    auto tr = std::make_shared<const SphereTransform>(config.lmax, config.ntheta, config.nphi);
    const Vec lap_diag = solver_detail::laplacian_diagonal(config.lmax);

    Vec c = f0.coeffs;
    {
        // constant-mode presolve: the mean equation k <e^{2(f+s)}> = 1 has
        // the exact solution s = -log(k <e^{2f}>)/2; taking it first removes
        // the dominant residual component and makes the start k-uniform
        SpectralField f(config.lmax, c);
        const Mat fg = tr->synthesize(f);
        if (!fg.allFinite() || 2.0 * fg.cwiseAbs().maxCoeff() > config.overflow_guard)
            throw std::invalid_argument("solve_E: initial field overflows e^{2f}");
        double mean = 0.0;
        for (int i = 0; i < tr->ntheta(); ++i)
            for (int j = 0; j < tr->nphi(); ++j)
                mean += tr->node_weight(i) * std::exp(2.0 * fg(i, j));
        mean /= 4.0 * M_PI;
        c[sh_index(0, 0)] += std::sqrt(4.0 * M_PI) * (-0.5 * std::log(config.k * mean));
    }
    ResidualEval cur = evaluate_residual(*tr, lap_diag, c, config.k, config.overflow_guard);
    if (!cur.finite) throw std::invalid_argument("solve_E: initial field overflows e^{2f}");

    SolveResult out;
    out.transform = tr;
    out.config = config;
    SolveDiagnostics& diag = out.diag;
    double lambda = config.lambda0;

    diag.residual_max_history.push_back(cur.max_abs);
    diag.residual_l2_history.push_back(cur.l2);

    for (int iter = 0; iter < config.max_iterations; ++iter) {
        if (cur.max_abs < config.tol) {
            diag.converged = true;
            break;
        }
        diag.iterations = iter + 1;
        solver_detail::Linearization L{tr.get(), &lap_diag, &cur.exp2f, config.k};
        // diagonal preconditioner built from the mean multiplier
        const double mean_e2f = cur.exp2f.mean();
        Vec pd(c.size());
        for (int i = 0; i < c.size(); ++i) {
            const double d = lap_diag[i] + 2.0 * config.k * mean_e2f;
            pd[i] = d * d + lambda;
        }
        auto [delta, cg_iters] =
            solver_detail::cg_normal(L, Vec(-L.apply(cur.spec)), lambda, pd,
                                     config.cg_max_iterations, config.cg_tol);
        diag.cg_iterations.push_back(cg_iters);
        diag.lambda_history.push_back(lambda);
        {
            // trust cap: keep single steps out of the stiff e^{2f} regime
            const Mat dg = tr->synthesize(SpectralField(config.lmax, delta));
            const double sup = dg.cwiseAbs().maxCoeff();
            if (sup > config.max_step_sup) delta *= config.max_step_sup / sup;
        }

        // backtracking on the step length; accept only strict decrease of |r|_2
        bool accepted = false;
        double step = 1.0;
        for (int ls = 0; ls < config.max_line_search; ++ls, step *= 0.5) {
            const Vec trial = c + step * delta;
            const ResidualEval ev =
                evaluate_residual(*tr, lap_diag, trial, config.k, config.overflow_guard);
            if (ev.finite && ev.l2 < cur.l2) {
                c = trial;
                cur = ev;
                accepted = true;
                break;
            }
        }
        if (accepted) {
            lambda = std::max(lambda * config.lambda_decrease, config.lambda_min);
        } else {
            ++diag.rejected_steps;
            lambda = lambda * config.lambda_increase;
            if (lambda > config.lambda_max) {
                diag.message = "stalled: damping exceeded lambda_max";
                break;
            }
        }
        diag.residual_max_history.push_back(cur.max_abs);
        diag.residual_l2_history.push_back(cur.l2);
    }
    if (!diag.converged && cur.max_abs < config.tol) diag.converged = true;
    diag.residual_max = cur.max_abs;
    if (!diag.converged && diag.message.empty())
        diag.message = "did not reach tolerance within max_iterations";
    out.f = SpectralField(config.lmax, c);
    return out;
}

// --- classification against the explicit solution family --------------------

struct ClassificationResult {
    bool in_family = false;
    double k_hat = 0.0;
    LorentzVec v;    // valid when in_family
    double rho = 0.0;  // relative L2 distance of e^{-f} from span{1, x1, x2, x3}
    std::string message;
};

// Project e^{-f} on span{1, x_i}; with projection coefficients (c0, c):
// k_hat = c0^2 - |c|^2, v = (-c0, c)/sqrt(k_hat).
inline ClassificationResult classify(const ScalarField& f, const QuadratureRule& rule,
                                     double rho_threshold = 1e-6) {
    if (f.n() != rule.n) throw std::invalid_argument("classify: field/rule dimension mismatch");
    const int n = f.n();
    const double vol = sphere_volume(n);
    const double coord_norm2 = vol / (n + 1);
    std::vector<double> m0(rule.nodes.size());
    std::vector<std::vector<double>> mi(n + 1, std::vector<double>(rule.nodes.size()));
    std::vector<double> norm_terms(rule.nodes.size());
    std::vector<double> evals(rule.nodes.size());
    for (std::size_t s = 0; s < rule.nodes.size(); ++s) {
        const double e = std::exp(-f.value(rule.nodes[s]));
        evals[s] = e;
        m0[s] = e * rule.weights[s];
        norm_terms[s] = e * e * rule.weights[s];
        for (int i = 0; i <= n; ++i) mi[i][s] = e * rule.nodes[s][i] * rule.weights[s];
    }
    const double c0 = pairwise_sum(m0) / vol;
    Vec cs(n + 1);
    for (int i = 0; i <= n; ++i) cs[i] = pairwise_sum(mi[i]) / coord_norm2;
    // residual of the projection
    std::vector<double> res_terms(rule.nodes.size());
    for (std::size_t s = 0; s < rule.nodes.size(); ++s) {
        double proj = c0;
        for (int i = 0; i <= n; ++i) proj += cs[i] * rule.nodes[s][i];
        const double d = evals[s] - proj;
        res_terms[s] = d * d * rule.weights[s];
    }
    ClassificationResult out;
    const double norm = std::sqrt(pairwise_sum(norm_terms));
    out.rho = std::sqrt(std::max(0.0, pairwise_sum(res_terms))) / norm;
    out.k_hat = c0 * c0 - cs.squaredNorm();
    if (out.k_hat <= 0.0) {
        out.message = "projection is not timelike (k_hat <= 0): outside the family";
        return out;
    }
    out.v = LorentzVec(n + 2);
    out.v[0] = -c0 / std::sqrt(out.k_hat);
    out.v.tail(n + 1) = cs / std::sqrt(out.k_hat);
    out.in_family = out.rho < rho_threshold;
    if (!out.in_family) out.message = "projection residual above threshold";
    return out;
}

inline ClassificationResult classify(const SolveResult& solve, double rho_threshold = 1e-6) {
    // quadrature on the solver grid itself (exact for the projections)
    QuadratureRule rule;
    rule.n = 2;
    const SphereTransform& tr = *solve.transform;
    for (int i = 0; i < tr.ntheta(); ++i)
        for (int j = 0; j < tr.nphi(); ++j) {
            rule.nodes.push_back(tr.grid_point(i, j));
            rule.weights.push_back(tr.node_weight(i));
        }
    rule.descriptor = "solver-grid";
    return classify(solve.field(), rule, rho_threshold);
}

// --- linearization spectrum --------------------------------------------------

struct KernelSpectrum {
    std::vector<double> eigenvalues;         // all, sorted by |.| ascending
    int near_zero_count = 0;                 // |lambda| < zero_tol
    double zero_tol = 0.0;
};

// Dense symmetric eigen-decomposition of L = lap + 2 k e^{2f} in the spectral
// basis. Diagnostic for the family degeneracy: three near-zero modes at
// every solution.
inline KernelSpectrum kernel_spectrum(const SpectralField& f, double k, const SphereTransform& tr,
                                      double zero_tol = 1e-8) {
    if (f.lmax != tr.lmax()) throw std::invalid_argument("kernel_spectrum: lmax mismatch");
    const int N = sh_coeff_count(f.lmax);
    const Vec lap_diag = solver_detail::laplacian_diagonal(f.lmax);
    const Mat fg = tr.synthesize(f);
    const Mat e2f = (2.0 * fg).array().exp();
    Mat L(N, N);
    Vec e = Vec::Zero(N);
    for (int j = 0; j < N; ++j) {
        e[j] = 1.0;
        SpectralField basis(f.lmax, e);
        Mat g = tr.synthesize(basis);
        g.array() *= e2f.array();
        SpectralField col = tr.analyze(g);
        L.col(j) = 2.0 * k * col.coeffs;
        L(j, j) += lap_diag[j];
        e[j] = 0.0;
    }
    L = 0.5 * (L + L.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Mat> eig(L);
    KernelSpectrum out;
    out.zero_tol = zero_tol;
    out.eigenvalues.assign(eig.eigenvalues().data(), eig.eigenvalues().data() + N);
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end(),
              [](double a, double b) { return std::abs(a) < std::abs(b); });
    for (double v : out.eigenvalues)
        if (std::abs(v) < zero_tol) ++out.near_zero_count;
    return out;
}

// Random band-limited initial data: Gaussian coefficients up to lmax_active
// with 1/(1+l)^2 decay, rescaled to the requested max amplitude.
inline SpectralField random_bandlimited(Rng& rng, const SphereTransform& tr, int lmax_active,
                                        double amplitude) {
    SpectralField f(tr.lmax());
    for (int l = 0; l <= std::min(lmax_active, tr.lmax()); ++l)
        for (int m = -l; m <= l; ++m)
            f.at(l, m) = rng.normal() / ((1.0 + l) * (1.0 + l));
    const Mat g = tr.synthesize(f);
    const double mx = g.cwiseAbs().maxCoeff();
    if (mx > 0.0) f.coeffs *= amplitude / mx;
    return f;
}

// Independent residual of a solver output: the graph equation re-evaluated
// through the finite-difference path at every grid node (max norm). Sixth
// order and a wide step: point evaluations of a band-limited field carry
// ~1e-14 noise, which a narrow stencil would amplify past the 1e-9 gate.
inline double independent_residual_max(const SolveResult& solve, double h = 1e-2) {
    const ScalarField f = solve.field();
    const SphereTransform& tr = *solve.transform;
    double worst = 0.0;
    for (int i = 0; i < tr.ntheta(); ++i)
        for (int j = 0; j < tr.nphi(); ++j) {
            const SpherePoint x = tr.grid_point(i, j);
            const double lap = f.fd_laplacian(x, h, 6);
            const double r =
                2.0 * lap - 2.0 * (1.0 - solve.config.k * std::exp(2.0 * f.value(x)));
            worst = std::max(worst, std::abs(r));
        }
    return worst;
}

}  // namespace lightcone
