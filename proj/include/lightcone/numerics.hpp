#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace lightcone {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Pairwise summation: deterministic for a fixed ordering and accurate enough
// that quadrature reductions are reproducible bit-for-bit.
inline double pairwise_sum(std::span<const double> v) {
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    if (n <= 8) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

inline double pairwise_sum(const std::vector<double>& v) {
    return pairwise_sum(std::span<const double>(v.data(), v.size()));
}

struct GaussLegendreRule {
    std::vector<double> nodes;   // in (-1, 1), ascending
    std::vector<double> weights; // all positive, sum = 2
};

// Gauss-Legendre nodes/weights by Newton iteration on P_N.
inline GaussLegendreRule gauss_legendre(int npoints) {
    if (npoints < 1) throw std::invalid_argument("gauss_legendre: need npoints >= 1");
    GaussLegendreRule rule;
    rule.nodes.resize(npoints);
    rule.weights.resize(npoints);
    const int n = npoints;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        // Chebyshev-like initial guess for the i-th root (descending order).
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            // Legendre recurrence for P_n(x) and P_{n-1}(x).
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[i] = -x;
        rule.weights[i] = w;
        rule.nodes[n - 1 - i] = x;
        rule.weights[n - 1 - i] = w;
    }
    return rule;
}

// Central finite differences of a scalar function of one real variable.
// order 2 or 4.
template <class F>
double fd_derivative(F&& f, double x, double h, int order = 2) {
    if (order == 2) {
        return (f(x + h) - f(x - h)) / (2.0 * h);
    }
    if (order == 4) {
        return (-f(x + 2 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2 * h)) / (12.0 * h);
    }
    throw std::invalid_argument("fd_derivative: order must be 2 or 4");
}

template <class F>
double fd_second_derivative(F&& f, double x, double h, int order = 2) {
    if (order == 2) {
        return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
    }
    if (order == 4) {
        return (-f(x + 2 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2 * h)) /
               (12.0 * h * h);
    }
    if (order == 6) {
        const double c3 = 1.0 / 90.0, c2 = -3.0 / 20.0, c1 = 1.5, c0 = -49.0 / 18.0;
        return (c3 * (f(x + 3 * h) + f(x - 3 * h)) + c2 * (f(x + 2 * h) + f(x - 2 * h)) +
                c1 * (f(x + h) + f(x - h)) + c0 * f(x)) /
               (h * h);
    }
    throw std::invalid_argument("fd_second_derivative: order must be 2, 4 or 6");
}

// Deterministic random source. mt19937_64 has a standardized integer stream;
// the float mappings below avoid distribution objects so that sequences are
// identical across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform() {
        // 53-bit mantissa in [0, 1)
        return (engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double normal() {
        // Box-Muller; one fresh pair per call keeps the stream simple.
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    Vec normal_vector(int dim) {
        Vec v(dim);
        for (int i = 0; i < dim; ++i) v[i] = normal();
        return v;
    }

    std::uint64_t raw() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace lightcone
