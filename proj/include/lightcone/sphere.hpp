#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "lightcone/numerics.hpp"

namespace lightcone {

// A point of the unit sphere S^n in R^{n+1}. Construction renormalizes
// inputs close to the sphere and rejects everything else, so downstream code
// can rely on |x| = 1 to machine precision.
class SpherePoint {
public:
    explicit SpherePoint(Vec coords, double accept_tol = 1e-6) : x_(std::move(coords)) {
        if (x_.size() < 2) throw std::invalid_argument("SpherePoint: need at least S^1");
        const double r = x_.norm();
        if (!(std::abs(r - 1.0) <= accept_tol))
            throw std::invalid_argument("SpherePoint: vector of norm " + std::to_string(r) +
                                        " is not on the unit sphere");
        x_ /= r;
    }

    // Normalize any nonzero vector onto the sphere.
    static SpherePoint normalized(const Vec& v) {
        const double r = v.norm();
        if (r == 0.0) throw std::invalid_argument("SpherePoint::normalized: zero vector");
        return SpherePoint(v / r, 1e-9);
    }

    const Vec& coords() const { return x_; }
    double operator[](int i) const { return x_[i]; }
    int n() const { return static_cast<int>(x_.size()) - 1; }
    int ambient_dim() const { return static_cast<int>(x_.size()); }

private:
    Vec x_;
};

inline SpherePoint north_pole(int n) {
    Vec x = Vec::Zero(n + 1);
    x[n] = 1.0;
    return SpherePoint(std::move(x));
}

inline SpherePoint south_pole(int n) {
    Vec x = Vec::Zero(n + 1);
    x[n] = -1.0;
    return SpherePoint(std::move(x));
}

inline SpherePoint random_sphere_point(Rng& rng, int n) {
    Vec v = rng.normal_vector(n + 1);
    while (v.norm() < 1e-8) v = rng.normal_vector(n + 1);
    return SpherePoint::normalized(v);
}

// Hyperspherical charts used to parametrize S^n, n = 2..4. The polar axis is
// the last coordinate x_{n+1}; the final angle is the periodic one.
//   n=2: x = (sin t0 cos t1, sin t0 sin t1, cos t0)
//   n=3: x = (sin t0 sin t1 sin t2, sin t0 sin t1 cos t2, sin t0 cos t1, cos t0)
//   n=4: one more polar cascade.
inline Vec sphere_chart_point(const Vec& t, int n) {
    if (t.size() != n) throw std::invalid_argument("sphere_chart_point: angle count != n");
    Vec x(n + 1);
    switch (n) {
        case 2:
            x << std::sin(t[0]) * std::cos(t[1]), std::sin(t[0]) * std::sin(t[1]), std::cos(t[0]);
            return x;
        case 3: {
            const double s0 = std::sin(t[0]), s1 = std::sin(t[1]);
            x << s0 * s1 * std::sin(t[2]), s0 * s1 * std::cos(t[2]), s0 * std::cos(t[1]),
                std::cos(t[0]);
            return x;
        }
        case 4: {
            const double s0 = std::sin(t[0]), s1 = std::sin(t[1]), s2 = std::sin(t[2]);
            x << s0 * s1 * s2 * std::sin(t[3]), s0 * s1 * s2 * std::cos(t[3]),
                s0 * s1 * std::cos(t[2]), s0 * std::cos(t[1]), std::cos(t[0]);
            return x;
        }
        default:
            throw std::invalid_argument("sphere_chart_point: supported for n = 2, 3, 4");
    }
}

// Angles for a point of S^2 in the chart above: t0 = polar from +x3 axis,
// t1 = atan2(x2, x1) wrapped to [0, 2pi).
inline Eigen::Vector2d sphere2_angles(const SpherePoint& p) {
    if (p.n() != 2) throw std::invalid_argument("sphere2_angles: point not on S^2");
    const Vec& x = p.coords();
    double theta = std::acos(std::clamp(x[2], -1.0, 1.0));
    double phi = std::atan2(x[1], x[0]);
    if (phi < 0) phi += 2.0 * M_PI;
    return {theta, phi};
}

// Ambient orthonormal tangent frame (e_theta, e_phi) of S^2 away from poles.
inline std::pair<Vec, Vec> sphere2_tangent_frame(double theta, double phi) {
    Vec et(3), ep(3);
    et << std::cos(theta) * std::cos(phi), std::cos(theta) * std::sin(phi), -std::sin(theta);
    ep << -std::sin(phi), std::cos(phi), 0.0;
    return {et, ep};
}

}  // namespace lightcone
