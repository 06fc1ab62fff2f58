#pragma once

#include <cmath>
#include <stdexcept>

#include "lightcone/numerics.hpp"

namespace lightcone {

// Vectors of L^{n+2} are plain Eigen vectors; index 0 is the timelike
// coordinate and the metric signature is (-, +, ..., +).
using LorentzVec = Eigen::VectorXd;

inline double minkowski_dot(const LorentzVec& a, const LorentzVec& b) {
    if (a.size() != b.size())
        throw std::invalid_argument("minkowski_dot: dimension mismatch");
    if (a.size() < 2)
        throw std::invalid_argument("minkowski_dot: need dimension >= 2");
    double s = a.dot(b);
    return s - 2.0 * a[0] * b[0];
}

inline double minkowski_norm2(const LorentzVec& a) { return minkowski_dot(a, a); }

enum class CausalClass { Zero, Timelike, Lightlike, Spacelike };

// Classification is a function of <a,a> and the zero test only. The
// lightlike band is relative to the Euclidean size so the class is invariant
// under positive rescaling.
inline CausalClass causal_class(const LorentzVec& a, double rel_tol = 1e-12) {
    const double e2 = a.squaredNorm();
    if (e2 == 0.0) return CausalClass::Zero;
    const double q = minkowski_norm2(a);
    if (std::abs(q) <= rel_tol * e2) return CausalClass::Lightlike;
    return q < 0.0 ? CausalClass::Timelike : CausalClass::Spacelike;
}

inline const char* to_string(CausalClass c) {
    switch (c) {
        case CausalClass::Zero: return "zero";
        case CausalClass::Timelike: return "timelike";
        case CausalClass::Lightlike: return "lightlike";
        case CausalClass::Spacelike: return "spacelike";
    }
    return "?";
}

inline bool is_timelike(const LorentzVec& a) { return causal_class(a) == CausalClass::Timelike; }

inline bool is_future_lightlike(const LorentzVec& a, double rel_tol = 1e-12) {
    return causal_class(a, rel_tol) == CausalClass::Lightlike && a[0] > 0.0;
}

// Unit vector along coordinate axis i of L^{dim}.
inline LorentzVec lorentz_axis(int dim, int i) {
    LorentzVec v = LorentzVec::Zero(dim);
    v[i] = 1.0;
    return v;
}

}  // namespace lightcone
