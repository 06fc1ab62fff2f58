#pragma once

// Numerical geometry of codimension-two spacelike submanifolds of
// Lorentz-Minkowski space contained in the light cone: conformal curvature
// formulas on S^n, chart-based immersion diagnostics, quadrature audits of
// the divergence-theorem integral identities, and a pseudospectral Newton
// solver for graphs of constant squared mean curvature with classification
// against the explicit solution family.

#include "lightcone/audit.hpp"
#include "lightcone/conformal.hpp"
#include "lightcone/expression.hpp"
#include "lightcone/immersion.hpp"
#include "lightcone/lorentz.hpp"
#include "lightcone/numerics.hpp"
#include "lightcone/quadrature.hpp"
#include "lightcone/report.hpp"
#include "lightcone/scalar_field.hpp"
#include "lightcone/shape.hpp"
#include "lightcone/solver.hpp"
#include "lightcone/sphere.hpp"
#include "lightcone/spherical_harmonics.hpp"
