#pragma once

// Small dense phase-I simplex for feasibility of { A v = b, v >= 0 }.

#include "stochecon/types.hpp"

namespace stochecon::lp {

struct FeasibilityResult {
    bool feasible = false;
    Vector v;         // a feasible point when feasible
    Vector farkas_y;  // y with A^T y <= 0 and b.y > 0 when infeasible
    double infeasibility = 0.0;
};

/// Phase-I simplex with Bland's rule. Tolerance is relative to |b|_1.
FeasibilityResult phase_one(const Matrix& a, const Vector& b, double tol = 1e-9);

}  // namespace stochecon::lp
