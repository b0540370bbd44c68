#pragma once

#include <optional>

#include "slope/numerics.hpp"

namespace slope {

/// Dense tableau simplex for  max c'x  s.t.  A x <= b, x >= 0  with b >= 0
/// (the origin is feasible, so no phase one is needed). Bland's rule.
struct LpResult {
    enum class Status { optimal, unbounded } status;
    Vector x;
    double value = 0.0;
};

LpResult maximize_lp(const Vector& c, const Matrix& A, const Vector& b, int max_pivots = 10000);

/// Largest margin t such that D (s0 + N z) >= t componentwise for some z,
/// capped at `cap`. Returns the margin and the maximizing point s0 + N z.
/// N may have zero columns, in which case the answer is min(D s0).
struct MarginResult {
    double margin;
    Vector point;
};

MarginResult max_affine_margin(const Vector& s0, const Matrix& N, const Matrix& D, double cap);

}  // namespace slope
