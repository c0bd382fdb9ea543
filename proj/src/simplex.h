#pragma once

#include "nsslab/types.h"

namespace nsslab::detail {

struct LpResult {
  bool bounded = true;
  double value = 0.0;
  Vec x;
};

/// maximize cᵀx subject to Ax <= b, x >= 0, for b >= 0 (the origin is
/// feasible). Dense tableau simplex with Bland's rule.
LpResult SolveCanonicalLp(const Mat& a, const Vec& b, const Vec& c);

}  // namespace nsslab::detail
