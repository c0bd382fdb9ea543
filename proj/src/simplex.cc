#include "simplex.h"

#include <limits>
#include <vector>

#include "nsslab/errors.h"

namespace nsslab::detail {

LpResult SolveCanonicalLp(const Mat& a, const Vec& b, const Vec& c) {
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  if (b.size() != m || c.size() != n) throw InvalidArgument("SolveCanonicalLp: shape mismatch");
  if ((b.array() < 0.0).any()) throw InvalidArgument("SolveCanonicalLp: b must be nonnegative");
  constexpr double kEps = 1e-12;

  const Eigen::Index cols = n + m + 1;
  Mat t = Mat::Zero(m + 1, cols);
  t.topLeftCorner(m, n) = a;
  t.block(0, n, m, m).setIdentity();
  t.col(cols - 1).head(m) = b;
  t.row(m).head(n) = -c.transpose();
  std::vector<Eigen::Index> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

  LpResult result;
  for (int iter = 0; iter < 100000; ++iter) {
    Eigen::Index enter = -1;
    for (Eigen::Index j = 0; j < n + m; ++j) {
      if (t(m, j) < -kEps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    Eigen::Index leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      if (t(i, enter) > kEps) {
        const double ratio = t(i, cols - 1) / t(i, enter);
        if (ratio < best - kEps ||
            (ratio <= best + kEps && leave >= 0 &&
             basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) {
      result.bounded = false;
      return result;
    }
    t.row(leave) /= t(leave, enter);
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
    }
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  result.x = Vec::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index var = basis[static_cast<std::size_t>(i)];
    if (var < n) result.x[var] = t(i, cols - 1);
  }
  result.value = c.dot(result.x);
  return result;
}

}  // namespace nsslab::detail
