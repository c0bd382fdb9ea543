#include "nsslab/compfun.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nsslab/errors.h"

namespace nsslab::compfun {
namespace {

constexpr double kOriginTolerance = 1e-12;

int Strength(FunctionClass c) {
  switch (c) {
    case FunctionClass::kPositiveDefinite:
      return 0;
    case FunctionClass::kKOnBounded:
      return 1;
    case FunctionClass::kK:
      return 2;
    case FunctionClass::kKInfinity:
      return 3;
  }
  return 0;
}

bool IsKType(FunctionClass c) { return c != FunctionClass::kPositiveDefinite; }

double InversionTolerance(double y) { return 1e-10 * std::max(1.0, y); }

}  // namespace

std::string ToString(FunctionClass c) {
  switch (c) {
    case FunctionClass::kPositiveDefinite:
      return "PD";
    case FunctionClass::kK:
      return "K";
    case FunctionClass::kKInfinity:
      return "Kinf";
    case FunctionClass::kKOnBounded:
      return "K_on_0_d";
  }
  return "?";
}

bool ClassImplies(FunctionClass have, FunctionClass need) {
  switch (need) {
    case FunctionClass::kPositiveDefinite:
      return true;
    case FunctionClass::kKOnBounded:
      return IsKType(have);
    case FunctionClass::kK:
      return have == FunctionClass::kK || have == FunctionClass::kKInfinity;
    case FunctionClass::kKInfinity:
      return have == FunctionClass::kKInfinity;
  }
  return false;
}

FunctionClass WeakerClass(FunctionClass a, FunctionClass b) {
  return Strength(a) <= Strength(b) ? a : b;
}

ScalarClassFunction::ScalarClassFunction(Map eval, FunctionClass declared_class,
                                         std::string description,
                                         double domain_cap)
    : eval_(std::move(eval)),
      declared_class_(declared_class),
      description_(std::move(description)),
      domain_cap_(domain_cap) {
  if (!eval_) throw InvalidArgument("ScalarClassFunction: empty evaluation map");
  if (!(domain_cap_ > 0.0))
    throw InvalidArgument("ScalarClassFunction: domain cap must be positive");
  if (declared_class_ == FunctionClass::kKOnBounded && std::isinf(domain_cap_))
    throw InvalidArgument(
        "ScalarClassFunction: K_on_0_d requires a finite domain cap");
}

double ScalarClassFunction::operator()(double r) const {
  if (r < 0.0 || r >= domain_cap_ || std::isnan(r)) {
    std::ostringstream msg;
    msg << "argument " << r << " outside the domain [0, " << domain_cap_
        << ") of " << description_;
    throw DomainViolation(msg.str());
  }
  return eval_(r);
}

ScalarClassFunction ScalarClassFunction::Identity() {
  return ScalarClassFunction([](double r) { return r; },
                             FunctionClass::kKInfinity, "Id");
}

ScalarClassFunction ScalarClassFunction::Linear(double slope,
                                                std::string description) {
  if (!(slope > 0.0)) throw InvalidArgument("Linear: slope must be positive");
  if (description.empty()) {
    std::ostringstream os;
    os << slope << "*r";
    description = os.str();
  }
  return ScalarClassFunction([slope](double r) { return slope * r; },
                             FunctionClass::kKInfinity, std::move(description));
}

ScalarClassFunction ScalarClassFunction::Power(double coefficient,
                                               double exponent,
                                               std::string description) {
  if (!(coefficient > 0.0) || !(exponent > 0.0))
    throw InvalidArgument("Power: coefficient and exponent must be positive");
  if (description.empty()) {
    std::ostringstream os;
    os << coefficient << "*r^" << exponent;
    description = os.str();
  }
  return ScalarClassFunction(
      [coefficient, exponent](double r) {
        return coefficient * std::pow(r, exponent);
      },
      FunctionClass::kKInfinity, std::move(description));
}

ClassEvidenceReport ClassifyEvidence(const ScalarClassFunction& f,
                                     std::span<const double> grid,
                                     double unbounded_threshold) {
  if (grid.empty()) throw InvalidArgument("ClassifyEvidence: empty grid");
  if (grid.front() != 0.0)
    throw InvalidArgument("ClassifyEvidence: grid must start at 0");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1]))
      throw InvalidArgument("ClassifyEvidence: grid must be strictly ascending");
  }
  if (grid.back() >= f.domain_cap())
    throw DomainViolation("ClassifyEvidence: grid point beyond domain cap of " +
                          f.description());

  ClassEvidenceReport report;
  std::vector<double> values(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) values[i] = f(grid[i]);

  report.nonzero_at_origin = std::abs(values[0]) > kOriginTolerance;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(values[i] > 0.0)) report.sign_violations.push_back(grid[i]);
  }
  if (IsKType(f.declared_class())) {
    for (std::size_t i = 1; i < grid.size(); ++i) {
      if (!(values[i] > values[i - 1]))
        report.monotonicity_violations.emplace_back(grid[i - 1], grid[i]);
    }
  }
  if (f.declared_class() == FunctionClass::kKInfinity) {
    report.unboundedness_flag = !(values.back() > unbounded_threshold);
  }
  report.consistent = !report.nonzero_at_origin &&
                      report.sign_violations.empty() &&
                      report.monotonicity_violations.empty() &&
                      !report.unboundedness_flag;
  return report;
}

double Invert(const ScalarClassFunction& f, double y, double bracket_hi) {
  if (!(bracket_hi > 0.0)) throw InvalidArgument("Invert: bracket must be positive");
  const double f_lo = f(0.0);
  const double f_hi = f(bracket_hi);
  const double tol = InversionTolerance(y);
  if (y < f_lo - tol || y > f_hi + tol) {
    std::ostringstream msg;
    msg << "Invert: target " << y << " outside [" << f_lo << ", " << f_hi
        << "] for " << f.description();
    throw BracketError(msg.str());
  }
  if (y <= f_lo) return 0.0;
  if (y >= f_hi) return bracket_hi;
  // Bisect to the resolution of double so the argument, not just the value,
  // is recovered accurately for flat functions.
  double lo = 0.0;
  double hi = bracket_hi;
  for (int it = 0; it < 2200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double fm = f(mid);
    if (fm == y) return mid;
    if (fm < y) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return std::abs(f(lo) - y) <= std::abs(f(hi) - y) ? lo : hi;
}

double InvertAuto(const ScalarClassFunction& f, double y) {
  double hi = 1.0;
  const double cap = f.domain_cap();
  for (int it = 0; it < 1100; ++it) {
    const double probe = std::isinf(cap) ? hi : std::min(hi, std::nextafter(cap, 0.0));
    if (f(probe) >= y - InversionTolerance(y)) return Invert(f, y, probe);
    if (!std::isinf(cap) && hi >= cap) break;
    hi *= 2.0;
    if (std::isinf(hi)) break;
  }
  throw BracketError("InvertAuto: target beyond the range of " + f.description());
}

std::pair<double, double> WeakTriangleSplit(const ScalarClassFunction& alpha,
                                            const ScalarClassFunction& rho,
                                            double a, double b) {
  if (a < 0.0 || b < 0.0)
    throw InvalidArgument("WeakTriangleSplit: arguments must be nonnegative");
  const double lhs = alpha(a + b);
  const double rho_inv_b = b == 0.0 ? 0.0 : InvertAuto(rho, b);
  const double rhs = alpha(a + rho(a)) + alpha(b + rho_inv_b);
  return {lhs, rhs};
}

ScalarClassFunction Compose(const ScalarClassFunction& f,
                            const ScalarClassFunction& g) {
  const FunctionClass cls = WeakerClass(f.declared_class(), g.declared_class());
  double cap = g.domain_cap();
  if (cls == FunctionClass::kKOnBounded && std::isinf(cap)) cap = f.domain_cap();
  return ScalarClassFunction([f, g](double r) { return f(g(r)); }, cls,
                             "(" + f.description() + ")o(" + g.description() + ")",
                             cap);
}

ScalarClassFunction PiecewiseLinear(std::vector<double> xs,
                                    std::vector<double> ys,
                                    FunctionClass declared_class,
                                    std::string description) {
  if (xs.size() != ys.size() || xs.empty())
    throw InvalidArgument("PiecewiseLinear: table sizes differ or empty");
  for (std::size_t i = 1; i < xs.size(); ++i) {
    if (!(xs[i] > xs[i - 1]))
      throw InvalidArgument("PiecewiseLinear: abscissae must be ascending");
  }
  auto eval = [xs = std::move(xs), ys = std::move(ys)](double r) {
    if (r <= xs.front()) return ys.front();
    if (r >= xs.back()) return ys.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), r);
    const std::size_t j = static_cast<std::size_t>(it - xs.begin());
    const double w = (r - xs[j - 1]) / (xs[j] - xs[j - 1]);
    return (1.0 - w) * ys[j - 1] + w * ys[j];
  };
  return ScalarClassFunction(std::move(eval), declared_class,
                             std::move(description));
}

KLFunction::KLFunction(Map eval, std::string description)
    : eval_(std::move(eval)), description_(std::move(description)) {
  if (!eval_) throw InvalidArgument("KLFunction: empty evaluation map");
}

KLEvidenceReport ClassifyKLEvidence(const KLFunction& beta,
                                    std::span<const double> r_grid,
                                    std::span<const double> t_grid,
                                    double decay_horizon,
                                    double decay_tolerance) {
  if (r_grid.empty() || t_grid.empty())
    throw InvalidArgument("ClassifyKLEvidence: empty grid");
  KLEvidenceReport report;
  for (double t : t_grid) {
    for (std::size_t i = 1; i < r_grid.size(); ++i) {
      if (!(beta(r_grid[i], t) > beta(r_grid[i - 1], t)))
        report.k_violations.emplace_back(t, r_grid[i - 1], r_grid[i]);
    }
  }
  for (double r : r_grid) {
    for (std::size_t j = 1; j < t_grid.size(); ++j) {
      if (beta(r, t_grid[j]) > beta(r, t_grid[j - 1]))
        report.decay_violations.emplace_back(r, t_grid[j - 1], t_grid[j]);
    }
    if (beta(r, decay_horizon) > decay_tolerance)
      report.residual_at_horizon.push_back(r);
  }
  report.consistent = report.k_violations.empty() &&
                      report.decay_violations.empty() &&
                      report.residual_at_horizon.empty();
  return report;
}

}  // namespace nsslab::compfun
