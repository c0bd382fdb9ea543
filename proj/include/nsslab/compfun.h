#pragma once

// Comparison functions (classes PD, K, K∞, K on [0,d), KL) represented as
// opaque evaluation maps with a declared class. Class membership is never
// proved; it is only falsified on sample grids.

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace nsslab::compfun {

enum class FunctionClass {
  kPositiveDefinite,  // PD
  kK,
  kKInfinity,
  kKOnBounded,  // K on [0, d)
};

std::string ToString(FunctionClass c);

/// True if a function declared `have` is guaranteed to also belong to `need`.
/// For kKOnBounded targets the caller compares domain caps separately.
bool ClassImplies(FunctionClass have, FunctionClass need);

/// The weaker of two classes, used for compositions.
FunctionClass WeakerClass(FunctionClass a, FunctionClass b);

class ScalarClassFunction {
 public:
  using Map = std::function<double(double)>;

  ScalarClassFunction(Map eval, FunctionClass declared_class,
                      std::string description,
                      double domain_cap = std::numeric_limits<double>::infinity());

  /// Evaluates the map. Throws DomainViolation for negative arguments or
  /// arguments at or beyond the domain cap.
  double operator()(double r) const;

  FunctionClass declared_class() const { return declared_class_; }
  double domain_cap() const { return domain_cap_; }
  const std::string& description() const { return description_; }

  static ScalarClassFunction Identity();
  /// r ↦ k·r, class K∞ for k > 0.
  static ScalarClassFunction Linear(double slope, std::string description = "");
  /// r ↦ k·r^p, class K∞ for k, p > 0.
  static ScalarClassFunction Power(double coefficient, double exponent,
                                   std::string description = "");

 private:
  Map eval_;
  FunctionClass declared_class_;
  std::string description_;
  double domain_cap_;
};

struct ClassEvidenceReport {
  /// Consecutive grid pairs (r_i, r_{i+1}) with f(r_{i+1}) <= f(r_i).
  std::vector<std::pair<double, double>> monotonicity_violations;
  /// Grid points r > 0 with f(r) <= 0 (or negative values anywhere).
  std::vector<double> sign_violations;
  /// |f(0)| > 1e-12.
  bool nonzero_at_origin = false;
  /// Declared K∞ but f(grid max) did not exceed the unboundedness threshold.
  bool unboundedness_flag = false;
  bool consistent = true;
};

/// Looks for evidence against the declared class of `f` on `grid`.
/// `unbounded_threshold` is the value f(grid max) must exceed for a declared
/// K∞ function; failing it is reported as evidence, not a verdict.
ClassEvidenceReport ClassifyEvidence(const ScalarClassFunction& f,
                                     std::span<const double> grid,
                                     double unbounded_threshold = 1.0);

/// Bisection inverse on [0, bracket_hi] with |f(r) - y| <= 1e-10·max(1, y).
double Invert(const ScalarClassFunction& f, double y, double bracket_hi);

/// Inverse with an automatically grown bracket (doubling from 1). Throws
/// BracketError when y exceeds every value reachable below the domain cap.
double InvertAuto(const ScalarClassFunction& f, double y);

/// Weak triangle split: lhs = α(a+b), rhs = α((Id+ρ)(a)) + α((Id+ρ⁻¹)(b)).
std::pair<double, double> WeakTriangleSplit(const ScalarClassFunction& alpha,
                                            const ScalarClassFunction& rho,
                                            double a, double b);

/// f∘g. The result's class is the weaker of the two; its domain cap is g's.
/// Evaluation throws DomainViolation when g(r) leaves f's domain.
ScalarClassFunction Compose(const ScalarClassFunction& f,
                            const ScalarClassFunction& g);

/// Piecewise-linear interpolant through (xs[i], ys[i]). Outside the table it
/// is extended by the end values (constant), which keeps lower envelopes valid.
ScalarClassFunction PiecewiseLinear(std::vector<double> xs,
                                    std::vector<double> ys,
                                    FunctionClass declared_class,
                                    std::string description);

class KLFunction {
 public:
  using Map = std::function<double(double, double)>;
  KLFunction(Map eval, std::string description);
  double operator()(double r, double t) const { return eval_(r, t); }
  const std::string& description() const { return description_; }

 private:
  Map eval_;
  std::string description_;
};

struct KLEvidenceReport {
  /// (t, r_i, r_{i+1}) where β(·, t) fails strict increase.
  std::vector<std::tuple<double, double, double>> k_violations;
  /// (r, t_i, t_{i+1}) where β(r, ·) increases.
  std::vector<std::tuple<double, double, double>> decay_violations;
  /// r values where β(r, decay_horizon) exceeds decay_tolerance.
  std::vector<double> residual_at_horizon;
  bool consistent = true;
};

KLEvidenceReport ClassifyKLEvidence(const KLFunction& beta,
                                    std::span<const double> r_grid,
                                    std::span<const double> t_grid,
                                    double decay_horizon = 1e3,
                                    double decay_tolerance = 1e-6);

}  // namespace nsslab::compfun
