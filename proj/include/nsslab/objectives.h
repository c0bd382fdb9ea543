#pragma once

// Objective oracles (value, gradient, Hessian), Polyak–Łojasiewicz envelopes,
// the quadratic benchmark and binary logistic regression.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nsslab/compfun.h"
#include "nsslab/types.h"

namespace nsslab::objectives {

enum class PLKind { kClassicPL, kKInfinity, kK, kPositiveDefinite };

std::string ToString(PLKind kind);

/// ‖∇J(z)‖ >= μ(J(z) - J*).
struct PLEnvelope {
  compfun::ScalarClassFunction mu;
  PLKind kind;
  std::string construction;
};

class Objective {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradientFn = std::function<void(const Vec&, Vec& out)>;
  using HessianFn = std::function<Mat(const Vec&)>;
  using DomainFn = std::function<bool(const Vec&)>;

  Objective(int dim, ValueFn value, GradientFn gradient, Vec minimizer,
            double optimum_value, std::string label);

  Objective& set_hessian(HessianFn hessian);
  Objective& set_domain(DomainFn domain);
  Objective& set_global_lipschitz(double l);
  Objective& set_envelope(PLEnvelope envelope);

  int dim() const { return dim_; }
  double Value(const Vec& z) const { return value_(z); }
  void GradientInto(const Vec& z, Vec& out) const { gradient_(z, out); }
  Vec Gradient(const Vec& z) const;
  /// Analytic Hessian when set, otherwise central differences of the
  /// gradient with step 1e-5·(1+‖z‖).
  Mat Hessian(const Vec& z) const;
  double HessianNorm(const Vec& z) const;
  bool InDomain(const Vec& z) const { return domain_(z); }
  double Suboptimality(const Vec& z) const { return Value(z) - optimum_value_; }

  const Vec& minimizer() const { return minimizer_; }
  double optimum_value() const { return optimum_value_; }
  const std::optional<double>& global_lipschitz() const { return lipschitz_; }
  const std::optional<PLEnvelope>& envelope() const { return envelope_; }
  bool has_analytic_hessian() const { return static_cast<bool>(hessian_); }
  const std::string& label() const { return label_; }

 private:
  int dim_;
  ValueFn value_;
  GradientFn gradient_;
  HessianFn hessian_;
  DomainFn domain_;
  Vec minimizer_;
  double optimum_value_;
  std::optional<double> lipschitz_;
  std::optional<PLEnvelope> envelope_;
  std::string label_;
};

/// Largest relative gap ‖∇J - ∇_fd J‖ / max(1, ‖∇J‖) over the probes, with
/// central differences of the value at step 1e-5·(1+‖z‖).
double MaxGradientMismatch(const Objective& obj, const std::vector<Vec>& probes);

/// J(z) = ½(z - z*)ᵀA(z - z*) + J0 with z* = A⁻¹b. Carries the classic PL
/// envelope μ(h) = √(2λmin(A)h) and L = λmax(A).
Objective QuadraticObjective(const Mat& a, const Vec& b, double j0 = 0.0);

class LogisticModel {
 public:
  /// Columns of x are feature vectors; labels must be 0 or 1.
  LogisticModel(Mat x, Vec y);

  const Mat& x() const { return x_; }
  const Vec& y() const { return y_; }
  int dim() const { return static_cast<int>(x_.rows()); }
  int samples() const { return static_cast<int>(x_.cols()); }

 private:
  Mat x_;
  Vec y_;
};

/// Mean cross-entropy via the softplus of label-signed logits.
double LogisticLoss(const LogisticModel& model, const Vec& theta);
/// (1/N) Σ (p_i - y_i) x_i.
Vec LogisticGradient(const LogisticModel& model, const Vec& theta);
void LogisticGradientInto(const LogisticModel& model, const Vec& theta, Vec& out);
/// (1/N) X Λ(θ) Xᵀ with Λ = diag(p_i(1 - p_i)).
Mat LogisticHessian(const LogisticModel& model, const Vec& theta);
/// ‖XXᵀ‖ / (4N).
double LogisticLipschitzConstant(const LogisticModel& model);

struct SeparabilityReport {
  bool separable = false;
  /// Separable only with some zero margins.
  bool weakly = false;
  /// Nonzero direction with s_i θᵀx_i >= 0 for all i when separable.
  Vec witness;
  /// Optimal minimum signed margin over the box ‖θ‖∞ <= 1.
  double margin = 0.0;
};

/// Decides whether a nonzero θ has θᵀx_i >= 0 for y_i = 1 and θᵀx_i <= 0 for
/// y_i = 0. Strict separation is found by maximising the minimum signed
/// margin over the ∞-norm unit box; a zero optimum is then probed for weak
/// separation by maximising ±θ_j over the feasible cone.
SeparabilityReport CheckNonseparable(const LogisticModel& model);

/// ζ(r) = ⟨∇J(θ0 + r·dir), dir⟩ for a unit direction.
double RaySlope(const LogisticModel& model, const Vec& theta0, double r,
                const Vec& dir);
/// lim_{r→∞} ζ(r) = (1/N) Σ (1{y=1}[-dirᵀx]₊ + 1{y=0}[dirᵀx]₊).
double RaySlopeLimit(const LogisticModel& model, const Vec& dir);

/// Unique minimiser of a nonseparable logistic loss by gradient flow with
/// step 1/L, polished by Newton steps, to ‖∇J‖ <= tol.
Vec LogisticMinimizer(const LogisticModel& model, double tol = 1e-10);

/// Objective over θ with J*, θ*, L and analytic Hessian. Throws
/// InvalidArgument for separable data (no minimiser exists).
Objective MakeLogisticObjective(const LogisticModel& model);

/// Geometric grid of `points` values on [lo, hi].
std::vector<double> GeometricGrid(double lo, double hi, int points);

struct EnvelopeOptions {
  int n_dirs = 256;
  /// Ray lengths; default geometric on [1e-4, 1e2] with 200 points.
  std::vector<double> r_grid;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Pattern-search rounds around the minimizing directions.
  int refine_rounds = 4;
};

/// Direction-sampled K-PL envelope μ(h) = min_d ζ_d(ψ_d⁻¹(h)) with
/// ζ_d(r) = ⟨∇J(θ* + r d), d⟩ and ψ_d its trapezoid integral. The minimum
/// over finitely many directions over-estimates the sphere minimum, so the
/// result must be checked with VerifyPl.
PLEnvelope EstimateKplEnvelope(const Objective& obj, const Vec& theta_star,
                               const EnvelopeOptions& options = {});

struct PlViolation {
  std::size_t index = 0;
  double gradient_norm = 0.0;
  double bound = 0.0;
};

struct PlReport {
  std::vector<PlViolation> violations;
  std::size_t checked = 0;
  /// min over points of ‖∇J‖ - μ(J - J*).
  double min_slack = 0.0;
};

/// Points where ‖∇J(z)‖ < μ(J(z) - J*) - tol.
PlReport VerifyPl(const Objective& obj, const PLEnvelope& envelope,
                  const std::vector<Vec>& points, double tol = 1e-9);

struct GradientBoundReport {
  /// max ‖∇J₃(θ)‖ / (‖X‖/√N); 0 when X = 0.
  double max_ratio = 0.0;
  bool holds = true;
};

/// Checks ‖∇J₃(θ)‖ <= ‖X‖/√N on every point.
GradientBoundReport GradientBoundCheck(const LogisticModel& model,
                                       const std::vector<Vec>& points);

/// Reads a CSV with a header row, n feature columns and a final 0/1 label.
LogisticModel ReadLogisticCsv(const std::string& path);
LogisticModel ReadLogisticCsv(std::istream& in, const std::string& source);

/// Two-column CSV (h, mu).
void WriteEnvelopeCsv(const PLEnvelope& envelope, const std::vector<double>& h_grid,
                      std::ostream& out);

}  // namespace nsslab::objectives
