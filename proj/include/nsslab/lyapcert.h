#pragma once

// Infinitesimal generator of size functions and sampling-based
// falsification of the NSS / scNSS / iNSS dissipation inequality
//   L[V](ξ, Θ) <= -α(V(ξ)) + γ(‖ΘΘᵀ‖).

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nsslab/compfun.h"
#include "nsslab/sde.h"
#include "nsslab/types.h"

namespace nsslab::lyapcert {

enum class DerivativeMode { kAnalytic, kFiniteDifference };

class SizeFunction {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradientFn = std::function<Vec(const Vec&)>;
  using HessianFn = std::function<Mat(const Vec&)>;

  explicit SizeFunction(ValueFn value, std::string label = "V",
                        GradientFn gradient = {}, HessianFn hessian = {});

  double Value(const Vec& x) const;
  /// Analytic derivatives when available and requested, otherwise central
  /// differences of the values.
  Vec Gradient(const Vec& x, DerivativeMode mode = DerivativeMode::kAnalytic) const;
  Mat Hessian(const Vec& x, DerivativeMode mode = DerivativeMode::kAnalytic) const;

  /// Central differences with step 1e-5·(1+‖x‖).
  Vec FiniteDifferenceGradient(const Vec& x) const;
  /// Second-order central differences of the values with step 1e-4·(1+‖x‖).
  Mat FiniteDifferenceHessian(const Vec& x) const;

  bool has_analytic_gradient() const { return static_cast<bool>(gradient_); }
  bool has_analytic_hessian() const { return static_cast<bool>(hessian_); }
  const std::string& label() const { return label_; }

 private:
  double Probe(const Vec& x) const;

  ValueFn value_;
  std::string label_;
  GradientFn gradient_;
  HessianFn hessian_;
};

struct SizeFunctionAudit {
  /// Probes (other than the equilibrium) with V <= 0.
  std::size_t nonpositive = 0;
  double value_at_equilibrium = 0.0;
  /// Largest relative gap between analytic and finite-difference gradients.
  double max_gradient_mismatch = 0.0;
  /// V strictly increasing along the escape sequence.
  bool coercive_along_escape = true;
};

SizeFunctionAudit AuditSizeFunction(const SizeFunction& v, const Vec& equilibrium,
                                    const std::vector<Vec>& probes,
                                    const std::vector<Vec>& escape_sequence = {});

struct GeneratorTerms {
  double drift = 0.0;  // ⟨∇V, f⟩
  double noise = 0.0;  // ½ tr(Θᵀgᵀ∇²V gΘ)
  double total() const { return drift + noise; }
};

GeneratorTerms GeneratorTermsAt(const SizeFunction& v,
                                const sde::DiffusionModel& model, const Vec& xi,
                                const Mat& theta,
                                DerivativeMode mode = DerivativeMode::kAnalytic);

/// L[V](ξ, Θ) = ⟨∇V(ξ), f(ξ)⟩ + ½ tr(Θᵀ g(ξ)ᵀ ∇²V(ξ) g(ξ) Θ).
double GeneratorApply(const SizeFunction& v, const sde::DiffusionModel& model,
                      const Vec& xi, const Mat& theta,
                      DerivativeMode mode = DerivativeMode::kAnalytic);

/// |L_analytic - L_fd| / max(1, |drift| + |noise|), the scale-aware relative
/// gap between the two generator evaluations.
double GeneratorModeGap(const SizeFunction& v, const sde::DiffusionModel& model,
                        const Vec& xi, const Mat& theta);

enum class CertificateKind { kNss, kScNss, kInss };

std::string ToString(CertificateKind kind);

struct Violation {
  std::size_t state_index = 0;
  std::size_t theta_index = 0;
  Vec state;
  double theta_intensity = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
};

class DissipationCertificate {
 public:
  /// Checks the class requirements of the kind: NSS needs α ∈ K∞, γ ∈ K;
  /// scNSS needs α ∈ K, γ ∈ K on [0,d) with finite d; iNSS needs α ∈ PD,
  /// γ ∈ K. Throws InvalidArgument on mismatch.
  static DissipationCertificate Make(
      CertificateKind kind, compfun::ScalarClassFunction alpha,
      compfun::ScalarClassFunction gamma,
      double d = std::numeric_limits<double>::infinity());

  CertificateKind kind() const { return kind_; }
  const compfun::ScalarClassFunction& alpha() const { return alpha_; }
  const compfun::ScalarClassFunction& gamma() const { return gamma_; }
  double d() const { return d_; }

  std::vector<Violation> violations;
  std::size_t pairs_checked = 0;

 private:
  DissipationCertificate(CertificateKind kind, compfun::ScalarClassFunction alpha,
                         compfun::ScalarClassFunction gamma, double d);

  CertificateKind kind_;
  compfun::ScalarClassFunction alpha_;
  compfun::ScalarClassFunction gamma_;
  double d_;
};

inline constexpr double kDefaultDissipationTolerance = 1e-8;

/// Evaluates lhs = L[V](ξ,Θ) and rhs = -α(V(ξ)) + γ(‖ΘΘᵀ‖) on every pair and
/// records pairs with lhs - rhs > tol·(1 + |rhs|). Violations are listed in
/// (state, theta) index order regardless of `threads`.
DissipationCertificate CheckDissipation(
    const SizeFunction& v, const sde::DiffusionModel& model,
    DissipationCertificate cert, const std::vector<Vec>& states,
    const std::vector<Mat>& thetas, double tol = kDefaultDissipationTolerance,
    int threads = 1, DerivativeMode mode = DerivativeMode::kAnalytic);

/// `count` states drawn around the equilibrium at scales 0.1, 1 and 10 (in
/// near-equal thirds), rejecting draws outside the model domain, followed by
/// the caller's extreme states.
std::vector<Vec> DefaultStateSamples(const sde::DiffusionModel& model,
                                     std::uint64_t seed, std::size_t count = 1000,
                                     const std::vector<Vec>& extremes = {});

/// Ten isotropic covariance factors √s·I_m. With an infinite cap s ranges over
/// {0} and nine geometric values in [1e-3, 1e3]; with a finite cap d over
/// {0, 0.1d, ..., 0.9d}.
std::vector<Mat> DefaultThetaSamples(
    int noise_dim, double cap = std::numeric_limits<double>::infinity());

struct DThreshold {
  /// α⁻¹(c·γ(sup_intensity)), the level defining the set D.
  double level = 0.0;
  /// γ⁻¹((1/c)·sup_{[0,bracket]} α); +∞ when γ never reaches that value.
  double d1 = std::numeric_limits<double>::infinity();
};

DThreshold SetDThreshold(const compfun::ScalarClassFunction& alpha,
                         const compfun::ScalarClassFunction& gamma, double c,
                         double sup_intensity, double bracket);

struct Interval {
  std::size_t enter = 0;
  /// First index with V > threshold after entering; empty if the path stays
  /// inside until its end.
  std::optional<std::size_t> exit;
};

/// Alternating entry (V <= threshold) and exit (V > threshold) indices.
std::vector<Interval> EntryExitTimes(const std::vector<double>& values,
                                     double threshold);
std::vector<Interval> EntryExitTimes(const sde::TrajectoryPath& path,
                                     const SizeFunction& v, double threshold);

/// V evaluated at every recorded state of a path.
std::vector<double> PathValues(const sde::TrajectoryPath& path,
                               const SizeFunction& v);

struct SupermartingaleRow {
  double t = 0.0;
  /// Mean over paths of V stopped at its first entry into D.
  double stopped_mean = 0.0;
  /// Paths not yet stopped at this time.
  std::size_t outside = 0;
  /// Standard error of the mean increment from the previous time.
  double increment_se = 0.0;
  bool flagged = false;
  bool low_power = false;
};

struct SupermartingaleReport {
  std::vector<SupermartingaleRow> rows;
  std::size_t flags = 0;
  std::size_t low_power_rows = 0;
  /// Paths dropped because V became non-finite.
  std::size_t excluded_paths = 0;
};

/// Checks that the ensemble mean of V(χ(t ∧ q)), with q the first entry time
/// into D = {V <= threshold}, is nonincreasing: an increase larger than two
/// standard errors of the paired increment is flagged unless fewer than
/// `min_population` paths are still outside D, in which case the row is
/// annotated low-power. Paths must share one recording grid.
SupermartingaleReport SupermartingaleDiagnostic(
    const sde::TrajectoryEnsemble& ensemble, const SizeFunction& v,
    double threshold, std::size_t min_population = 100);

struct ItoConsistencyReport {
  double mean_change = 0.0;        // E[V(χ(T))] - E[V(χ(0))]
  double mean_integral = 0.0;      // E[∫ L[V](χ(s), Σ(s)) ds]
  double standard_error = 0.0;     // of the per-path difference
  double z_score = 0.0;
  bool consistent = false;         // |z| <= 3
};

/// Per-path Dynkin residual V(χ(T)) - V(χ(0)) - ∫ L[V] ds with the integral
/// by the trapezoid rule on the recorded grid.
ItoConsistencyReport ItoConsistency(const sde::TrajectoryEnsemble& ensemble,
                                    const SizeFunction& v,
                                    const sde::DiffusionModel& model,
                                    const sde::CovarianceSchedule& schedule);

/// Columns state_0..state_{n-1}, theta_norm, lhs, rhs.
void WriteViolationsCsv(const DissipationCertificate& cert, std::ostream& out);
std::string SummaryText(const DissipationCertificate& cert,
                        const std::string& label);

}  // namespace nsslab::lyapcert
