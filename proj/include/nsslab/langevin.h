#pragma once

// Overdamped and underdamped Langevin diffusions built from an Objective,
// their Lyapunov candidates and dissipation certificates, and the sublevel
// smoothness ladder L̄₂ → φ₁ → φ₂ used to schedule learning rate and damping.

#include <cmath>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "nsslab/compfun.h"
#include "nsslab/lyapcert.h"
#include "nsslab/objectives.h"
#include "nsslab/sde.h"
#include "nsslab/types.h"

namespace nsslab::langevin {

/// State-modulation G of the noise with a global bound ‖G‖_F <= K_G.
class NoiseFactor {
 public:
  using Fn = std::function<void(const Vec& x, Mat& out)>;

  NoiseFactor(int rows, int cols, Fn fn, double k_g, std::string label,
              bool state_independent = false);

  /// G = I_n, K_G = √n.
  static NoiseFactor Identity(int n);
  static NoiseFactor Constant(const Mat& g);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double k_g() const { return k_g_; }
  bool state_independent() const { return state_independent_; }
  const std::string& label() const { return label_; }
  void Into(const Vec& x, Mat& out) const { fn_(x, out); }
  Mat At(const Vec& x) const;
  /// max over probes of ‖G(x)‖_F - K_G; nonpositive when the bound holds.
  double BoundExcess(const std::vector<Vec>& probes) const;

 private:
  int rows_;
  int cols_;
  Fn fn_;
  double k_g_;
  std::string label_;
  bool state_independent_;
};

/// Learning rate as a function of suboptimality h.
struct RateSchedule {
  std::function<double(double)> eta;
  std::string label;
  bool constant = false;

  static RateSchedule Constant(double eta);
  double operator()(double h) const { return eta(h); }
};

struct OverdampedConfig {
  objectives::Objective objective;
  NoiseFactor g;
  RateSchedule eta = RateSchedule::Constant(1.0);
};

/// dz = -η(J(z) - J*)∇J(z)dt + G(z)Σ(t)dB, equilibrium at the minimiser.
sde::DiffusionModel BuildOverdamped(const OverdampedConfig& config);

struct LadderOptions {
  int samples_per_level = 1000;
  /// Rays used to size the proposal ball of each sublevel set.
  int ray_dirs = 64;
  std::uint64_t seed = 0;
  int threads = 1;
};

/// Nondecreasing tables of L̄₂(h) = max_{Z_h}‖∇²J‖ and
/// L̄(h) = ½ max_{Z_h}‖∇²J‖·‖G‖_F², linearly interpolated in h.
class SmoothnessLadder {
 public:
  /// Rejection sampling of `samples_per_level` points per sublevel set
  /// Z_h = {J - J* <= h}, followed by a running maximum over levels.
  static SmoothnessLadder Sample(const objectives::Objective& obj, const NoiseFactor& g,
                                 std::vector<double> h_grid, const LadderOptions& options = {});
  /// Closed-form L̄₂ with L̄ = ½·L̄₂·K_G².
  static SmoothnessLadder Analytic(const std::function<double(double)>& lbar2, double k_g,
                                   std::vector<double> h_grid, std::string source);

  const std::vector<double>& h_grid() const { return h_; }
  const std::vector<double>& lbar2_table() const { return lbar2_; }
  const std::vector<double>& lbar_table() const { return lbar_; }
  double h_max() const { return h_.back(); }
  const std::string& source() const { return source_; }

  /// Throw DomainViolation outside [0, h_max].
  double Lbar2(double h) const;
  double Lbar(double h) const;
  double Ltilde(double h) const { return Lbar(h) - lbar_.front(); }

  /// m1(h_j) = min_{k >= j} η(h_k)μ(h_k)²/L̃(h_k) on the grid (+∞ where L̃ = 0).
  std::vector<double> M1(const RateSchedule& eta, const compfun::ScalarClassFunction& mu) const;
  /// h,Lbar,Ltilde,Lbar2,m1
  void WriteCsv(std::ostream& out, const RateSchedule& eta,
                const compfun::ScalarClassFunction& mu) const;

 private:
  SmoothnessLadder(std::vector<double> h, std::vector<double> lbar2, std::vector<double> lbar,
                   std::string source);
  double Interpolate(const std::vector<double>& table, double h) const;

  std::vector<double> h_;
  std::vector<double> lbar2_;
  std::vector<double> lbar_;
  std::string source_;
};

/// {0} followed by `points` geometric levels on [1e-4·h_max, h_max].
std::vector<double> LadderGrid(double h_max, int points = 60);

/// φ₁(h) = 2L̄₂(h)h + 5h/2, φ₂(h) = (1/δ)∫_h^{h+δ}φ₁ and
/// φ₂'(h) = (φ₁(h+δ) - φ₁(h))/δ, usable on [0, h_max - δ].
class PhiFunctions {
 public:
  /// δ <= 0 selects 1e-2·(1 + h_max). Requires δ < h_max.
  explicit PhiFunctions(std::shared_ptr<const SmoothnessLadder> ladder, double delta = 0.0);

  double delta() const { return delta_; }
  /// Largest h at which φ₂ and φ₂' are defined.
  double h_max() const { return ladder_->h_max() - delta_; }
  const SmoothnessLadder& ladder() const { return *ladder_; }

  double Phi1(double h) const;
  double Phi2(double h) const;
  double Phi2Prime(double h) const;
  /// Generalised inverse: 0 for y <= φ₂(0), h_max() for y >= φ₂(h_max()).
  double Phi2Inverse(double y) const;

 private:
  double Phi1Integral(double h) const;

  std::shared_ptr<const SmoothnessLadder> ladder_;
  double delta_;
  std::vector<double> cumulative_;
};

enum class UnderdampedMode { kConstant, kScheduled };

/// State (z, v) of length 2n; noise enters the v block only.
struct UnderdampedConfig {
  objectives::Objective objective;
  NoiseFactor g;
  UnderdampedMode mode = UnderdampedMode::kConstant;
  double eta = 1.0;
  double c = 1.0;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::shared_ptr<const PhiFunctions> phi;

  /// Constant η and c with λ₁ = fraction·min{1/(2η+c), 1/(2L), c/(2(ηL+c²))}
  /// and λ₂ = (1 - λ₁c)/η. ConfigurationError without a global L.
  static UnderdampedConfig Constant(objectives::Objective objective, NoiseFactor g, double eta,
                                    double c, double fraction = 0.9);
  /// c(z) = ½‖∇²J(z)‖ + ½ and η(z) = ½(φ₂'(J(z) - J*) - c(z)).
  static UnderdampedConfig Scheduled(objectives::Objective objective, NoiseFactor g,
                                     std::shared_ptr<const PhiFunctions> phi);

  int n() const { return objective.dim(); }
  double Damping(const Vec& z) const;
  double Rate(const Vec& z) const;
};

/// Scheduled mode leaves the domain where J(z) - J* exceeds φ's usable range.
sde::DiffusionModel BuildUnderdamped(const UnderdampedConfig& config);

/// J(z) - J* with the objective's gradient and Hessian.
lyapcert::SizeFunction SuboptimalitySize(const objectives::Objective& obj);
/// V₂ = J - J* + λ₁⟨v,∇J⟩ + (λ₂/2)⟨v,v⟩ (constant mode).
lyapcert::SizeFunction MomentumSize(const UnderdampedConfig& config);
/// V₃ = φ₂(J - J*) + ⟨∇J,v⟩ + ⟨v,v⟩ (scheduled mode); V₃(z*,0) = φ₂(0).
lyapcert::SizeFunction ScheduledMomentumSize(const UnderdampedConfig& config);

struct Sandwich {
  double lower = 0.0;
  double value = 0.0;
  double upper = 0.0;
  bool holds(double tol = 1e-10) const {
    return lower <= value + tol * (1 + std::abs(value)) &&
           value <= upper + tol * (1 + std::abs(value));
  }
};

/// ½h + (λ₂/4)|v|² <= V₂ <= (1+λ₁L)h + ((λ₁+λ₂)/2)|v|².
Sandwich MomentumSandwich(const UnderdampedConfig& config, const Vec& z, const Vec& v);
/// ½φ₂(h) + ½|v|² <= V₃ <= (3/2)φ₂(h) + (3/2)|v|².
Sandwich ScheduledMomentumSandwich(const UnderdampedConfig& config, const Vec& z, const Vec& v);

struct GeneratorBound {
  double lhs = 0.0;
  double rhs = 0.0;
};

/// lhs = 𝓛[J](z, Σ) under the configured overdamped dynamics. With a
/// constant rate and a global L the bound is -ημ(h)² + ½LK_G²‖ΣΣᵀ‖; with a
/// ladder it is -η(h)μ(h)² + L̄(h)‖ΣΣᵀ‖. ConfigurationError when the
/// objective has no envelope or neither L nor a ladder is available.
GeneratorBound OverdampedGeneratorBound(const OverdampedConfig& config, const Vec& z,
                                        const Mat& sigma,
                                        const SmoothnessLadder* ladder = nullptr);

struct CertificateTriple {
  lyapcert::SizeFunction v;
  lyapcert::DissipationCertificate cert;
  std::string statement;
};

/// V = J - J*, α(r) = μ(r)², γ(s) = ½LK_G²s for the plain gradient diffusion.
CertificateTriple GradientFlowTriple(const OverdampedConfig& config);
/// V₂ with α(r) = λ₁ημ₁(r/(2λ₃)), μ₁(h) = min{μ(h)², ch/(2λ₁η²)},
/// λ₃ = max{1+λ₁L, (λ₁+λ₂)/2} and γ(s) = (λ₂/2)K_G²s.
CertificateTriple MomentumTriple(const UnderdampedConfig& config);
/// V₃ with α(r) = μ₃(r/3), μ₃(h) = min{μ(φ₂⁻¹(h))², h} and γ(s) = K_G²s.
/// α vanishes on [0, 3φ₂(0)] because the smoothing offsets V₃ by φ₂(0).
CertificateTriple ScheduledMomentumTriple(const UnderdampedConfig& config);

}  // namespace nsslab::langevin
