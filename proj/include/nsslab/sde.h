#pragma once

// Itô diffusions dχ = f(χ)dt + g(χ)Σ(t)dB and their Euler–Maruyama
// integration with counter-based noise.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nsslab/types.h"

namespace nsslab::sde {

class DiffusionModel {
 public:
  /// f(x) written into `out` (already sized n).
  using DriftFn = std::function<void(const Vec& x, Vec& out)>;
  /// g(x) written into `out` (already sized n×m).
  using DiffusionFn = std::function<void(const Vec& x, Mat& out)>;
  using DomainFn = std::function<bool(const Vec& x)>;

  /// Validates shapes and that the drift vanishes at the equilibrium.
  /// `state_independent_diffusion` lets simulators evaluate g once.
  DiffusionModel(int state_dim, int noise_dim, DriftFn drift,
                 DiffusionFn diffusion, DomainFn domain_test, Vec equilibrium,
                 std::string label, bool state_independent_diffusion = false);

  int state_dim() const { return n_; }
  int noise_dim() const { return m_; }
  const Vec& equilibrium() const { return equilibrium_; }
  const std::string& label() const { return label_; }
  bool state_independent_diffusion() const { return state_independent_; }

  void DriftInto(const Vec& x, Vec& out) const { drift_(x, out); }
  void DiffusionInto(const Vec& x, Mat& out) const { diffusion_(x, out); }
  Vec Drift(const Vec& x) const;
  Mat Diffusion(const Vec& x) const;
  bool InDomain(const Vec& x) const;

 private:
  int n_;
  int m_;
  DriftFn drift_;
  DiffusionFn diffusion_;
  DomainFn domain_;
  Vec equilibrium_;
  std::string label_;
  bool state_independent_;
};

/// Whole-space domain.
bool Everywhere(const Vec&);

class CovarianceSchedule {
 public:
  using SigmaFn = std::function<Mat(double t)>;

  CovarianceSchedule(int noise_dim, SigmaFn sigma, std::string label,
                     bool time_invariant = false);

  /// Σ ≡ σ·I_m.
  static CovarianceSchedule Constant(int noise_dim, double sigma);
  static CovarianceSchedule ConstantMatrix(const Mat& sigma);
  static CovarianceSchedule Zero(int noise_dim);
  /// Σ(t) = σ·I_m on [t_on, t_off), 0 elsewhere.
  static CovarianceSchedule Pulse(int noise_dim, double sigma, double t_on,
                                  double t_off);

  Mat Sigma(double t) const { return sigma_(t); }
  Mat Covariance(double t) const;
  /// ‖Σ(t)Σ(t)ᵀ‖ at one instant.
  double Intensity(double t) const;
  int noise_dim() const { return m_; }
  bool time_invariant() const { return time_invariant_; }
  const std::string& label() const { return label_; }

  /// Smallest eigenvalue of Σ(t)Σ(t)ᵀ over the probe times.
  double MinCovarianceEigenvalue(const std::vector<double>& probe_times) const;

 private:
  int m_;
  SigmaFn sigma_;
  std::string label_;
  bool time_invariant_;
};

/// Maximum of ‖Σ(t)Σ(t)ᵀ‖ over a uniform grid on [t_lo, t_hi]. This is a
/// lower bound on the essential supremum; it is exact for piecewise
/// continuous schedules whose peak lies on the grid.
double SupNoiseIntensity(const CovarianceSchedule& schedule, double t_lo,
                         double t_hi, int grid_points);

enum class PathStatus { kCompleted, kDomainExit, kBlowUp };

std::string ToString(PathStatus s);

struct TrajectoryPath {
  std::vector<double> times;
  /// Column j is the state at times[j].
  Mat states;
  std::uint64_t seed = 0;
  PathStatus status = PathStatus::kCompleted;
  /// Column of the first recorded state outside the domain (or blown up).
  std::optional<std::size_t> exit_index;

  bool exited_domain() const { return status != PathStatus::kCompleted; }
  std::size_t size() const { return times.size(); }
};

struct SimulationOptions {
  /// Record every k-th grid point; the first and last points and an exit
  /// point are always recorded.
  std::size_t record_stride = 1;
  /// Components beyond this magnitude (or non-finite) mark a blow-up.
  double blowup_threshold = 1e12;
};

/// Number of Euler steps covering [0, T] with step dt; the last step is
/// shortened when T is not a multiple of dt.
std::size_t StepCount(double dt, double horizon);

TrajectoryPath SimulatePath(const DiffusionModel& model,
                            const CovarianceSchedule& schedule, const Vec& x0,
                            double dt, double horizon, std::uint64_t seed,
                            const SimulationOptions& options = {});

struct TrajectoryEnsemble {
  std::vector<TrajectoryPath> paths;
  std::uint64_t master_seed = 0;
  double dt = 0.0;
  double horizon = 0.0;
  std::string model_label;
};

/// N paths; path k uses seed DeterministicHash(master_seed, k) and initial
/// state x0s[k % x0s.size()]. Output is independent of `threads`.
TrajectoryEnsemble SimulateEnsemble(const DiffusionModel& model,
                                    const CovarianceSchedule& schedule,
                                    const std::vector<Vec>& x0s, double dt,
                                    double horizon, std::size_t n_paths,
                                    std::uint64_t master_seed, int threads = 1,
                                    const SimulationOptions& options = {});

TrajectoryEnsemble SimulateEnsemble(const DiffusionModel& model,
                                    const CovarianceSchedule& schedule,
                                    const Vec& x0, double dt, double horizon,
                                    std::size_t n_paths,
                                    std::uint64_t master_seed, int threads = 1,
                                    const SimulationOptions& options = {});

/// CSV with header path_id,t,state_0,...; doubles printed with 17 significant
/// digits.
void WriteEnsembleCsv(const TrajectoryEnsemble& ensemble, std::ostream& out);
void WriteEnsembleCsv(const TrajectoryEnsemble& ensemble,
                      const std::string& path);

/// Formats a double so that it round-trips exactly.
std::string FormatDouble(double v);

}  // namespace nsslab::sde
