#pragma once

// Monte Carlo estimates of noise-to-state behaviour: per-intensity gain
// curves, exceedance of β + γ bounds, blow-up onset scans and the
// integral (iNSS) accumulation check.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "nsslab/compfun.h"
#include "nsslab/lyapcert.h"
#include "nsslab/sde.h"
#include "nsslab/types.h"

namespace nsslab::nssmc {

struct NssExperiment {
  sde::DiffusionModel dynamics;
  lyapcert::SizeFunction v;
  /// Ordered by strictly increasing sup-intensity.
  std::vector<sde::CovarianceSchedule> schedules;
  std::vector<Vec> x0s;
  std::size_t n_paths = 10000;
  double dt = 1e-3;
  double horizon = 10.0;
  std::uint64_t master_seed = 0;
  double epsilon = 0.05;
  int threads = 1;
  /// Every k-th Euler step is recorded; 0 picks about 500 records per path.
  std::size_t record_stride = 0;
  /// Keep the raw trajectories in the result.
  bool keep_paths = false;
};

/// Σ(t) ≡ √s·I_m for each intensity s.
std::vector<sde::CovarianceSchedule> ConstantFamily(int noise_dim,
                                                    const std::vector<double>& intensities);

struct ScheduleRun {
  double intensity = 0.0;
  std::string label;
  std::vector<double> times;
  /// V at the recorded times; a path's row stops before its exit point.
  std::vector<std::vector<double>> values;
  std::vector<sde::PathStatus> status;
  /// (1-ε)-quantile over surviving paths at each recorded time (NaN if none).
  std::vector<double> quantile_by_time;
  double tail_quantile = 0.0;
  double blowup_fraction = 0.0;
  std::optional<sde::TrajectoryEnsemble> ensemble;

  bool exited(std::size_t path) const { return status[path] != sde::PathStatus::kCompleted; }
};

struct GainCurve {
  std::vector<double> intensities;
  std::vector<double> tail_quantile;
  std::vector<double> blowup_fraction;
  double epsilon = 0.05;
};

struct ExperimentResult {
  GainCurve curve;
  std::vector<ScheduleRun> runs;
};

/// All schedules share the master seed, so intensities are compared on
/// common Brownian paths. Exits and blow-ups are recorded, never thrown.
ExperimentResult RunExperiment(const NssExperiment& exp);

/// Linear-interpolation quantile of `values` at level q in [0, 1].
double Quantile(std::vector<double> values, double q);

/// Mean of V over all (surviving path, recorded time) pairs with t in [t_lo, t_hi].
double WindowMean(const ScheduleRun& run, double t_lo, double t_hi);

/// intensity,tail_quantile,blowup_fraction
void WriteGainCurveCsv(const GainCurve& curve, std::ostream& out);

/// Bound on V(t) given V(0) and t.
using PathBound = std::function<double(double v0, double t)>;

struct BetaFit {
  double rate = 0.0;
  double headroom = 0.1;
  /// (1 + headroom)·V0·exp(-rate·t).
  double operator()(double v0, double t) const;
};

/// Least-squares log-decay rate through the origin of V(t)/V(0) over the
/// noiseless paths from each x0, using points with V(t)/V(0) > 1e-12.
BetaFit FitBeta(const sde::DiffusionModel& model, const lyapcert::SizeFunction& v,
                const std::vector<Vec>& x0s, double dt, double horizon,
                double headroom = 0.1);

enum class ExceedanceMode {
  /// A path counts once if it ever exceeds inside the window.
  kPathSupremum,
  /// Fraction of (path, recorded time) pairs inside the window.
  kPairs,
};

/// Paths that exit before t_hi count as exceeding from their exit onward.
double ExceedanceFraction(const ScheduleRun& run, const PathBound& bound, double t_lo,
                          double t_hi, ExceedanceMode mode = ExceedanceMode::kPathSupremum);

struct OnsetScan {
  /// Largest intensity below the onset with blow-up <= 1% and a finite
  /// tail quantile.
  std::optional<double> stable_below;
  /// Smallest intensity with blow-up >= 50%.
  std::optional<double> onset;
  std::string Report() const;
};

/// InvalidArgument for fewer than two intensities or a span under two decades.
OnsetScan ScnssThresholdScan(const GainCurve& curve);

struct InssReport {
  double violation_fraction = 0.0;
  std::size_t paths = 0;
  /// ∫₀ᵗ γ(‖Σ(τ)Σ(τ)ᵀ‖)dτ at the recorded times.
  std::vector<double> accumulated;
};

/// Per-path supremum check of V(t) <= β(V0,t) + ∫₀ᵗ γ(‖ΣΣᵀ‖)dτ over the
/// whole run; the integral uses the trapezoid rule on the step grid `dt`.
InssReport InssAccumulationCheck(const ScheduleRun& run, const sde::CovarianceSchedule& schedule,
                                 const PathBound& beta, const compfun::ScalarClassFunction& gamma,
                                 double dt);

}  // namespace nsslab::nssmc
