#include "nsslab/nssmc.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "nsslab/errors.h"
#include "nsslab/parallel.h"

namespace nsslab::nssmc {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::size_t AutoStride(double dt, double horizon) {
  return std::max<std::size_t>(1, sde::StepCount(dt, horizon) / 500);
}

void Validate(const NssExperiment& exp) {
  if (exp.schedules.empty()) throw InvalidArgument("experiment needs at least one schedule");
  if (exp.x0s.empty()) throw InvalidArgument("experiment needs at least one initial state");
  if (exp.n_paths < 100) throw InvalidArgument("experiment needs at least 100 paths");
  if (!(exp.epsilon > 0.0 && exp.epsilon < 1.0))
    throw InvalidArgument("epsilon must lie in (0, 1)");
  if (!(exp.dt > 0.0) || !(exp.horizon > 0.0))
    throw InvalidArgument("dt and horizon must be positive");
  for (const auto& s : exp.schedules)
    if (s.noise_dim() != exp.dynamics.noise_dim())
      throw InvalidArgument("schedule '" + s.label() + "' has the wrong noise dimension");
}

// V along a path up to (not including) its exit point.
std::vector<double> SurvivingValues(const sde::TrajectoryPath& path, const lyapcert::SizeFunction& v) {
  const std::size_t stop = path.exit_index ? *path.exit_index : path.size();
  std::vector<double> out;
  out.reserve(stop);
  for (std::size_t j = 0; j < stop; ++j) {
    double value = kNaN;
    try {
      value = v.Value(path.states.col(j));
    } catch (const Error&) {
    }
    if (!std::isfinite(value)) break;
    out.push_back(value);
  }
  return out;
}

}  // namespace

std::vector<sde::CovarianceSchedule> ConstantFamily(int noise_dim,
                                                    const std::vector<double>& intensities) {
  std::vector<sde::CovarianceSchedule> out;
  for (double s : intensities) {
    if (!(s >= 0.0)) throw InvalidArgument("intensities must be nonnegative");
    out.push_back(sde::CovarianceSchedule::Constant(noise_dim, std::sqrt(s)));
  }
  return out;
}

double Quantile(std::vector<double> values, double q) {
  if (values.empty()) return kNaN;
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const double frac = pos - static_cast<double>(lo);
  std::nth_element(values.begin(), values.begin() + lo, values.end());
  const double a = values[lo];
  if (frac == 0.0) return a;
  const double b = *std::min_element(values.begin() + lo + 1, values.end());
  return a + frac * (b - a);
}

ExperimentResult RunExperiment(const NssExperiment& exp) {
  Validate(exp);
  sde::SimulationOptions options;
  options.record_stride =
      exp.record_stride > 0 ? exp.record_stride : AutoStride(exp.dt, exp.horizon);
  const double q = 1.0 - exp.epsilon;
  const double t_tail = 0.5 * exp.horizon;

  ExperimentResult result;
  result.curve.epsilon = exp.epsilon;
  double previous = -1.0;
  for (const auto& schedule : exp.schedules) {
    ScheduleRun run;
    run.intensity = sde::SupNoiseIntensity(schedule, 0.0, exp.horizon, 1001);
    if (!(run.intensity > previous))
      throw InvalidArgument("schedule intensities must be strictly increasing");
    previous = run.intensity;
    run.label = schedule.label();

    auto ensemble = sde::SimulateEnsemble(exp.dynamics, schedule, exp.x0s, exp.dt, exp.horizon,
                                          exp.n_paths, exp.master_seed, exp.threads, options);
    const auto& paths = ensemble.paths;
    run.values.resize(paths.size());
    run.status.resize(paths.size());
    ParallelFor(paths.size(), exp.threads, [&](std::size_t p) {
      run.values[p] = SurvivingValues(paths[p], exp.v);
      run.status[p] = paths[p].status;
      if (run.status[p] == sde::PathStatus::kCompleted && run.values[p].size() != paths[p].size())
        run.status[p] = sde::PathStatus::kBlowUp;
    });
    std::size_t longest = 0;
    for (std::size_t p = 0; p < paths.size(); ++p)
      if (paths[p].size() > paths[longest].size()) longest = p;
    run.times = paths[longest].times;
    if (paths[longest].exit_index) run.times.resize(*paths[longest].exit_index);

    std::size_t exits = 0;
    std::vector<double> tail;
    for (std::size_t p = 0; p < paths.size(); ++p) {
      if (run.exited(p)) {
        ++exits;
        continue;
      }
      for (std::size_t j = 0; j < run.values[p].size(); ++j)
        if (run.times[j] >= t_tail) tail.push_back(run.values[p][j]);
    }
    run.blowup_fraction = static_cast<double>(exits) / static_cast<double>(paths.size());
    run.tail_quantile = Quantile(std::move(tail), q);

    run.quantile_by_time.resize(run.times.size());
    ParallelFor(run.times.size(), exp.threads, [&](std::size_t j) {
      std::vector<double> column;
      column.reserve(paths.size());
      for (const auto& row : run.values)
        if (j < row.size()) column.push_back(row[j]);
      run.quantile_by_time[j] = Quantile(std::move(column), q);
    });
    if (exp.keep_paths) run.ensemble = std::move(ensemble);

    result.curve.intensities.push_back(run.intensity);
    result.curve.tail_quantile.push_back(run.tail_quantile);
    result.curve.blowup_fraction.push_back(run.blowup_fraction);
    result.runs.push_back(std::move(run));
  }
  return result;
}

double WindowMean(const ScheduleRun& run, double t_lo, double t_hi) {
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t p = 0; p < run.values.size(); ++p) {
    if (run.exited(p)) continue;
    for (std::size_t j = 0; j < run.values[p].size(); ++j) {
      if (run.times[j] < t_lo || run.times[j] > t_hi) continue;
      sum += run.values[p][j];
      ++count;
    }
  }
  return count ? sum / static_cast<double>(count) : kNaN;
}

void WriteGainCurveCsv(const GainCurve& curve, std::ostream& out) {
  out << "intensity,tail_quantile,blowup_fraction\n";
  for (std::size_t j = 0; j < curve.intensities.size(); ++j)
    out << sde::FormatDouble(curve.intensities[j]) << ','
        << sde::FormatDouble(curve.tail_quantile[j]) << ','
        << sde::FormatDouble(curve.blowup_fraction[j]) << '\n';
}

double BetaFit::operator()(double v0, double t) const {
  return (1.0 + headroom) * v0 * std::exp(-rate * t);
}

BetaFit FitBeta(const sde::DiffusionModel& model, const lyapcert::SizeFunction& v,
                const std::vector<Vec>& x0s, double dt, double horizon, double headroom) {
  if (x0s.empty()) throw InvalidArgument("FitBeta needs initial states");
  if (!(headroom >= 0.0)) throw InvalidArgument("headroom must be nonnegative");
  sde::SimulationOptions options;
  options.record_stride = AutoStride(dt, horizon);
  const auto zero = sde::CovarianceSchedule::Zero(model.noise_dim());
  double sty = 0.0;
  double stt = 0.0;
  for (const Vec& x0 : x0s) {
    const auto path = sde::SimulatePath(model, zero, x0, dt, horizon, 0, options);
    const auto values = SurvivingValues(path, v);
    if (values.empty() || !(values[0] > 0.0)) continue;
    for (std::size_t j = 1; j < values.size(); ++j) {
      const double ratio = values[j] / values[0];
      if (!(ratio > 1e-12)) continue;
      sty += path.times[j] * std::log(ratio);
      stt += path.times[j] * path.times[j];
    }
  }
  BetaFit fit;
  fit.headroom = headroom;
  fit.rate = stt > 0.0 ? std::max(0.0, -sty / stt) : 0.0;
  return fit;
}

double ExceedanceFraction(const ScheduleRun& run, const PathBound& bound, double t_lo,
                          double t_hi, ExceedanceMode mode) {
  if (run.values.empty()) return 0.0;
  std::size_t window_points = 0;
  for (double t : run.times)
    if (t >= t_lo && t <= t_hi) ++window_points;
  std::size_t hits = 0;
  for (std::size_t p = 0; p < run.values.size(); ++p) {
    const auto& row = run.values[p];
    const double v0 = row.empty() ? 0.0 : row[0];
    std::size_t path_hits = 0;
    for (std::size_t j = 0; j < run.times.size(); ++j) {
      const double t = run.times[j];
      if (t < t_lo || t > t_hi) continue;
      if (j >= row.size() || row[j] > bound(v0, t)) ++path_hits;
    }
    if (mode == ExceedanceMode::kPathSupremum) {
      hits += path_hits > 0 ? 1 : 0;
    } else {
      hits += path_hits;
    }
  }
  const double total = static_cast<double>(run.values.size()) *
                       (mode == ExceedanceMode::kPathSupremum ? 1.0
                                                              : static_cast<double>(window_points));
  return total > 0.0 ? static_cast<double>(hits) / total : 0.0;
}

std::string OnsetScan::Report() const {
  std::ostringstream out;
  if (!onset) {
    out << "no upper onset detected within grid";
    if (stable_below) out << " (stable up to intensity " << *stable_below << ")";
    return out.str();
  }
  out << "practical onset in (";
  if (stable_below) {
    out << *stable_below;
  } else {
    out << "grid start";
  }
  out << ", " << *onset << "]";
  return out.str();
}

OnsetScan ScnssThresholdScan(const GainCurve& curve) {
  const auto& s = curve.intensities;
  if (s.size() < 2) throw InvalidArgument("onset scan needs at least two intensities");
  if (!(s.front() > 0.0) || s.back() < 100.0 * s.front())
    throw InvalidArgument("onset scan needs an intensity grid spanning two decades");
  OnsetScan scan;
  std::size_t end = s.size();
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (curve.blowup_fraction[j] >= 0.5) {
      scan.onset = s[j];
      end = j;
      break;
    }
  }
  for (std::size_t j = 0; j < end; ++j)
    if (curve.blowup_fraction[j] <= 0.01 && std::isfinite(curve.tail_quantile[j]))
      scan.stable_below = s[j];
  return scan;
}

InssReport InssAccumulationCheck(const ScheduleRun& run, const sde::CovarianceSchedule& schedule,
                                 const PathBound& beta,
                                 const compfun::ScalarClassFunction& gamma, double dt) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  InssReport report;
  report.paths = run.values.size();
  report.accumulated.resize(run.times.size());
  auto rate = [&](double t) { return gamma(schedule.Intensity(t)); };
  double integral = 0.0;
  for (std::size_t j = 0; j < run.times.size(); ++j) {
    const double a = j == 0 ? 0.0 : run.times[j - 1];
    const double b = run.times[j];
    const auto steps = static_cast<std::size_t>(std::ceil((b - a) / dt - 1e-9));
    for (std::size_t k = 0; k < steps; ++k) {
      const double lo = a + (b - a) * static_cast<double>(k) / static_cast<double>(steps);
      const double hi = a + (b - a) * static_cast<double>(k + 1) / static_cast<double>(steps);
      integral += 0.5 * (hi - lo) * (rate(lo) + rate(hi));
    }
    report.accumulated[j] = integral;
  }
  std::size_t violations = 0;
  for (const auto& row : run.values) {
    bool bad = row.size() < run.times.size();
    const double v0 = row.empty() ? 0.0 : row[0];
    for (std::size_t j = 0; j < row.size() && !bad; ++j)
      bad = row[j] > beta(v0, run.times[j]) + report.accumulated[j];
    violations += bad ? 1 : 0;
  }
  report.violation_fraction =
      report.paths ? static_cast<double>(violations) / static_cast<double>(report.paths) : 0.0;
  return report;
}

}  // namespace nsslab::nssmc
