#include "nsslab/sde.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <span>
#include <sstream>

#include "nsslab/errors.h"
#include "nsslab/parallel.h"
#include "nsslab/rng.h"

namespace nsslab::sde {

DiffusionModel::DiffusionModel(int state_dim, int noise_dim, DriftFn drift,
                               DiffusionFn diffusion, DomainFn domain_test,
                               Vec equilibrium, std::string label,
                               bool state_independent_diffusion)
    : n_(state_dim),
      m_(noise_dim),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      domain_(std::move(domain_test)),
      equilibrium_(std::move(equilibrium)),
      label_(std::move(label)),
      state_independent_(state_independent_diffusion) {
  if (n_ <= 0 || m_ <= 0)
    throw InvalidArgument("DiffusionModel: dimensions must be positive");
  if (!drift_ || !diffusion_)
    throw InvalidArgument("DiffusionModel: drift and diffusion are required");
  if (!domain_) domain_ = Everywhere;
  if (equilibrium_.size() != n_)
    throw InvalidArgument("DiffusionModel: equilibrium has wrong dimension");
  const Vec f = Drift(equilibrium_);
  if (!(f.norm() <= 1e-9)) {
    std::ostringstream msg;
    msg << "DiffusionModel " << label_ << ": drift at equilibrium has norm "
        << f.norm();
    throw InvalidArgument(msg.str());
  }
  const Mat g = Diffusion(equilibrium_);
  if (g.rows() != n_ || g.cols() != m_)
    throw InvalidArgument("DiffusionModel: diffusion has wrong shape");
}

Vec DiffusionModel::Drift(const Vec& x) const {
  Vec out = Vec::Zero(n_);
  drift_(x, out);
  return out;
}

Mat DiffusionModel::Diffusion(const Vec& x) const {
  Mat out = Mat::Zero(n_, m_);
  diffusion_(x, out);
  return out;
}

bool DiffusionModel::InDomain(const Vec& x) const { return domain_(x); }

bool Everywhere(const Vec&) { return true; }

CovarianceSchedule::CovarianceSchedule(int noise_dim, SigmaFn sigma,
                                       std::string label, bool time_invariant)
    : m_(noise_dim),
      sigma_(std::move(sigma)),
      label_(std::move(label)),
      time_invariant_(time_invariant) {
  if (m_ <= 0) throw InvalidArgument("CovarianceSchedule: noise_dim must be positive");
  if (!sigma_) throw InvalidArgument("CovarianceSchedule: empty sigma map");
  const Mat s0 = sigma_(0.0);
  if (s0.rows() != m_ || s0.cols() != m_)
    throw InvalidArgument("CovarianceSchedule: sigma must be m x m");
}

CovarianceSchedule CovarianceSchedule::Constant(int noise_dim, double sigma) {
  std::ostringstream label;
  label << "constant(" << sigma << ")";
  const Mat s = sigma * Mat::Identity(noise_dim, noise_dim);
  return CovarianceSchedule(noise_dim, [s](double) { return s; }, label.str(),
                            true);
}

CovarianceSchedule CovarianceSchedule::ConstantMatrix(const Mat& sigma) {
  if (sigma.rows() != sigma.cols())
    throw InvalidArgument("ConstantMatrix: sigma must be square");
  return CovarianceSchedule(static_cast<int>(sigma.rows()),
                            [sigma](double) { return sigma; }, "constant-matrix",
                            true);
}

CovarianceSchedule CovarianceSchedule::Zero(int noise_dim) {
  return Constant(noise_dim, 0.0);
}

CovarianceSchedule CovarianceSchedule::Pulse(int noise_dim, double sigma,
                                             double t_on, double t_off) {
  if (!(t_off > t_on)) throw InvalidArgument("Pulse: t_off must exceed t_on");
  std::ostringstream label;
  label << "pulse(" << sigma << ",[" << t_on << "," << t_off << "))";
  const Mat on = sigma * Mat::Identity(noise_dim, noise_dim);
  const Mat off = Mat::Zero(noise_dim, noise_dim);
  return CovarianceSchedule(
      noise_dim,
      [on, off, t_on, t_off](double t) { return (t >= t_on && t < t_off) ? on : off; },
      label.str(), false);
}

Mat CovarianceSchedule::Covariance(double t) const {
  const Mat s = sigma_(t);
  return s * s.transpose();
}

double CovarianceSchedule::Intensity(double t) const {
  return NoiseIntensity(sigma_(t));
}

double CovarianceSchedule::MinCovarianceEigenvalue(
    const std::vector<double>& probe_times) const {
  double lo = std::numeric_limits<double>::infinity();
  for (double t : probe_times) {
    Eigen::SelfAdjointEigenSolver<Mat> eig(Covariance(t), Eigen::EigenvaluesOnly);
    lo = std::min(lo, eig.eigenvalues().minCoeff());
  }
  return lo;
}

double SupNoiseIntensity(const CovarianceSchedule& schedule, double t_lo,
                         double t_hi, int grid_points) {
  if (grid_points < 2) throw InvalidArgument("SupNoiseIntensity: need >= 2 grid points");
  if (t_hi < t_lo) throw InvalidArgument("SupNoiseIntensity: t_lo > t_hi");
  if (schedule.time_invariant()) return schedule.Intensity(t_lo);
  double best = 0.0;
  const double step = (t_hi - t_lo) / (grid_points - 1);
  for (int i = 0; i < grid_points; ++i) {
    const double t = i + 1 == grid_points ? t_hi : t_lo + i * step;
    best = std::max(best, schedule.Intensity(t));
  }
  return best;
}

std::string ToString(PathStatus s) {
  switch (s) {
    case PathStatus::kCompleted:
      return "completed";
    case PathStatus::kDomainExit:
      return "domain_exit";
    case PathStatus::kBlowUp:
      return "blowup";
  }
  return "?";
}

std::size_t StepCount(double dt, double horizon) {
  if (!(dt > 0.0) || !(horizon > 0.0))
    throw InvalidArgument("StepCount: dt and horizon must be positive");
  if (dt > horizon) throw InvalidArgument("StepCount: dt exceeds horizon");
  const double ratio = horizon / dt;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) <= 1e-9 * nearest)
    return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(ratio));
}

namespace {

bool BlownUp(const Vec& x, double threshold) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = x[i];
    if (!std::isfinite(v) || std::abs(v) > threshold) return true;
  }
  return false;
}

}  // namespace

TrajectoryPath SimulatePath(const DiffusionModel& model,
                            const CovarianceSchedule& schedule, const Vec& x0,
                            double dt, double horizon, std::uint64_t seed,
                            const SimulationOptions& options) {
  const int n = model.state_dim();
  const int m = model.noise_dim();
  if (schedule.noise_dim() != m)
    throw InvalidArgument("SimulatePath: schedule and model noise dimensions differ");
  if (x0.size() != n) throw InvalidArgument("SimulatePath: x0 has wrong dimension");
  if (!model.InDomain(x0)) throw InvalidArgument("SimulatePath: x0 outside the domain");
  if (options.record_stride == 0)
    throw InvalidArgument("SimulatePath: record_stride must be positive");

  const std::size_t steps = StepCount(dt, horizon);
  const std::size_t stride = options.record_stride;
  const std::size_t max_records = steps / stride + 2;

  TrajectoryPath path;
  path.seed = seed;
  path.times.reserve(max_records);
  Mat recorded(n, static_cast<Eigen::Index>(max_records));
  std::size_t count = 0;
  auto record = [&](double t, const Vec& x) {
    path.times.push_back(t);
    recorded.col(static_cast<Eigen::Index>(count++)) = x;
  };

  Vec x = x0;
  Vec drift = Vec::Zero(n);
  Vec xi = Vec::Zero(m);
  Mat g = Mat::Zero(n, m);
  Mat g_sigma = Mat::Zero(n, m);
  const bool cache_g = model.state_independent_diffusion();
  const bool cache_all = cache_g && schedule.time_invariant();
  if (cache_g) model.DiffusionInto(x0, g);
  if (cache_all) g_sigma = g * schedule.Sigma(0.0);
  const bool noiseless = cache_all && g_sigma.isZero(0.0);

  record(0.0, x);
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * dt;
    const bool last = k + 1 == steps;
    const double t_next = last ? horizon : static_cast<double>(k + 1) * dt;
    const double h = t_next - t;

    model.DriftInto(x, drift);
    double* xs = x.data();
    const double* ds = drift.data();
    for (int i = 0; i < n; ++i) xs[i] += h * ds[i];
    if (!noiseless) {
      if (!cache_all) {
        if (!cache_g) model.DiffusionInto(x, g);
        g_sigma.noalias() = g * schedule.Sigma(t);
      }
      rng::FillStandardNormal(seed, k, std::span<double>(xi.data(), m));
      const double root_h = std::sqrt(h);
      for (int i = 0; i < n; ++i) {
        double acc = 0.0;
        for (int j = 0; j < m; ++j) acc += g_sigma(i, j) * xi[j];
        xs[i] += root_h * acc;
      }
    }
    const bool blown = BlownUp(x, options.blowup_threshold);
    const bool outside = !blown && !model.InDomain(x);
    if (blown || outside) {
      path.status = blown ? PathStatus::kBlowUp : PathStatus::kDomainExit;
      path.exit_index = count;
      record(t_next, x);
      break;
    }
    if (last || (k + 1) % stride == 0) record(t_next, x);
  }
  path.states = recorded.leftCols(static_cast<Eigen::Index>(count));
  return path;
}

TrajectoryEnsemble SimulateEnsemble(const DiffusionModel& model,
                                    const CovarianceSchedule& schedule,
                                    const std::vector<Vec>& x0s, double dt,
                                    double horizon, std::size_t n_paths,
                                    std::uint64_t master_seed, int threads,
                                    const SimulationOptions& options) {
  if (n_paths == 0) throw InvalidArgument("SimulateEnsemble: need at least one path");
  if (x0s.empty()) throw InvalidArgument("SimulateEnsemble: empty initial-state set");
  TrajectoryEnsemble ensemble;
  ensemble.master_seed = master_seed;
  ensemble.dt = dt;
  ensemble.horizon = horizon;
  ensemble.model_label = model.label();
  ensemble.paths.resize(n_paths);
  ParallelFor(n_paths, threads, [&](std::size_t k) {
    ensemble.paths[k] =
        SimulatePath(model, schedule, x0s[k % x0s.size()], dt, horizon,
                     rng::DeterministicHash(master_seed, k), options);
  });
  return ensemble;
}

TrajectoryEnsemble SimulateEnsemble(const DiffusionModel& model,
                                    const CovarianceSchedule& schedule,
                                    const Vec& x0, double dt, double horizon,
                                    std::size_t n_paths,
                                    std::uint64_t master_seed, int threads,
                                    const SimulationOptions& options) {
  return SimulateEnsemble(model, schedule, std::vector<Vec>{x0}, dt, horizon,
                          n_paths, master_seed, threads, options);
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void WriteEnsembleCsv(const TrajectoryEnsemble& ensemble, std::ostream& out) {
  const Eigen::Index n =
      ensemble.paths.empty() ? 0 : ensemble.paths.front().states.rows();
  out << "path_id,t";
  for (Eigen::Index i = 0; i < n; ++i) out << ",state_" << i;
  out << '\n';
  for (std::size_t p = 0; p < ensemble.paths.size(); ++p) {
    const auto& path = ensemble.paths[p];
    for (std::size_t j = 0; j < path.times.size(); ++j) {
      out << p << ',' << FormatDouble(path.times[j]);
      for (Eigen::Index i = 0; i < n; ++i)
        out << ',' << FormatDouble(path.states(i, static_cast<Eigen::Index>(j)));
      out << '\n';
    }
  }
}

void WriteEnsembleCsv(const TrajectoryEnsemble& ensemble,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot open " + path + " for writing");
  WriteEnsembleCsv(ensemble, out);
}

}  // namespace nsslab::sde
