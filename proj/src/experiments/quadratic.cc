#include <boost/math/distributions/chi_squared.hpp>
#include <chrono>
#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "experiments/common.h"
#include "nsslab/rng.h"

namespace nsslab::experiments::internal {
namespace {

std::vector<double> DefaultScanGrid() { return objectives::GeometricGrid(0.1, 10.0, 5); }

lyapcert::SizeFunction SquaredDistance(const Vec& center) {
  return lyapcert::SizeFunction(
      [center](const Vec& z) { return (z - center).squaredNorm(); }, "|z - z*|^2",
      [center](const Vec& z) { return Vec(2.0 * (z - center)); },
      [n = center.size()](const Vec&) { return Mat(2.0 * Mat::Identity(n, n)); });
}

bool NonDecreasing(const std::vector<double>& xs) {
  for (std::size_t j = 1; j < xs.size(); ++j)
    if (!(xs[j] >= xs[j - 1])) return false;
  return true;
}

std::string Join(const std::vector<double>& xs) {
  std::string out;
  for (double x : xs) out += (out.empty() ? "" : ", ") + Num(x);
  return out;
}

}  // namespace

void RunOuSanity(Context& ctx) {
  const auto& c = ctx.config;
  const auto obj = QuadraticFromConfig(c, Mat::Identity(1, 1));
  const int n = obj.dim();
  const double eta = c.Positive("dynamics.eta", 1.0);
  const auto intensities = c.Reals("noise.intensities", {0.25});
  const auto mc = McFromConfig(c, 10000, 1e-3, 50.0);
  const langevin::OverdampedConfig cfg{obj, langevin::NoiseFactor::Identity(n),
                                       langevin::RateSchedule::Constant(eta)};
  auto exp = MakeExperiment(ctx, langevin::BuildOverdamped(cfg), SquaredDistance(obj.minimizer()),
                            intensities, InitialState(c, obj.minimizer()), mc);

  const auto start = std::chrono::steady_clock::now();
  const auto res = nssmc::RunExperiment(exp);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  const Mat a = c.Matrix("problem.a", Mat::Identity(1, 1));
  for (const auto& run : res.runs) {
    const Mat p = lqr::SolveLyapunov(-eta * a, run.intensity * Mat::Identity(n, n));
    const double oracle = p.trace();
    const double got = nssmc::WindowMean(run, mc.horizon / 2, mc.horizon);
    const double rel = std::abs(got - oracle) / oracle;
    ctx.Check("stationary second moment at intensity " + Num(run.intensity), 1, rel <= 0.05,
              "time-tail E|z - z*|^2 = " + Num(got) + ", Lyapunov oracle tr P = " + Num(oracle) +
                  " (sigma^2/2 per coordinate), relative error " + Num(rel) + " <= 0.05");
  }
  if (ctx.threads == 1) {
    ctx.Check("single-threaded runtime", 1, seconds < 60.0,
              Num(seconds) + " s for " + std::to_string(mc.paths) + " paths over [0, " +
                  Num(mc.horizon) + "] at dt " + Num(mc.dt) + " (limit 60 s)");
  } else {
    ctx.Note("runtime check skipped at " + std::to_string(ctx.threads) + " threads");
  }

  {
    auto out = ctx.Artifact("moments.csv");
    out << "t";
    for (const auto& run : res.runs) out << ",m_" << sde::FormatDouble(run.intensity);
    out << "\n";
    const auto& times = res.runs.front().times;
    for (std::size_t j = 0; j < times.size(); ++j) {
      out << sde::FormatDouble(times[j]);
      for (const auto& run : res.runs) {
        double sum = 0.0;
        std::size_t count = 0;
        for (const auto& row : run.values) {
          if (j >= row.size()) continue;
          sum += row[j];
          ++count;
        }
        out << "," << sde::FormatDouble(count ? sum / static_cast<double>(count) : NAN);
      }
      out << "\n";
    }
  }
  WriteMcArtifacts(ctx, exp, res, mc);
}

void RunQuadraticOverdamped(Context& ctx) {
  const auto& c = ctx.config;
  const auto obj = QuadraticFromConfig(c, Mat::Identity(1, 1));
  const int n = obj.dim();
  const langevin::OverdampedConfig cfg{obj, langevin::NoiseFactor::Identity(n)};
  const auto model = langevin::BuildOverdamped(cfg);
  const Mat a = c.Matrix("problem.a", Mat::Identity(1, 1));

  // Generator of ½|z - z*|² against -|z - z*|²_A + ½nσ² on the probe set.
  const std::size_t probes = c.Count("mc.probes", 1000);
  const auto states = lyapcert::DefaultStateSamples(model, ctx.seed, probes);
  const auto half = lyapcert::SizeFunction(
      [zs = obj.minimizer()](const Vec& z) { return 0.5 * (z - zs).squaredNorm(); }, "|z|^2/2",
      [zs = obj.minimizer()](const Vec& z) { return Vec(z - zs); },
      [n](const Vec&) { return Mat(Mat::Identity(n, n)); });
  rng::CounterStream stream(ctx.seed, 1);
  double worst = 0.0;
  for (const Vec& z : states) {
    const double sigma = 2.0 * stream.Uniform();
    const Vec d = z - obj.minimizer();
    const double expected = -d.dot(a * d) + 0.5 * n * sigma * sigma;
    const double got =
        lyapcert::GeneratorApply(half, model, z, sigma * Mat::Identity(n, n));
    worst = std::max(worst, std::abs(got - expected) / (1 + std::abs(expected)));
  }
  ctx.Check("generator of |z|^2/2", 2, worst <= 1e-10,
            "max |L - (-z'Az + n sigma^2/2)| / (1 + |.|) = " + Num(worst) + " over " +
                std::to_string(states.size()) + " probes (tol 1e-10)");
  const auto jsize = langevin::SuboptimalitySize(obj);
  const double gap = MaxGeneratorGap(jsize, model, states, 0.7 * Mat::Identity(n, n));
  ctx.Check("analytic vs finite-difference generator of J - J*", 2, gap <= 1e-4,
            "max relative gap " + Num(gap) + " (tol 1e-4)");

  CertifyTriple(ctx, langevin::GradientFlowTriple(cfg), model, "gradient_flow", 3, probes);

  // Gain curve against (s/4η)χ²_n quantiles.
  const auto intensities = c.Reals("noise.intensities", {0.01, 0.04, 0.16});
  const auto mc = McFromConfig(c, 10000, 1e-2, 10.0);
  const Vec x0 = InitialState(c, obj.minimizer() + Vec::Ones(n));
  auto exp = MakeExperiment(ctx, model, jsize, intensities, x0, mc);
  const auto res = nssmc::RunExperiment(exp);
  const boost::math::chi_squared chi(static_cast<double>(n));
  const double factor = boost::math::quantile(chi, 1.0 - mc.epsilon);
  {
    auto out = ctx.Artifact("chi_square_oracle.csv");
    out << "intensity,tail_quantile,oracle,relative_error\n";
    for (std::size_t j = 0; j < intensities.size(); ++j) {
      const double oracle = intensities[j] / 4 * factor;
      const double got = res.curve.tail_quantile[j];
      const double rel = std::abs(got - oracle) / oracle;
      out << sde::FormatDouble(intensities[j]) << "," << sde::FormatDouble(got) << ","
          << sde::FormatDouble(oracle) << "," << sde::FormatDouble(rel) << "\n";
      ctx.Check("tail quantile at intensity " + Num(intensities[j]), 8, rel <= 0.15,
                "(1-eps)-quantile " + Num(got) + " vs (s/4) chi2_" + std::to_string(n) +
                    " quantile " + Num(oracle) + ", relative error " + Num(rel) + " <= 0.15");
    }
  }
  ctx.Check("gain curve monotone in intensity", 8, NonDecreasing(res.curve.tail_quantile),
            "tail quantiles " + Join(res.curve.tail_quantile));

  const double kappa = c.Positive("mc.kappa", 3.0);
  const auto beta = nssmc::FitBeta(exp.dynamics, exp.v, exp.x0s, exp.dt, exp.horizon);
  ctx.Note("fitted beta: (1 + " + Num(beta.headroom) + ") V0 exp(-" + Num(beta.rate) +
           " t); gamma(s) = " + Num(kappa) + " s");
  for (const auto& run : res.runs) {
    const double s = run.intensity;
    const double frac = nssmc::ExceedanceFraction(
        run, [&](double v0, double t) { return beta(v0, t) + kappa * s; }, mc.horizon / 2,
        mc.horizon);
    ctx.Check("exceedance at intensity " + Num(s), 8, frac <= mc.epsilon,
              "fraction of paths exceeding beta + gamma on [T/2, T] = " + Num(frac) +
                  " <= " + Num(mc.epsilon));
  }
  WriteMcArtifacts(ctx, exp, res, mc);

  // Onset scan on the two-decade grid.
  auto scan_mc = mc;
  scan_mc.paths = c.Count("mc.scan_paths", 200);
  scan_mc.horizon = 2 * mc.horizon;
  scan_mc.export_paths = 0;
  auto scan_exp = MakeExperiment(ctx, model, jsize,
                                 c.Reals("noise.scan_intensities", DefaultScanGrid()),
                                 obj.minimizer(), scan_mc);
  const auto scan_res = nssmc::RunExperiment(scan_exp);
  const auto scan = nssmc::ScnssThresholdScan(scan_res.curve);
  {
    auto out = ctx.Artifact("scan_curve.csv");
    nssmc::WriteGainCurveCsv(scan_res.curve, out);
  }
  ctx.Check("no upper onset on the two-decade grid", 9, !scan.onset, scan.Report());
}

void RunQuadraticUnderdamped(Context& ctx) {
  const auto& c = ctx.config;
  const auto obj = QuadraticFromConfig(c, Mat::Identity(2, 2));
  const int n = obj.dim();
  const Mat a = c.Matrix("problem.a", Mat::Identity(2, 2));
  const double eta = c.Positive("dynamics.eta", 1.0);
  const double damping = c.Positive("dynamics.c", 1.0);
  const auto cfg = langevin::UnderdampedConfig::Constant(obj, langevin::NoiseFactor::Identity(n),
                                                         eta, damping);
  const auto model = langevin::BuildUnderdamped(cfg);

  Vec fallback(2 * n);
  fallback.setZero();
  fallback.head(n) = obj.minimizer();
  for (int i = 0; i < n; ++i) {
    fallback[i] += (i % 2 == 0) ? 1.0 : -0.5;
    fallback[n + i] = (i % 2 == 0) ? 0.0 : 0.3;
  }
  const Vec x0 = InitialState(c, fallback);
  Mat m = Mat::Zero(2 * n, 2 * n);
  m.topRightCorner(n, n) = Mat::Identity(n, n);
  m.bottomLeftCorner(n, n) = -eta * a;
  m.bottomRightCorner(n, n) = -damping * Mat::Identity(n, n);
  Vec shift = Vec::Zero(2 * n);
  shift.head(n) = obj.minimizer();

  const double horizon = c.Positive("dynamics.horizon", 100.0);
  const double dt = c.Positive("mc.dt", 1e-3);
  const auto zero = sde::CovarianceSchedule::Zero(n);
  sde::SimulationOptions opts;
  opts.record_stride = std::max<std::size_t>(1, sde::StepCount(dt, horizon) / 1000);
  const auto path = sde::SimulatePath(model, zero, x0, dt, horizon, ctx.seed, opts);
  const Vec end = path.states.col(static_cast<Eigen::Index>(path.size() - 1));
  const Vec exact_end = (m * horizon).exp() * (x0 - shift) + shift;
  ctx.Check("noiseless decay to equilibrium", 11, (end - shift).norm() <= 1e-6,
            "|(z, v)(T) - (z*, 0)| = " + Num((end - shift).norm()) + " at T = " + Num(horizon) +
                " (tol 1e-6)");
  ctx.Check("end state vs matrix exponential", 11, (end - exact_end).norm() <= 1e-5,
            "|x(T) - expm(MT) x0| = " + Num((end - exact_end).norm()) + " at dt " + Num(dt) +
                " (tol 1e-5)");

  const double fine_dt = dt / 100;
  const double fine_horizon = std::min(10.0, horizon);
  sde::SimulationOptions fine_opts;
  fine_opts.record_stride = std::max<std::size_t>(1, sde::StepCount(fine_dt, fine_horizon) / 1000);
  const auto fine =
      sde::SimulatePath(model, zero, x0, fine_dt, fine_horizon, ctx.seed, fine_opts);
  double worst = 0.0;
  {
    auto out = ctx.Artifact("trajectory.csv");
    out << "t";
    for (int i = 0; i < 2 * n; ++i) out << ",x_" << i;
    for (int i = 0; i < 2 * n; ++i) out << ",exact_" << i;
    out << "\n";
    for (std::size_t j = 0; j < fine.size(); ++j) {
      const Vec exact = (m * fine.times[j]).exp() * (x0 - shift) + shift;
      const Vec got = fine.states.col(static_cast<Eigen::Index>(j));
      worst = std::max(worst, (got - exact).norm());
      out << sde::FormatDouble(fine.times[j]);
      for (int i = 0; i < 2 * n; ++i) out << "," << sde::FormatDouble(got[i]);
      for (int i = 0; i < 2 * n; ++i) out << "," << sde::FormatDouble(exact[i]);
      out << "\n";
    }
  }
  ctx.Check("trajectory vs matrix exponential", 11, worst <= 1e-5,
            "max deviation " + Num(worst) + " on [0, " + Num(fine_horizon) + "] at dt " +
                Num(fine_dt) + " (tol 1e-5)");

  const std::size_t probes = c.Count("mc.probes", 1000);
  CertifyTriple(ctx, langevin::MomentumTriple(cfg), model, "momentum_v2", 3, probes);

  const auto phi = QuadraticPhi(a, 2000.0, c.Real("dynamics.delta", 0.0));
  const auto scheduled =
      langevin::UnderdampedConfig::Scheduled(obj, langevin::NoiseFactor::Identity(n), phi);
  const auto scheduled_model = langevin::BuildUnderdamped(scheduled);
  CertifyTriple(ctx, langevin::ScheduledMomentumTriple(scheduled), scheduled_model,
                "scheduled_v3", 3, probes);

  const auto states = lyapcert::DefaultStateSamples(model, ctx.seed, probes);
  const Mat theta = 0.7 * Mat::Identity(n, n);
  const double gap2 = MaxGeneratorGap(langevin::MomentumSize(cfg), model, states, theta);
  const double gap3 = MaxGeneratorGap(langevin::ScheduledMomentumSize(scheduled),
                                      scheduled_model, states, theta);
  ctx.Check("analytic vs finite-difference generator of V2", 2, gap2 <= 1e-4,
            "max relative gap " + Num(gap2) + " (tol 1e-4)");
  ctx.Check("analytic vs finite-difference generator of V3", 2, gap3 <= 1e-4,
            "max relative gap " + Num(gap3) + " (tol 1e-4)");

  // A small noisy ensemble for plotting.
  auto mc = McFromConfig(c, 200, 1e-2, 20.0);
  if (c.Has("noise.intensities")) {
    auto exp = MakeExperiment(ctx, model, langevin::MomentumSize(cfg),
                              c.Reals("noise.intensities", {}), x0, mc);
    const auto res = nssmc::RunExperiment(exp);
    WriteMcArtifacts(ctx, exp, res, mc);
  }
}

}  // namespace nsslab::experiments::internal
