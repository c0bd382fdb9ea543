#include <cmath>
#include <limits>
#include <optional>

#include "experiments/common.h"
#include "nsslab/errors.h"
#include "nsslab/rng.h"

namespace nsslab::experiments::internal {
namespace {

std::vector<double> TwoDecades() { return objectives::GeometricGrid(0.1, 10.0, 5); }

struct Shape {
  int n;
  int m;
};

std::vector<Shape> ParseInstances(const Config& c) {
  const std::string text = c.Text("problem.instances", "2x1, 3x2, 4x1");
  std::vector<Shape> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    int n = 0, m = 0;
    char x = 0;
    std::istringstream parse(item);
    if (!(parse >> n >> x >> m) || x != 'x' || n < 1 || m < 1)
      throw ConfigurationError(c.source() + ": problem.instances: expected entries like 3x2, got '" +
                               item + "'");
    out.push_back({n, m});
  }
  if (out.empty()) throw ConfigurationError(c.source() + ": problem.instances is empty");
  return out;
}

langevin::RateSchedule RateFromConfig(const Config& c, bool* constant) {
  const std::string mode = c.Text("dynamics.mode", "constant");
  *constant = mode == "constant";
  if (*constant) return langevin::RateSchedule::Constant(c.Positive("dynamics.eta", 1.0));
  const auto eta_mode = lqr::ParseEtaMode(mode);
  return {[eta_mode](double h) { return lqr::EtaScheduleLqr(eta_mode, h); },
          "eta " + lqr::ToString(eta_mode)};
}

std::vector<Vec> GainProbes(const lqr::LqrProblem& problem, std::size_t count,
                            std::uint64_t seed) {
  std::vector<Vec> out;
  for (const Mat& k : lqr::RandomStabilizingGains(problem, count, seed, {0.05, 0.3, 1.0, 3.0}))
    out.push_back(lqr::VecGain(k));
  return out;
}

}  // namespace

void RunLqrPoOverdamped(Context& ctx) {
  const auto& c = ctx.config;
  const auto problem = LqrFromConfig(c);
  const auto obj = lqr::MakeLqrObjective(problem);
  bool constant = true;
  const langevin::OverdampedConfig cfg{obj, langevin::NoiseFactor::Identity(obj.dim()),
                                       RateFromConfig(c, &constant)};
  const auto model = langevin::BuildOverdamped(cfg);
  const auto mc = McFromConfig(c, 400, 1e-2, 20.0);
  auto exp = MakeExperiment(ctx, model, langevin::SuboptimalitySize(obj),
                            c.Reals("noise.scan_intensities", TwoDecades()),
                            InitialState(c, obj.minimizer()), mc);
  const auto res = nssmc::RunExperiment(exp);
  const auto scan = nssmc::ScnssThresholdScan(res.curve);
  ctx.Note("eta schedule: " + cfg.eta.label + "; J* = " + Num(problem.profile().j2_star));
  if (constant) {
    const double bottom = res.curve.blowup_fraction.front();
    const double top = res.curve.blowup_fraction.back();
    ctx.Check("blow-up at the bottom of the grid", 9, bottom <= 0.01,
              "blowup_fraction " + Num(bottom) + " at intensity " +
                  Num(res.curve.intensities.front()) + " (<= 0.01)");
    ctx.Check("blow-up at the top of the grid", 9, top >= 0.5,
              "blowup_fraction " + Num(top) + " at intensity " +
                  Num(res.curve.intensities.back()) + " (>= 0.5)");
    ctx.Check("practical onset bracket", 9, scan.onset.has_value(),
              scan.Report() + " (instance-specific, not the analytic threshold d)");
  } else {
    ctx.Note(scan.Report());
  }
  WriteMcArtifacts(ctx, exp, res, mc);
}

void RunLqrPoUnderdamped(Context& ctx) {
  const auto& c = ctx.config;
  const auto problem = LqrFromConfig(c);
  const auto obj = lqr::MakeLqrObjective(problem);
  const int n = obj.dim();
  const auto g = langevin::NoiseFactor::Identity(n);
  const auto ladder = LqrLadder(problem, c.Positive("dynamics.horizon", 50.0));
  auto phi = std::make_shared<const langevin::PhiFunctions>(ladder, c.Real("dynamics.delta", 0.0));
  const auto cfg = langevin::UnderdampedConfig::Scheduled(obj, g, phi);
  const auto model = langevin::BuildUnderdamped(cfg);
  {
    auto out = ctx.Artifact("ladder.csv");
    ladder->WriteCsv(out, langevin::RateSchedule::Constant(1.0), obj.envelope()->mu);
  }
  const auto audit = AuditLadder(obj, *phi, GainProbes(problem, 300, ctx.seed));
  ctx.Check("phi-ladder on the LQR objective", 7,
            audit.gradient_violations + audit.phi_order_violations + audit.slope_violations == 0,
            std::to_string(audit.gradient_violations) + " gradient, " +
                std::to_string(audit.phi_order_violations) + " order and " +
                std::to_string(audit.slope_violations) + " slope violations (" +
                std::to_string(audit.probes_used) + " gains, " + std::to_string(audit.levels) +
                " levels)");

  const auto v3 = langevin::ScheduledMomentumSize(cfg);
  const auto mc = McFromConfig(c, 100, 1e-3, 5.0);
  auto exp = MakeExperiment(ctx, model, v3, c.Reals("noise.intensities", {0.01, 0.1}),
                            InitialState(c, model.equilibrium()), mc);
  exp.keep_paths = true;
  const auto res = nssmc::RunExperiment(exp);
  double min_rate = std::numeric_limits<double>::infinity();
  std::size_t visited = 0;
  for (const auto& run : res.runs) {
    ctx.Note("intensity " + Num(run.intensity) + ": blowup_fraction " + Num(run.blowup_fraction));
    for (const auto& p : run.ensemble->paths) {
      for (std::size_t j = 0; j < p.size(); ++j) {
        const Vec x = p.states.col(static_cast<Eigen::Index>(j));
        if (!model.InDomain(x)) continue;
        min_rate = std::min(min_rate, cfg.Rate(x.head(n)));
        ++visited;
      }
    }
  }
  ctx.Check("scheduled rate eta >= 1 along paths", 0, visited > 0 && min_rate >= 1.0,
            "min eta " + Num(min_rate) + " over " + std::to_string(visited) + " recorded states");
  WriteMcArtifacts(ctx, exp, res, mc);

  std::vector<Vec> states;
  rng::CounterStream s(ctx.seed, 3);
  for (const Vec& k : GainProbes(problem, 200, ctx.seed + 1)) {
    Vec x(2 * n);
    x.head(n) = k;
    for (int i = 0; i < n; ++i) x[n + i] = s.Normal();
    states.push_back(x);
  }
  const double gap = MaxGeneratorGap(v3, model, states, 0.7 * Mat::Identity(n, n));
  ctx.Check("analytic vs finite-difference generator of V3", 2, gap <= 1e-4,
            "max relative gap " + Num(gap) + " (tol 1e-4)");
}

void RunGainSweep(Context& ctx) {
  const auto& c = ctx.config;
  const auto shapes = ParseInstances(c);
  const std::uint64_t base = c.Seed("problem.seed", 40);
  const std::size_t count = c.Count("mc.probes", 100);
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto [n, m] = shapes[i];
    const auto problem = RandomLqrProblem(n, m, base + i);
    const auto& prof = problem.profile();
    const auto gains = lqr::RandomStabilizingGains(problem, count, ctx.seed + i);
    std::size_t bad = 0;
    double min_slack = std::numeric_limits<double>::infinity();
    for (const Mat& k : gains) {
      const auto gp = lqr::EvaluateGain(problem, k);
      const double slack = gp.grad.norm() - lqr::Mu5(prof, std::max(0.0, gp.cost - prof.j2_star));
      min_slack = std::min(min_slack, slack);
      if (slack < -1e-12) ++bad;
    }
    const std::string tag = "n" + std::to_string(n) + "m" + std::to_string(m);
    ctx.Check("K-PL inequality on instance " + tag, 5, bad == 0 && gains.size() == count,
              std::to_string(bad) + " violations over " + std::to_string(gains.size()) +
                  " stabilising gains, min slack " + Num(min_slack) + ", b1 = " + Num(prof.b1) +
                  ", b2 = " + Num(prof.b2));
    {
      auto out = ctx.Artifact("gain_sweep_" + tag + ".csv");
      lqr::WriteGainSweepCsv(problem, gains, out);
    }
    {
      auto out = ctx.Artifact("instance_" + tag + ".txt");
      lqr::WriteMatrices({{"A", problem.a()},
                          {"F", problem.f()},
                          {"Q", problem.q()},
                          {"R", problem.r()},
                          {"Kstar", prof.k_star}},
                         out);
    }
  }
}

void RunLqrScalar(Context& ctx) {
  const auto& c = ctx.config;
  const double a = c.Real("problem.a", 1.0);
  const double f = c.Real("problem.f", 1.0);
  const double q = c.Positive("problem.q", 1.0);
  const double r = c.Positive("problem.r", 1.0);
  if (f == 0.0) throw ConfigurationError(c.source() + ": problem.f must be nonzero");
  const auto scalar = [](double v) { return Mat::Constant(1, 1, v); };
  const lqr::LqrProblem problem(scalar(a), scalar(f), scalar(q), scalar(r),
                                scalar((std::abs(a) + 1) / f));
  const double p_oracle = r * (a + std::sqrt(a * a + f * f * q / r)) / (f * f);
  const double k_oracle = f * p_oracle / r;
  const auto& prof = problem.profile();
  const double j_err = std::abs(prof.j2_star - p_oracle);
  const double k_err = std::abs(prof.k_star(0, 0) - k_oracle);
  ctx.Check("optimal cost J2*", 4, j_err <= 1e-8,
            "J2* = " + sde::FormatDouble(prof.j2_star) + ", closed form " +
                sde::FormatDouble(p_oracle) + ", error " + Num(j_err) + " (tol 1e-8)");
  ctx.Check("optimal gain K*", 4, k_err <= 1e-8,
            "K* = " + sde::FormatDouble(prof.k_star(0, 0)) + ", closed form " +
                sde::FormatDouble(k_oracle) + ", error " + Num(k_err) + " (tol 1e-8)");
  {
    auto out = ctx.Artifact("riccati.txt");
    lqr::WriteMatrices({{"Kstar", prof.k_star}, {"Pstar", prof.p_star}}, out);
  }

  rng::CounterStream s(ctx.seed, 4);
  double worst = 0.0;
  {
    auto out = ctx.Artifact("lyapunov_residuals.csv");
    out << "instance,n,residual,p_norm\n";
    for (int trial = 0; trial < 100; ++trial) {
      const int n = 1 + trial % 10;
      Mat a0(n, n), g(n, n);
      for (Eigen::Index i = 0; i < a0.size(); ++i) a0.data()[i] = s.Normal();
      for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = s.Normal();
      const Mat acl = a0 - (lqr::SpectralAbscissa(a0) + 0.5) * Mat::Identity(n, n);
      const Mat m = g + g.transpose();
      const Mat p = lqr::SolveLyapunov(acl, m);
      const double res = (acl.transpose() * p + p * acl + m).norm();
      worst = std::max(worst, res);
      out << trial << "," << n << "," << sde::FormatDouble(res) << ","
          << sde::FormatDouble(p.norm()) << "\n";
    }
  }
  ctx.Check("Lyapunov residuals", 4, worst <= 1e-10,
            "max ||A'P + PA + M||_F = " + Num(worst) + " over 100 instances, n <= 10 (tol 1e-10)");

  const auto random = RandomLqrProblem(2, 1, ctx.seed + 21);
  double worst_grad = 0.0;
  {
    auto out = ctx.Artifact("gradient_check.csv");
    out << "gain_id,grad_norm,relative_gap\n";
    const auto gains = lqr::RandomStabilizingGains(random, 20, ctx.seed + 3);
    for (std::size_t id = 0; id < gains.size(); ++id) {
      const Mat& k = gains[id];
      const Mat grad = lqr::LqrGradient(random, k);
      Mat fd(grad.rows(), grad.cols());
      const double h = 1e-6;
      for (Eigen::Index i = 0; i < k.size(); ++i) {
        Mat kp = k, km = k;
        kp.data()[i] += h;
        km.data()[i] -= h;
        fd.data()[i] = (lqr::LqrCost(random, kp) - lqr::LqrCost(random, km)) / (2 * h);
      }
      const double gap = (grad - fd).norm() / std::max(1.0, grad.norm());
      worst_grad = std::max(worst_grad, gap);
      out << id << "," << sde::FormatDouble(grad.norm()) << "," << sde::FormatDouble(gap) << "\n";
    }
    ctx.Check("gradient vs central differences", 4, worst_grad <= 1e-5 && gains.size() == 20,
              "max relative gap " + Num(worst_grad) + " over " + std::to_string(gains.size()) +
                  " stabilising gains (tol 1e-5)");
  }
}

}  // namespace nsslab::experiments::internal
