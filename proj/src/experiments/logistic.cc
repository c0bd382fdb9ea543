#include <cmath>
#include <limits>

#include "experiments/common.h"
#include "nsslab/rng.h"

namespace nsslab::experiments::internal {
namespace {

objectives::LogisticModel Hand(const std::vector<std::vector<double>>& cols,
                               const std::vector<double>& labels) {
  const auto n = static_cast<Eigen::Index>(cols.front().size());
  Mat x(n, static_cast<Eigen::Index>(cols.size()));
  Vec y(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    for (Eigen::Index i = 0; i < n; ++i)
      x(i, static_cast<Eigen::Index>(k)) = cols[k][static_cast<std::size_t>(i)];
    y[static_cast<Eigen::Index>(k)] = labels[k];
  }
  return objectives::LogisticModel(x, y);
}

void WriteEnvelope(Context& ctx, const objectives::PLEnvelope& env) {
  auto out = ctx.Artifact("envelope.csv");
  objectives::WriteEnvelopeCsv(env, objectives::GeometricGrid(1e-6, 1e2, 200), out);
}

}  // namespace

void RunLogisticOverdamped(Context& ctx) {
  const auto& c = ctx.config;
  objectives::LogisticModel data(Mat::Zero(1, 1), Vec::Zero(1));
  const auto obj = LogisticFromConfig(ctx, &data);
  const int n = obj.dim();
  const auto sep = objectives::CheckNonseparable(data);
  ctx.Check("dataset is nonseparable", 0, !sep.separable,
            "optimal signed margin " + Num(sep.margin));
  ctx.Note("envelope: " + obj.envelope()->construction + " (" +
           objectives::ToString(obj.envelope()->kind) + ")");
  WriteEnvelope(ctx, *obj.envelope());

  const langevin::OverdampedConfig cfg{obj, langevin::NoiseFactor::Identity(n)};
  const auto model = langevin::BuildOverdamped(cfg);
  const std::size_t probes = c.Count("mc.probes", 1000);
  CertifyTriple(ctx, langevin::GradientFlowTriple(cfg), model, "gradient_flow", 3, probes);

  langevin::LadderOptions lopts;
  lopts.samples_per_level = 500;
  lopts.seed = ctx.seed;
  lopts.threads = ctx.threads;
  const auto ladder = langevin::SmoothnessLadder::Sample(
      obj, cfg.g, langevin::LadderGrid(c.Positive("dynamics.horizon", 60.0), 30), lopts);
  {
    auto out = ctx.Artifact("ladder.csv");
    ladder.WriteCsv(out, cfg.eta, obj.envelope()->mu);
  }
  const auto states = GaussianCloud(obj.minimizer(), {0.1, 1, 10}, 334, ctx.seed + 1);
  rng::CounterStream s(ctx.seed, 2);
  std::size_t global_bad = 0, ladder_bad = 0, ladder_used = 0;
  for (const Vec& z : states) {
    const Mat sigma = 3 * s.Uniform() * Mat::Identity(n, n);
    const auto b = langevin::OverdampedGeneratorBound(cfg, z, sigma);
    if (b.lhs > b.rhs + 1e-8 * (1 + std::abs(b.rhs))) ++global_bad;
    if (obj.Suboptimality(z) > ladder.h_max()) continue;
    ++ladder_used;
    const auto bl = langevin::OverdampedGeneratorBound(cfg, z, sigma, &ladder);
    if (bl.lhs > bl.rhs + 1e-8 * (1 + std::abs(bl.rhs))) ++ladder_bad;
  }
  ctx.Check("generator bound with global L", 0, global_bad == 0,
            std::to_string(global_bad) + " violations of L J <= -eta mu^2 + L K_G^2 s / 2 over " +
                std::to_string(states.size()) + " states");
  ctx.Check("generator bound with the sampled ladder", 0, ladder_bad == 0,
            std::to_string(ladder_bad) + " violations of L J <= -eta mu^2 + Lbar(h) s over " +
                std::to_string(ladder_used) + " states");

  const auto mc = McFromConfig(c, 2000, 1e-2, 10.0);
  auto exp = MakeExperiment(ctx, model, langevin::SuboptimalitySize(obj),
                            c.Reals("noise.intensities", {0.01, 0.04, 0.16}),
                            InitialState(c, obj.minimizer()), mc);
  const auto res = nssmc::RunExperiment(exp);
  bool monotone = true;
  double worst_blowup = 0.0;
  for (std::size_t j = 0; j < res.curve.intensities.size(); ++j) {
    worst_blowup = std::max(worst_blowup, res.curve.blowup_fraction[j]);
    if (j > 0 && res.curve.tail_quantile[j] < res.curve.tail_quantile[j - 1]) monotone = false;
  }
  ctx.Check("gain curve monotone in intensity", 0, monotone,
            "tail quantile " + Num(res.curve.tail_quantile.front()) + " .. " +
                Num(res.curve.tail_quantile.back()));
  ctx.Check("no blow-up", 0, worst_blowup == 0.0,
            "largest blow-up fraction " + Num(worst_blowup));
  WriteMcArtifacts(ctx, exp, res, mc);
}

void RunLogisticUnderdamped(Context& ctx) {
  const auto& c = ctx.config;
  const auto obj = LogisticFromConfig(ctx);
  const int n = obj.dim();
  const auto g = langevin::NoiseFactor::Identity(n);
  langevin::LadderOptions lopts;
  lopts.samples_per_level = 300;
  lopts.seed = ctx.seed;
  lopts.threads = ctx.threads;
  auto ladder = std::make_shared<const langevin::SmoothnessLadder>(langevin::SmoothnessLadder::Sample(
      obj, g, langevin::LadderGrid(c.Positive("dynamics.horizon", 20.0), 30), lopts));
  auto phi = std::make_shared<const langevin::PhiFunctions>(ladder, c.Real("dynamics.delta", 0.0));
  const auto cfg = langevin::UnderdampedConfig::Scheduled(obj, g, phi);
  const auto model = langevin::BuildUnderdamped(cfg);
  {
    auto out = ctx.Artifact("ladder.csv");
    ladder->WriteCsv(out, langevin::RateSchedule::Constant(1.0), obj.envelope()->mu);
  }
  {
    auto out = ctx.Artifact("phi.csv");
    out << "h,phi1,phi2,phi2_prime\n";
    for (double h : objectives::GeometricGrid(1e-3, phi->h_max(), 100))
      out << sde::FormatDouble(h) << "," << sde::FormatDouble(phi->Phi1(h)) << ","
          << sde::FormatDouble(phi->Phi2(h)) << "," << sde::FormatDouble(phi->Phi2Prime(h))
          << "\n";
  }

  const auto v3 = langevin::ScheduledMomentumSize(cfg);
  Vec x0 = model.equilibrium();
  x0 = InitialState(c, x0);
  const auto mc = McFromConfig(c, 200, 1e-3, 5.0);
  auto exp = MakeExperiment(ctx, model, v3, c.Reals("noise.intensities", {0.0625, 0.25}), x0, mc);
  exp.keep_paths = true;
  const auto res = nssmc::RunExperiment(exp);
  double min_rate = std::numeric_limits<double>::infinity();
  std::size_t visited = 0;
  for (const auto& run : res.runs) {
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

  const auto states = lyapcert::DefaultStateSamples(model, ctx.seed, c.Count("mc.probes", 1000));
  const double gap = MaxGeneratorGap(v3, model, states, 0.7 * Mat::Identity(n, n));
  ctx.Check("analytic vs finite-difference generator of V3", 2, gap <= 1e-4,
            "max relative gap " + Num(gap) + " (tol 1e-4)");
}

void RunPlEnvelope(Context& ctx) {
  const auto& c = ctx.config;
  objectives::LogisticModel data(Mat::Zero(1, 1), Vec::Zero(1));
  const auto obj = LogisticFromConfig(ctx, &data);
  const int n = obj.dim();
  const std::size_t count = c.Count("mc.probes", 1000);
  const int per_scale = static_cast<int>((count + 3) / 4);
  const double l = objectives::LogisticLipschitzConstant(data);

  const auto probes =
      GaussianCloud(obj.minimizer(), {0.1, 1, 10, 100}, per_scale, ctx.seed + 11);
  double worst_hessian = -std::numeric_limits<double>::infinity();
  for (const Vec& th : probes)
    worst_hessian = std::max(worst_hessian, SymmetricSpectralNorm(objectives::LogisticHessian(data, th)) - l);
  ctx.Check("Hessian norm bound", 6, worst_hessian <= 1e-9,
            "max ||H|| - ||XX'||/(4N) = " + Num(worst_hessian) + " over " +
                std::to_string(probes.size()) + " probes (tol 1e-9)");

  std::vector<Vec> grad_points(probes.begin(), probes.begin() + static_cast<long>(probes.size() / 2));
  rng::CounterStream s(ctx.seed, 12);
  while (grad_points.size() < probes.size()) {
    Vec d(n);
    for (int i = 0; i < n; ++i) d[i] = s.Normal();
    grad_points.push_back(1e3 * d.normalized());
  }
  const auto gb = objectives::GradientBoundCheck(data, grad_points);
  ctx.Check("gradient norm bound", 6, gb.holds,
            "max ||grad J|| / (||X||/sqrt N) = " + Num(gb.max_ratio) + " over " +
                std::to_string(grad_points.size()) + " points, half on ||theta|| = 1e3 rays");

  struct Instance {
    std::string name;
    objectives::LogisticModel model;
    bool separable;
  };
  const std::vector<Instance> hand{
      {"separable pair", Hand({{1.0}, {-1.0}}, {1, 0}), true},
      {"duplicate-x pair", Hand({{1.0}, {1.0}}, {1, 0}), false},
      {"XOR", Hand({{1, 1}, {-1, -1}, {1, -1}, {-1, 1}}, {1, 1, 0, 0}), false},
  };
  for (const auto& inst : hand) {
    const auto rep = objectives::CheckNonseparable(inst.model);
    ctx.Check("separability of " + inst.name, 6, rep.separable == inst.separable,
              std::string(rep.separable ? "separable" : "nonseparable") + ", expected " +
                  (inst.separable ? "separable" : "nonseparable"));
  }
  const auto sep = objectives::CheckNonseparable(data);
  ctx.Check("dataset is nonseparable", 6, !sep.separable,
            "optimal signed margin " + Num(sep.margin));

  const auto& env = *obj.envelope();
  ctx.Note("envelope: " + env.construction + " (" + objectives::ToString(env.kind) + ")");
  const auto held_out =
      GaussianCloud(obj.minimizer(), {0.1, 1, 10, 100}, per_scale, ctx.seed + 13);
  const auto pl = objectives::VerifyPl(obj, env, held_out);
  ctx.Check("K-PL envelope on held-out points", 6, pl.violations.empty(),
            std::to_string(pl.violations.size()) + " violations over " +
                std::to_string(pl.checked) + " points, min slack " + Num(pl.min_slack));
  WriteEnvelope(ctx, env);
}

}  // namespace nsslab::experiments::internal
