#include "experiments/common.h"

#include <algorithm>
#include <cmath>

#include "nsslab/errors.h"
#include "nsslab/rng.h"

namespace nsslab::experiments::internal {

void Context::Check(const std::string& name, int criterion, bool pass, const std::string& detail) {
  report.checks.push_back({name, criterion, pass, detail});
}

void Context::Note(const std::string& note) { report.notes.push_back(note); }

std::ofstream Context::Artifact(const std::string& file) {
  std::ofstream out(out_dir / file);
  if (!out) throw ConfigurationError("cannot write " + (out_dir / file).string());
  report.artifacts.push_back(file);
  return out;
}

std::string Num(double v) {
  std::ostringstream s;
  s.precision(6);
  s << v;
  return s.str();
}

objectives::Objective QuadraticFromConfig(const Config& c, const Mat& fallback_a) {
  const Mat a = c.Matrix("problem.a", fallback_a);
  if (a.rows() != a.cols()) throw ConfigurationError(c.source() + ": problem.a must be square");
  Vec b = Vec::Zero(a.rows());
  if (c.Has("problem.b")) {
    const auto entries = c.Reals("problem.b", {});
    if (static_cast<Eigen::Index>(entries.size()) != a.rows())
      throw ConfigurationError(c.source() + ": problem.b must have one entry per row of a");
    for (std::size_t i = 0; i < entries.size(); ++i) b[static_cast<Eigen::Index>(i)] = entries[i];
  }
  return objectives::QuadraticObjective(a, b);
}

objectives::Objective LogisticFromConfig(const Context& ctx,
                                         objectives::LogisticModel* model_out) {
  const auto model = objectives::ReadLogisticCsv(ctx.config.File("problem.dataset").string());
  if (model_out) *model_out = model;
  auto obj = objectives::MakeLogisticObjective(model);
  objectives::EnvelopeOptions opts;
  opts.seed = ctx.seed;
  opts.n_dirs = static_cast<int>(ctx.config.Count("problem.envelope_dirs", 256));
  opts.threads = ctx.threads;
  obj.set_envelope(objectives::EstimateKplEnvelope(obj, obj.minimizer(), opts));
  return obj;
}

lqr::LqrProblem LqrFromConfig(const Config& c) {
  return lqr::ReadLqrProblem(c.File("problem.matrices").string());
}

std::shared_ptr<const langevin::SmoothnessLadder> LqrLadder(const lqr::LqrProblem& problem,
                                                            double h_max) {
  return std::make_shared<const langevin::SmoothnessLadder>(langevin::SmoothnessLadder::Analytic(
      [problem](double h) { return lqr::SmoothnessL3(problem.profile(), problem, h); },
      std::sqrt(static_cast<double>(problem.m() * problem.n())), langevin::LadderGrid(h_max),
      "sublevel Lipschitz profile"));
}

std::shared_ptr<const langevin::PhiFunctions> QuadraticPhi(const Mat& a, double h_max,
                                                           double delta) {
  auto ladder = std::make_shared<const langevin::SmoothnessLadder>(
      langevin::SmoothnessLadder::Analytic([l = SymmetricSpectralNorm(a)](double) { return l; },
                                           std::sqrt(static_cast<double>(a.rows())),
                                           langevin::LadderGrid(h_max), "constant Hessian"));
  return std::make_shared<const langevin::PhiFunctions>(ladder, delta);
}

Vec InitialState(const Config& c, const Vec& fallback) {
  if (!c.Has("dynamics.x0")) return fallback;
  const auto xs = c.Reals("dynamics.x0", {});
  if (static_cast<Eigen::Index>(xs.size()) != fallback.size())
    throw ConfigurationError(c.source() + ": dynamics.x0 must have " +
                             std::to_string(fallback.size()) + " entries");
  Vec x(fallback.size());
  for (std::size_t i = 0; i < xs.size(); ++i) x[static_cast<Eigen::Index>(i)] = xs[i];
  return x;
}

McSettings McFromConfig(const Config& c, std::size_t paths, double dt, double horizon) {
  McSettings mc{c.Count("mc.paths", paths), c.Positive("mc.dt", dt),
                c.Positive("mc.horizon", horizon), c.Positive("mc.epsilon", 0.05),
                c.Has("mc.export_paths") ? c.Count("mc.export_paths", 1) : 10};
  if (mc.epsilon >= 1.0) throw ConfigurationError(c.source() + ": mc.epsilon must be below 1");
  return mc;
}

nssmc::NssExperiment MakeExperiment(const Context& ctx, sde::DiffusionModel model,
                                    lyapcert::SizeFunction v,
                                    const std::vector<double>& intensities, const Vec& x0,
                                    const McSettings& mc) {
  const int m = model.noise_dim();
  nssmc::NssExperiment exp{std::move(model), std::move(v), nssmc::ConstantFamily(m, intensities),
                           {x0}};
  exp.n_paths = mc.paths;
  exp.dt = mc.dt;
  exp.horizon = mc.horizon;
  exp.master_seed = ctx.seed;
  exp.epsilon = mc.epsilon;
  exp.threads = ctx.threads;
  return exp;
}

void WriteMcArtifacts(Context& ctx, const nssmc::NssExperiment& exp,
                      const nssmc::ExperimentResult& res, const McSettings& mc,
                      const std::string& prefix) {
  {
    auto out = ctx.Artifact(prefix + "gain_curve.csv");
    nssmc::WriteGainCurveCsv(res.curve, out);
  }
  {
    auto out = ctx.Artifact(prefix + "quantiles.csv");
    out << "t";
    for (const auto& run : res.runs) out << ",q_" << sde::FormatDouble(run.intensity);
    out << "\n";
    const auto& times = res.runs.front().times;
    for (std::size_t j = 0; j < times.size(); ++j) {
      out << sde::FormatDouble(times[j]);
      for (const auto& run : res.runs) out << "," << sde::FormatDouble(run.quantile_by_time[j]);
      out << "\n";
    }
  }
  if (mc.export_paths > 0) {
    sde::SimulationOptions opts;
    opts.record_stride = std::max<std::size_t>(1, sde::StepCount(mc.dt, mc.horizon) / 500);
    const auto ens =
        sde::SimulateEnsemble(exp.dynamics, exp.schedules.back(), exp.x0s, mc.dt, mc.horizon,
                              mc.export_paths, exp.master_seed, ctx.threads, opts);
    auto out = ctx.Artifact(prefix + "ensemble.csv");
    sde::WriteEnsembleCsv(ens, out);
  }
}

std::size_t CertifyTriple(Context& ctx, const langevin::CertificateTriple& triple,
                          const sde::DiffusionModel& model, const std::string& tag,
                          int criterion, std::size_t states) {
  const auto samples = lyapcert::DefaultStateSamples(model, ctx.seed, states);
  const auto thetas = lyapcert::DefaultThetaSamples(model.noise_dim(), triple.cert.d());
  const auto checked =
      lyapcert::CheckDissipation(triple.v, model, triple.cert, samples, thetas,
                                 lyapcert::kDefaultDissipationTolerance, ctx.threads);
  {
    auto out = ctx.Artifact("violations_" + tag + ".csv");
    lyapcert::WriteViolationsCsv(checked, out);
  }
  {
    auto out = ctx.Artifact("certificate_" + tag + ".txt");
    out << triple.statement << "\n" << lyapcert::SummaryText(checked, tag);
  }
  const std::size_t bad = checked.violations.size();
  ctx.Check("certificate " + tag, criterion, bad == 0,
            std::to_string(bad) + " violations over " + std::to_string(checked.pairs_checked) +
                " pairs (" + lyapcert::ToString(triple.cert.kind()) + ", tol 1e-8)");
  return bad;
}

double MaxGeneratorGap(const lyapcert::SizeFunction& v, const sde::DiffusionModel& model,
                       const std::vector<Vec>& probes, const Mat& theta) {
  double worst = 0.0;
  for (const Vec& x : probes) {
    if (!model.InDomain(x)) continue;
    worst = std::max(worst, lyapcert::GeneratorModeGap(v, model, x, theta));
  }
  return worst;
}

LadderAudit AuditLadder(const objectives::Objective& obj, const langevin::PhiFunctions& phi,
                        const std::vector<Vec>& probes) {
  LadderAudit audit;
  for (double h : objectives::GeometricGrid(1e-3, phi.h_max(), 40)) {
    ++audit.levels;
    if (phi.Phi2(h) < phi.Phi1(h) * (1 - 1e-12)) ++audit.phi_order_violations;
    if (phi.Phi2Prime(h) < (2 * phi.ladder().Lbar2(h) + 2.5) * (1 - 1e-9))
      ++audit.slope_violations;
  }
  for (const Vec& z : probes) {
    if (!obj.InDomain(z)) continue;
    const double h = std::max(0.0, obj.Suboptimality(z));
    if (h > phi.h_max()) continue;
    ++audit.probes_used;
    if (obj.Gradient(z).squaredNorm() > phi.Phi1(h) * (1 + 1e-9) + 1e-14)
      ++audit.gradient_violations;
  }
  return audit;
}

std::vector<Vec> GaussianCloud(const Vec& center, const std::vector<double>& scales,
                               int per_scale, std::uint64_t seed) {
  rng::CounterStream s(seed);
  std::vector<Vec> out;
  for (double scale : scales) {
    for (int k = 0; k < per_scale; ++k) {
      Vec p(center.size());
      for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = center[i] + scale * s.Normal();
      out.push_back(p);
    }
  }
  return out;
}

namespace {

Mat Gaussian(int rows, int cols, rng::CounterStream& s) {
  Mat x(rows, cols);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = s.Normal();
  return x;
}

}  // namespace

lqr::LqrProblem RandomLqrProblem(int n, int m, std::uint64_t seed) {
  rng::CounterStream s(seed);
  const Mat a0 = Gaussian(n, n, s);
  const Mat a = a0 - (lqr::SpectralAbscissa(a0) + 0.5) * Mat::Identity(n, n);
  const Mat f = Gaussian(n, m, s);
  const Mat bq = Gaussian(n, n, s);
  const Mat br = Gaussian(m, m, s);
  return lqr::LqrProblem(a, f, bq.transpose() * bq / n + Mat::Identity(n, n),
                         br.transpose() * br / m + Mat::Identity(m, m));
}

}  // namespace nsslab::experiments::internal
