#include "experiments/common.h"

namespace nsslab::experiments::internal {
namespace {

void LadderCheck(Context& ctx, const std::string& label, const LadderAudit& audit) {
  ctx.Check("phi-ladder on " + label, 7,
            audit.gradient_violations + audit.phi_order_violations + audit.slope_violations == 0 &&
                audit.probes_used > 0,
            std::to_string(audit.gradient_violations) + " gradient, " +
                std::to_string(audit.phi_order_violations) + " order and " +
                std::to_string(audit.slope_violations) + " slope violations (" +
                std::to_string(audit.probes_used) + " probes, " + std::to_string(audit.levels) +
                " levels)");
}

void GapCheck(Context& ctx, const std::string& label, double gap) {
  ctx.Check("analytic vs finite-difference generator of " + label, 2, gap <= 1e-4,
            "max relative gap " + Num(gap) + " (tol 1e-4)");
}

}  // namespace

void RunCertifyDissipation(Context& ctx) {
  const auto& c = ctx.config;
  const std::size_t probes = c.Count("mc.probes", 1000);
  const Mat a = c.Matrix("problem.a", Mat::Identity(2, 2));
  const auto quad = QuadraticFromConfig(c, a);
  const int n = quad.dim();
  const auto g = langevin::NoiseFactor::Identity(n);
  const Mat theta = 0.7 * Mat::Identity(n, n);

  // Quadratic benchmark: gradient flow, V2 in constant mode, V3 in scheduled mode.
  const langevin::OverdampedConfig quad_over{quad, g};
  const auto quad_over_model = langevin::BuildOverdamped(quad_over);
  CertifyTriple(ctx, langevin::GradientFlowTriple(quad_over), quad_over_model,
                "quadratic_gradient_flow", 3, probes);
  const auto quad_v2 = langevin::UnderdampedConfig::Constant(quad, g, c.Positive("dynamics.eta", 1.0),
                                                             c.Positive("dynamics.c", 1.0));
  const auto quad_v2_model = langevin::BuildUnderdamped(quad_v2);
  CertifyTriple(ctx, langevin::MomentumTriple(quad_v2), quad_v2_model, "quadratic_v2", 3, probes);
  const auto quad_phi = QuadraticPhi(a, 2000.0, c.Real("dynamics.delta", 0.0));
  const auto quad_v3 = langevin::UnderdampedConfig::Scheduled(quad, g, quad_phi);
  const auto quad_v3_model = langevin::BuildUnderdamped(quad_v3);
  CertifyTriple(ctx, langevin::ScheduledMomentumTriple(quad_v3), quad_v3_model, "quadratic_v3", 3,
                probes);

  // Logistic regression: gradient flow under the sampled K-PL envelope.
  const auto logistic = LogisticFromConfig(ctx);
  const int nl = logistic.dim();
  const auto gl = langevin::NoiseFactor::Identity(nl);
  const langevin::OverdampedConfig log_over{logistic, gl};
  const auto log_over_model = langevin::BuildOverdamped(log_over);
  CertifyTriple(ctx, langevin::GradientFlowTriple(log_over), log_over_model,
                "logistic_gradient_flow", 3, probes);

  langevin::LadderOptions lopts;
  lopts.samples_per_level = 500;
  lopts.seed = ctx.seed;
  lopts.threads = ctx.threads;
  auto log_ladder = std::make_shared<const langevin::SmoothnessLadder>(
      langevin::SmoothnessLadder::Sample(logistic, gl, langevin::LadderGrid(40.0, 30), lopts));
  const langevin::PhiFunctions log_phi(log_ladder);
  {
    auto out = ctx.Artifact("ladder_logistic.csv");
    log_ladder->WriteCsv(out, log_over.eta, logistic.envelope()->mu);
  }

  // Scalar LQR.
  const auto problem = LqrFromConfig(c);
  const auto lqr_obj = lqr::MakeLqrObjective(problem);
  const auto lqr_ladder = LqrLadder(problem, 50.0);
  const langevin::PhiFunctions lqr_phi(lqr_ladder);
  {
    auto out = ctx.Artifact("ladder_lqr.csv");
    lqr_ladder->WriteCsv(out, langevin::RateSchedule::Constant(1.0), lqr_obj.envelope()->mu);
  }
  std::vector<Vec> gains;
  for (const Mat& k : lqr::RandomStabilizingGains(problem, 300, ctx.seed, {0.05, 0.3, 1.0, 3.0}))
    gains.push_back(lqr::VecGain(k));

  LadderCheck(ctx, "the quadratic",
              AuditLadder(quad, *QuadraticPhi(a, 100.0),
                          GaussianCloud(quad.minimizer(), {0.1, 1, 5}, 300, ctx.seed + 31)));
  LadderCheck(ctx, "logistic regression",
              AuditLadder(logistic, log_phi,
                          GaussianCloud(logistic.minimizer(), {0.1, 1, 5}, 300, ctx.seed + 32)));
  LadderCheck(ctx, "the scalar LQR instance", AuditLadder(lqr_obj, lqr_phi, gains));

  // Analytic vs finite-difference generators of every shipped size function.
  const auto quad_states = lyapcert::DefaultStateSamples(quad_over_model, ctx.seed + 41, probes);
  const auto quad_joint = lyapcert::DefaultStateSamples(quad_v2_model, ctx.seed + 42, probes);
  GapCheck(ctx, "J - J* (quadratic)",
           MaxGeneratorGap(langevin::SuboptimalitySize(quad), quad_over_model, quad_states, theta));
  GapCheck(ctx, "V2 (quadratic)",
           MaxGeneratorGap(langevin::MomentumSize(quad_v2), quad_v2_model, quad_joint, theta));
  GapCheck(ctx, "V3 (quadratic)",
           MaxGeneratorGap(langevin::ScheduledMomentumSize(quad_v3), quad_v3_model, quad_joint,
                           theta));

  const Mat theta_l = 0.7 * Mat::Identity(nl, nl);
  const auto log_states = lyapcert::DefaultStateSamples(log_over_model, ctx.seed + 43, probes);
  const auto log_v2 = langevin::UnderdampedConfig::Constant(logistic, gl, 1.0, 1.0);
  const auto log_v2_model = langevin::BuildUnderdamped(log_v2);
  const auto log_v3 = langevin::UnderdampedConfig::Scheduled(
      logistic, gl, std::make_shared<const langevin::PhiFunctions>(log_ladder));
  const auto log_v3_model = langevin::BuildUnderdamped(log_v3);
  const auto log_joint = lyapcert::DefaultStateSamples(log_v2_model, ctx.seed + 44, probes);
  GapCheck(ctx, "J - J* (logistic)",
           MaxGeneratorGap(langevin::SuboptimalitySize(logistic), log_over_model, log_states,
                           theta_l));
  GapCheck(ctx, "V2 (logistic)",
           MaxGeneratorGap(langevin::MomentumSize(log_v2), log_v2_model, log_joint, theta_l));
  GapCheck(ctx, "V3 (logistic)",
           MaxGeneratorGap(langevin::ScheduledMomentumSize(log_v3), log_v3_model, log_joint,
                           theta_l));

  const langevin::OverdampedConfig lqr_over{lqr_obj, langevin::NoiseFactor::Identity(lqr_obj.dim())};
  GapCheck(ctx, "J - J* (LQR)",
           MaxGeneratorGap(langevin::SuboptimalitySize(lqr_obj), langevin::BuildOverdamped(lqr_over),
                           gains, 0.7 * Mat::Identity(lqr_obj.dim(), lqr_obj.dim())));
}

}  // namespace nsslab::experiments::internal
