#include "nsslab/nssmc.h"

#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "nsslab/errors.h"
#include "nsslab/langevin.h"
#include "nsslab/lqr.h"

namespace nsslab::nssmc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

objectives::Objective Quad1() {
  return objectives::QuadraticObjective(Mat::Identity(1, 1), Vec::Zero(1));
}

NssExperiment OuExperiment(const std::vector<double>& intensities, double x0, std::size_t n,
                           double dt, double horizon) {
  const auto obj = Quad1();
  NssExperiment exp{langevin::BuildOverdamped({obj, langevin::NoiseFactor::Identity(1)}),
                    langevin::SuboptimalitySize(obj), ConstantFamily(1, intensities),
                    {Vec::Constant(1, x0)}};
  exp.n_paths = n;
  exp.dt = dt;
  exp.horizon = horizon;
  exp.master_seed = 2024;
  return exp;
}

TEST(QuantileTest, Examples) {
  EXPECT_DOUBLE_EQ(Quantile({4, 1, 3, 2}, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(Quantile({4, 1, 3, 2}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(Quantile({4, 1, 3, 2}, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(Quantile({7}, 0.95), 7.0);
  EXPECT_TRUE(std::isnan(Quantile({}, 0.5)));
  EXPECT_THROW(Quantile({1, 2}, 1.5), InvalidArgument);
}

TEST(RunExperimentTest, NoiselessTailVanishes) {
  auto exp = OuExperiment({0.0}, 1.0, 100, 1e-3, 20.0);
  const auto res = RunExperiment(exp);
  EXPECT_LE(res.curve.tail_quantile[0], 1e-6);
  EXPECT_EQ(res.curve.blowup_fraction[0], 0.0);
  EXPECT_EQ(res.runs[0].quantile_by_time.size(), res.runs[0].times.size());
}

TEST(RunExperimentTest, OuGainCurveMatchesChiSquare) {
  const std::vector<double> sigmas{0.1, 0.2, 0.4};
  std::vector<double> intensities;
  for (double s : sigmas) intensities.push_back(s * s);
  auto exp = OuExperiment(intensities, 0.0, 10000, 1e-2, 10.0);
  const auto res = RunExperiment(exp);
  const boost::math::chi_squared chi1(1.0);
  const double factor = boost::math::quantile(chi1, 0.95);
  for (std::size_t j = 0; j < sigmas.size(); ++j) {
    const double expected = sigmas[j] * sigmas[j] / 4 * factor;
    EXPECT_NEAR(res.curve.tail_quantile[j], expected, 0.15 * expected) << sigmas[j];
    EXPECT_NEAR(WindowMean(res.runs[j], 5.0, 10.0), sigmas[j] * sigmas[j] / 4,
                0.05 * sigmas[j] * sigmas[j] / 4);
    if (j > 0) EXPECT_GE(res.curve.tail_quantile[j], res.curve.tail_quantile[j - 1]);
  }
  std::ostringstream csv;
  WriteGainCurveCsv(res.curve, csv);
  EXPECT_EQ(csv.str().substr(0, csv.str().find('\n')), "intensity,tail_quantile,blowup_fraction");
}

TEST(RunExperimentTest, Validation) {
  EXPECT_THROW(RunExperiment(OuExperiment({0.1}, 0.0, 50, 1e-2, 1.0)), InvalidArgument);
  EXPECT_THROW(RunExperiment(OuExperiment({0.2, 0.1}, 0.0, 100, 1e-2, 1.0)), InvalidArgument);
  auto exp = OuExperiment({0.1}, 0.0, 100, 1e-2, 1.0);
  exp.epsilon = 0.0;
  EXPECT_THROW(RunExperiment(exp), InvalidArgument);
  EXPECT_THROW(ConstantFamily(1, {-1.0}), InvalidArgument);
}

TEST(RunExperimentTest, ThreadCountDoesNotChangeResults) {
  auto exp = OuExperiment({0.01, 0.1}, 0.5, 200, 1e-2, 2.0);
  const auto a = RunExperiment(exp);
  exp.threads = 4;
  const auto b = RunExperiment(exp);
  EXPECT_EQ(a.curve.tail_quantile, b.curve.tail_quantile);
  for (std::size_t j = 0; j < a.runs.size(); ++j) {
    EXPECT_EQ(a.runs[j].values, b.runs[j].values);
    EXPECT_EQ(a.runs[j].quantile_by_time, b.runs[j].quantile_by_time);
  }
}

TEST(BetaFitTest, RecoversQuadraticDecay) {
  const auto obj = Quad1();
  const auto model = langevin::BuildOverdamped({obj, langevin::NoiseFactor::Identity(1)});
  const auto fit = FitBeta(model, langevin::SuboptimalitySize(obj),
                           {Vec::Constant(1, 1.0), Vec::Constant(1, -3.0)}, 1e-3, 5.0);
  EXPECT_NEAR(fit.rate, -2 * std::log(1 - 1e-3) / 1e-3, 1e-9);
  EXPECT_DOUBLE_EQ(fit(2.0, 0.0), 2.2);
}

TEST(ExceedanceTest, TrivialBounds) {
  const auto res = RunExperiment(OuExperiment({0.04}, 1.0, 500, 1e-2, 5.0));
  const auto& run = res.runs[0];
  double vmax = 0.0;
  for (const auto& row : run.values)
    for (double v : row) vmax = std::max(vmax, v);
  EXPECT_EQ(ExceedanceFraction(run, [&](double, double) { return vmax + 1; }, 0, 5), 0.0);
  EXPECT_EQ(ExceedanceFraction(run, [](double, double) { return 0.0; }, 2.5, 5), 1.0);
  EXPECT_EQ(ExceedanceFraction(run, [](double, double) { return 0.0; }, 2.5, 5,
                               ExceedanceMode::kPairs),
            1.0);
}

TEST(ExceedanceTest, AntitoneInTheBound) {
  const auto res = RunExperiment(OuExperiment({0.04}, 1.0, 500, 1e-2, 5.0));
  double previous = 1.0;
  for (double level : {0.0, 0.005, 0.01, 0.02, 0.05, 0.1, 1.0}) {
    for (auto mode : {ExceedanceMode::kPathSupremum, ExceedanceMode::kPairs}) {
      const double f = ExceedanceFraction(
          res.runs[0], [&](double, double) { return level; }, 2.5, 5.0, mode);
      EXPECT_GE(f, 0.0);
      EXPECT_LE(f, 1.0);
    }
    const double f = ExceedanceFraction(res.runs[0], [&](double, double) { return level; }, 2.5,
                                        5.0);
    EXPECT_LE(f, previous);
    previous = f;
  }
}

TEST(ExceedanceTest, OuBoundWithCalibratedGain) {
  auto exp = OuExperiment({0.01, 0.04, 0.16}, 1.0, 10000, 1e-2, 10.0);
  const auto res = RunExperiment(exp);
  const auto beta = FitBeta(exp.dynamics, exp.v, exp.x0s, exp.dt, exp.horizon);
  for (const auto& run : res.runs) {
    const double s = run.intensity;
    const double tail = ExceedanceFraction(
        run, [&](double v0, double t) { return beta(v0, t) + 3.0 * s; }, 5.0, 10.0);
    EXPECT_LE(tail, 0.05) << s;
    const double full = ExceedanceFraction(
        run, [&](double v0, double t) { return v0 * std::exp(-t) + 4.0 * s; }, 0.0, 10.0);
    EXPECT_LE(full, 0.05) << s;
  }
}

TEST(ExceedanceTest, ExitedPathsCountAsExceeding) {
  ScheduleRun run;
  run.times = {0.0, 1.0, 2.0};
  run.values = {{1.0, 0.5, 0.2}, {1.0}};
  run.status = {sde::PathStatus::kCompleted, sde::PathStatus::kDomainExit};
  auto bound = [](double, double) { return 10.0; };
  EXPECT_DOUBLE_EQ(ExceedanceFraction(run, bound, 0.0, 2.0), 0.5);
  EXPECT_DOUBLE_EQ(ExceedanceFraction(run, bound, 0.0, 0.5), 0.0);
  EXPECT_DOUBLE_EQ(ExceedanceFraction(run, bound, 0.0, 2.0, ExceedanceMode::kPairs), 2.0 / 6.0);
}

TEST(OnsetScanTest, Validation) {
  GainCurve one{{1.0}, {0.1}, {0.0}};
  EXPECT_THROW(ScnssThresholdScan(one), InvalidArgument);
  GainCurve narrow{{1.0, 10.0}, {0.1, 1.0}, {0.0, 0.0}};
  EXPECT_THROW(ScnssThresholdScan(narrow), InvalidArgument);
}

TEST(OnsetScanTest, Reports) {
  GainCurve stable{{0.1, 1.0, 10.0}, {0.1, 1.0, 10.0}, {0.0, 0.0, 0.0}};
  const auto a = ScnssThresholdScan(stable);
  EXPECT_FALSE(a.onset);
  EXPECT_EQ(*a.stable_below, 10.0);
  EXPECT_EQ(a.Report().rfind("no upper onset detected within grid", 0), 0u);

  GainCurve blowing{{0.1, 1.0, 10.0}, {0.1, 2.0, kInf}, {0.0, 0.2, 0.7}};
  const auto b = ScnssThresholdScan(blowing);
  EXPECT_EQ(*b.onset, 10.0);
  EXPECT_EQ(*b.stable_below, 0.1);
  EXPECT_EQ(b.Report(), "practical onset in (0.1, 10]");

  GainCurve at_start{{0.1, 1.0, 10.0}, {kInf, kInf, kInf}, {0.6, 0.9, 1.0}};
  EXPECT_EQ(ScnssThresholdScan(at_start).Report(), "practical onset in (grid start, 0.1]");
}

std::vector<double> TwoDecades() { return objectives::GeometricGrid(0.1, 10.0, 5); }

TEST(OnsetScanTest, QuadraticHasNoOnset) {
  auto exp = OuExperiment(TwoDecades(), 0.0, 200, 1e-2, 20.0);
  const auto scan = ScnssThresholdScan(RunExperiment(exp).curve);
  EXPECT_FALSE(scan.onset);
  EXPECT_EQ(scan.Report().rfind("no upper onset", 0), 0u);
}

TEST(OnsetScanTest, ScalarLqrBlowsUpWithNoise) {
  const Mat one = Mat::Constant(1, 1, 1.0);
  const lqr::LqrProblem problem(one, one, one, one, Mat::Constant(1, 1, 2.0));
  const auto obj = lqr::MakeLqrObjective(problem);
  NssExperiment exp{langevin::BuildOverdamped({obj, langevin::NoiseFactor::Identity(1)}),
                    langevin::SuboptimalitySize(obj), ConstantFamily(1, TwoDecades()),
                    {obj.minimizer()}};
  exp.n_paths = 400;
  exp.dt = 1e-2;
  exp.horizon = 20.0;
  exp.master_seed = 9;
  const auto res = RunExperiment(exp);
  EXPECT_LE(res.curve.blowup_fraction.front(), 0.01);
  EXPECT_GE(res.curve.blowup_fraction.back(), 0.5);
  for (std::size_t j = 1; j < res.curve.blowup_fraction.size(); ++j)
    EXPECT_GE(res.curve.blowup_fraction[j], res.curve.blowup_fraction[j - 1]);
  const auto scan = ScnssThresholdScan(res.curve);
  ASSERT_TRUE(scan.onset);
  EXPECT_EQ(scan.Report().rfind("practical onset in (", 0), 0u);
}

TEST(InssTest, NoiselessRunHasNoViolations) {
  auto exp = OuExperiment({0.0}, 1.0, 100, 1e-3, 5.0);
  const auto res = RunExperiment(exp);
  const auto beta = FitBeta(exp.dynamics, exp.v, exp.x0s, exp.dt, exp.horizon);
  const auto gamma = compfun::ScalarClassFunction::Linear(4.0, "4s");
  const auto rep = InssAccumulationCheck(res.runs[0], exp.schedules[0], beta, gamma, exp.dt);
  EXPECT_EQ(rep.violation_fraction, 0.0);
  for (double a : rep.accumulated) EXPECT_EQ(a, 0.0);
}

TEST(InssTest, PulseScheduleStaysWithinIntegralBound) {
  auto exp = OuExperiment({0.0}, 0.0, 10000, 1e-3, 5.0);
  const double sigma = 0.3;
  exp.schedules = {sde::CovarianceSchedule::Pulse(1, sigma, 0.0, 1.0)};
  const auto res = RunExperiment(exp);
  const auto beta = FitBeta(exp.dynamics, exp.v, {Vec::Ones(1)}, exp.dt, exp.horizon);
  const auto gamma = compfun::ScalarClassFunction::Linear(4.0, "4s");
  const auto rep = InssAccumulationCheck(res.runs[0], exp.schedules[0], beta, gamma, exp.dt);
  EXPECT_LE(rep.violation_fraction, 0.05);
  EXPECT_NEAR(rep.accumulated.back(), 4.0 * sigma * sigma, 4.0 * sigma * sigma * 2e-3);
  for (std::size_t j = 0; j < res.runs[0].times.size(); ++j)
    if (res.runs[0].times[j] > 1.0)
      EXPECT_NEAR(rep.accumulated[j], rep.accumulated.back(), 1e-12);

  const compfun::ScalarClassFunction zero_gain([](double) { return 0.0; },
                                              compfun::FunctionClass::kPositiveDefinite, "0");
  const auto none = InssAccumulationCheck(res.runs[0], exp.schedules[0], beta, zero_gain, exp.dt);
  EXPECT_GE(none.violation_fraction, 0.99);
}

}  // namespace
}  // namespace nsslab::nssmc
