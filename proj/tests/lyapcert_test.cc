#include "nsslab/lyapcert.h"

#include <gtest/gtest.h>

#include <cmath>

#include "nsslab/errors.h"

namespace nsslab::lyapcert {
namespace {

using compfun::FunctionClass;
using compfun::ScalarClassFunction;
using sde::CovarianceSchedule;
using sde::DiffusionModel;

DiffusionModel GradientFlow(int n) {
  return DiffusionModel(
      n, n, [](const Vec& x, Vec& out) { out = -x; },
      [n](const Vec&, Mat& out) { out = Mat::Identity(n, n); }, sde::Everywhere,
      Vec::Zero(n), "gradient-flow", true);
}

SizeFunction HalfSquaredNorm(bool analytic = true) {
  if (!analytic) return SizeFunction([](const Vec& x) { return 0.5 * x.squaredNorm(); });
  return SizeFunction(
      [](const Vec& x) { return 0.5 * x.squaredNorm(); }, "half-norm",
      [](const Vec& x) { return x; },
      [](const Vec& x) { return Mat::Identity(x.size(), x.size()); });
}

Vec Point(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

TEST(GeneratorTest, QuadraticClosedForm) {
  const int n = 3;
  const double sigma = 0.7;
  const auto model = GradientFlow(n);
  const Vec z = Point({0.3, -1.2, 2.0});
  const double expected = -z.squaredNorm() + 0.5 * n * sigma * sigma;
  const Mat theta = sigma * Mat::Identity(n, n);
  EXPECT_NEAR(GeneratorApply(HalfSquaredNorm(), model, z, theta), expected, 1e-12);
  EXPECT_NEAR(GeneratorApply(HalfSquaredNorm(false), model, z, theta,
                             DerivativeMode::kFiniteDifference),
              expected, 1e-6);
}

TEST(GeneratorTest, NoiselessGradientFlowPairing) {
  // V(x) = x₀⁴ + x₁², f = -∇V.
  SizeFunction v([](const Vec& x) { return std::pow(x[0], 4) + x[1] * x[1]; });
  DiffusionModel model(
      2, 1,
      [](const Vec& x, Vec& out) {
        out[0] = -4 * std::pow(x[0], 3);
        out[1] = -2 * x[1];
      },
      [](const Vec&, Mat& out) { out << 1.0, 1.0; }, sde::Everywhere, Vec::Zero(2),
      "quartic");
  const Vec x = Point({0.8, -0.5});
  const Vec grad = Point({4 * std::pow(0.8, 3), -1.0});
  EXPECT_NEAR(GeneratorApply(v, model, x, Mat::Zero(1, 1)), -grad.squaredNorm(), 1e-6);
}

TEST(GeneratorTest, ZeroAtEquilibriumWithoutNoise) {
  const auto model = GradientFlow(2);
  EXPECT_EQ(GeneratorApply(HalfSquaredNorm(), model, Vec::Zero(2), Mat::Zero(2, 2)), 0.0);
}

TEST(GeneratorTest, RejectsWrongThetaShape) {
  EXPECT_THROW(GeneratorApply(HalfSquaredNorm(), GradientFlow(2), Vec::Zero(2),
                              Mat::Zero(3, 3)),
               InvalidArgument);
}

TEST(GeneratorTest, NonFiniteProbeRaisesNumericalError) {
  SizeFunction v([](const Vec& x) { return x[0] > 1.0 ? NAN : x[0] * x[0]; });
  DiffusionModel model(
      1, 1, [](const Vec& x, Vec& out) { out = -x; },
      [](const Vec&, Mat& out) { out(0, 0) = 1.0; }, sde::Everywhere, Vec::Zero(1),
      "ou");
  EXPECT_THROW(GeneratorApply(v, model, Point({1.0}), Mat::Identity(1, 1)),
               NumericalError);
}

TEST(GeneratorTest, AnalyticAndFiniteDifferenceAgree) {
  const auto model = GradientFlow(2);
  const auto states = DefaultStateSamples(model, 3, 100);
  SizeFunction quartic(
      [](const Vec& x) { return 0.25 * x.squaredNorm() * x.squaredNorm() + 0.5 * x.squaredNorm(); },
      "quartic", [](const Vec& x) { return (x.squaredNorm() + 1.0) * x; },
      [](const Vec& x) {
        return Mat((x.squaredNorm() + 1.0) * Mat::Identity(2, 2) + 2.0 * x * x.transpose());
      });
  for (const auto& x : states) {
    EXPECT_LE(GeneratorModeGap(quartic, model, x, 0.9 * Mat::Identity(2, 2)), 1e-4);
    EXPECT_LE(GeneratorModeGap(HalfSquaredNorm(), model, x, 0.9 * Mat::Identity(2, 2)), 1e-4);
  }
}

TEST(SizeFunctionTest, GradientOnlyFallsBackToDifferencedGradient) {
  SizeFunction v([](const Vec& x) { return std::cosh(x[0]) - 1.0; }, "cosh",
                 [](const Vec& x) { return Vec::Constant(1, std::sinh(x[0])); });
  EXPECT_NEAR(v.Hessian(Point({0.7}))(0, 0), std::cosh(0.7), 1e-8);
  EXPECT_NEAR(v.FiniteDifferenceHessian(Point({0.7}))(0, 0), std::cosh(0.7), 1e-6);
}

TEST(SizeFunctionTest, AuditQuadratic) {
  const auto model = GradientFlow(2);
  std::vector<Vec> escape;
  for (int k = 1; k <= 10; ++k) escape.push_back(Point({1.0 * k, -2.0 * k}));
  const auto audit = AuditSizeFunction(HalfSquaredNorm(), Vec::Zero(2),
                                       DefaultStateSamples(model, 1, 300), escape);
  EXPECT_EQ(audit.value_at_equilibrium, 0.0);
  EXPECT_EQ(audit.nonpositive, 0u);
  EXPECT_LE(audit.max_gradient_mismatch, 1e-5);
  EXPECT_TRUE(audit.coercive_along_escape);
}

TEST(CertificateTest, ClassRequirements) {
  const auto lin = ScalarClassFunction::Linear(2.0);
  ScalarClassFunction bounded([](double r) { return r / (1 + r); }, FunctionClass::kK, "b");
  ScalarClassFunction pd([](double r) { return r * std::exp(-r); },
                         FunctionClass::kPositiveDefinite, "pd");
  ScalarClassFunction capped([](double r) { return r; }, FunctionClass::kKOnBounded,
                             "Id on [0,2)", 2.0);
  EXPECT_NO_THROW(DissipationCertificate::Make(CertificateKind::kNss, lin, lin));
  EXPECT_THROW(DissipationCertificate::Make(CertificateKind::kNss, bounded, lin),
               InvalidArgument);
  EXPECT_NO_THROW(DissipationCertificate::Make(CertificateKind::kScNss, bounded, capped, 2.0));
  EXPECT_THROW(DissipationCertificate::Make(CertificateKind::kScNss, pd, capped, 2.0),
               InvalidArgument);
  EXPECT_THROW(DissipationCertificate::Make(CertificateKind::kScNss, bounded, capped),
               InvalidArgument);
  EXPECT_NO_THROW(DissipationCertificate::Make(CertificateKind::kInss, pd, lin));
  EXPECT_THROW(DissipationCertificate::Make(CertificateKind::kInss, pd, pd),
               InvalidArgument);
}

class QuadraticCertificate : public ::testing::Test {
 protected:
  static constexpr int kN = 2;
  DiffusionModel model_ = GradientFlow(kN);
  std::vector<Vec> states_ = DefaultStateSamples(model_, 99);
  std::vector<Mat> thetas_ = DefaultThetaSamples(kN);
};

TEST_F(QuadraticCertificate, ExactPairHasNoViolations) {
  auto cert = DissipationCertificate::Make(
      CertificateKind::kNss, ScalarClassFunction::Linear(2.0),
      ScalarClassFunction::Linear(0.5 * kN));
  cert = CheckDissipation(HalfSquaredNorm(), model_, cert, states_, thetas_, 1e-10);
  EXPECT_TRUE(cert.violations.empty());
  EXPECT_EQ(cert.pairs_checked, states_.size() * thetas_.size());
  EXPECT_EQ(states_.size(), 1000u);
  EXPECT_EQ(thetas_.size(), 10u);
}

TEST_F(QuadraticCertificate, TooStrongDecayIsFalsified) {
  auto cert = DissipationCertificate::Make(
      CertificateKind::kNss, ScalarClassFunction::Linear(3.0),
      ScalarClassFunction::Linear(0.5 * kN));
  cert = CheckDissipation(HalfSquaredNorm(), model_, cert, states_, {Mat::Zero(kN, kN)});
  EXPECT_EQ(cert.violations.size(), states_.size());
}

TEST_F(QuadraticCertificate, EmptySamplesAreVacuous) {
  auto cert = DissipationCertificate::Make(
      CertificateKind::kNss, ScalarClassFunction::Linear(3.0),
      ScalarClassFunction::Linear(0.5 * kN));
  EXPECT_TRUE(CheckDissipation(HalfSquaredNorm(), model_, cert, {}, thetas_).violations.empty());
  EXPECT_TRUE(CheckDissipation(HalfSquaredNorm(), model_, cert, states_, {}).violations.empty());
}

TEST_F(QuadraticCertificate, ViolationOrderIndependentOfThreads) {
  auto cert = DissipationCertificate::Make(
      CertificateKind::kNss, ScalarClassFunction::Linear(2.5),
      ScalarClassFunction::Linear(0.5 * kN));
  const auto a = CheckDissipation(HalfSquaredNorm(), model_, cert, states_, thetas_, 1e-8, 1);
  const auto b = CheckDissipation(HalfSquaredNorm(), model_, cert, states_, thetas_, 1e-8, 4);
  ASSERT_EQ(a.violations.size(), b.violations.size());
  for (std::size_t i = 0; i < a.violations.size(); ++i) {
    EXPECT_EQ(a.violations[i].state_index, b.violations[i].state_index);
    EXPECT_EQ(a.violations[i].theta_index, b.violations[i].theta_index);
    EXPECT_EQ(a.violations[i].lhs, b.violations[i].lhs);
  }
}

TEST_F(QuadraticCertificate, ScNssCapIsEnforced) {
  ScalarClassFunction capped([](double r) { return r; }, FunctionClass::kKOnBounded,
                             "Id on [0,1)", 1.0);
  auto cert = DissipationCertificate::Make(CertificateKind::kScNss,
                                           ScalarClassFunction::Linear(2.0), capped, 1.0);
  EXPECT_THROW(CheckDissipation(HalfSquaredNorm(), model_, cert, states_, thetas_),
               DomainViolation);
  EXPECT_NO_THROW(CheckDissipation(HalfSquaredNorm(), model_, cert, states_,
                                   DefaultThetaSamples(kN, 1.0)));
}

TEST(DefaultSamplesTest, ThetaIntensities) {
  const auto inf = DefaultThetaSamples(2);
  ASSERT_EQ(inf.size(), 10u);
  EXPECT_EQ(NoiseIntensity(inf[0]), 0.0);
  EXPECT_NEAR(NoiseIntensity(inf[1]), 1e-3, 1e-15);
  EXPECT_NEAR(NoiseIntensity(inf[9]), 1e3, 1e-9);
  const auto capped = DefaultThetaSamples(1, 2.0);
  EXPECT_NEAR(NoiseIntensity(capped[9]), 1.8, 1e-12);
}

TEST(DefaultSamplesTest, RespectsDomainAndAppendsExtremes) {
  DiffusionModel model(
      1, 1, [](const Vec& x, Vec& out) { out = -x; },
      [](const Vec&, Mat& out) { out(0, 0) = 1.0; },
      [](const Vec& x) { return x[0] > -1.0; }, Vec::Zero(1), "half");
  const auto s = DefaultStateSamples(model, 4, 99, {Point({50.0}), Point({-5.0})});
  ASSERT_EQ(s.size(), 100u);
  for (const auto& x : s) EXPECT_GT(x[0], -1.0);
  EXPECT_EQ(s.back()[0], 50.0);
}

TEST(SetDThresholdTest, Examples) {
  const auto id = ScalarClassFunction::Identity();
  EXPECT_NEAR(SetDThreshold(id, id, 2.0, 0.1, 10.0).level, 0.2, 1e-10);
  EXPECT_NEAR(SetDThreshold(ScalarClassFunction::Power(1.0, 2.0), id, 2.0, 0.5, 10.0).level,
              1.0, 1e-10);
  EXPECT_EQ(SetDThreshold(id, id, 2.0, 0.0, 10.0).level, 0.0);
}

TEST(SetDThresholdTest, AdmissibilityAndArguments) {
  const auto id = ScalarClassFunction::Identity();
  // sup α on [0, 10] is 10, so d1 = γ⁻¹(10 / 2) = 5.
  const auto t = SetDThreshold(id, id, 2.0, 1.0, 10.0);
  EXPECT_NEAR(t.d1, 5.0, 1e-9);
  try {
    SetDThreshold(id, id, 2.0, 6.0, 10.0);
    FAIL() << "expected AdmissibilityError";
  } catch (const AdmissibilityError& e) {
    EXPECT_NEAR(e.d1(), 5.0, 1e-9);
  }
  EXPECT_THROW(SetDThreshold(id, id, 1.0, 0.1, 10.0), InvalidArgument);
  ScalarClassFunction bounded([](double r) { return r / (1 + r); }, FunctionClass::kK, "b");
  EXPECT_TRUE(std::isinf(SetDThreshold(id, bounded, 2.0, 0.1, 10.0).d1));
}

TEST(EntryExitTest, Examples) {
  EXPECT_TRUE(EntryExitTimes({3, 4, 5}, 1.0).empty());
  const auto iv = EntryExitTimes({2, 1, 0.5, 1.5, 0.5}, 1.0);
  ASSERT_EQ(iv.size(), 2u);
  EXPECT_EQ(iv[0].enter, 1u);
  EXPECT_EQ(iv[0].exit, 3u);
  EXPECT_EQ(iv[1].enter, 4u);
  EXPECT_FALSE(iv[1].exit.has_value());
  const std::vector<double> values{0.3, 2.0, 7.0};
  const auto all = EntryExitTimes(values, 7.0 + 1.0);
  ASSERT_EQ(all.size(), 1u);
  EXPECT_EQ(all[0].enter, 0u);
  EXPECT_FALSE(all[0].exit.has_value());
}

sde::TrajectoryEnsemble Spread(const DiffusionModel& model, double sigma,
                               std::size_t n, std::size_t stride) {
  sde::SimulationOptions opts;
  opts.record_stride = stride;
  std::vector<Vec> x0s;
  for (int k = 0; k < 10; ++k) x0s.push_back(Point({1.0 + 0.3 * k}));
  return sde::SimulateEnsemble(model, CovarianceSchedule::Constant(1, sigma), x0s,
                               1e-2, 5.0, n, 8, 1, opts);
}

TEST(SupermartingaleTest, NoiselessFlowDecreases) {
  const auto model = GradientFlow(1);
  const auto ens = Spread(model, 0.0, 200, 10);
  const auto report = SupermartingaleDiagnostic(ens, HalfSquaredNorm(), 0.0);
  EXPECT_EQ(report.flags, 0u);
  for (std::size_t j = 1; j < report.rows.size(); ++j)
    EXPECT_LT(report.rows[j].stopped_mean, report.rows[j - 1].stopped_mean);
}

TEST(SupermartingaleTest, OuOutsideDDecays) {
  const double sigma = 0.5;
  const auto model = GradientFlow(1);
  const auto level = SetDThreshold(ScalarClassFunction::Linear(2.0),
                                   ScalarClassFunction::Linear(0.5), 2.0,
                                   sigma * sigma, 100.0).level;
  const auto ens = Spread(model, sigma, 10000, 10);
  const auto report = SupermartingaleDiagnostic(ens, HalfSquaredNorm(), level);
  EXPECT_EQ(report.flags, 0u);
  EXPECT_EQ(report.excluded_paths, 0u);
}

TEST(SupermartingaleTest, SinglePathIsLowPower) {
  const auto ens = Spread(GradientFlow(1), 0.5, 1, 10);
  const auto report = SupermartingaleDiagnostic(ens, HalfSquaredNorm(), 0.01);
  EXPECT_EQ(report.low_power_rows, report.rows.size());
  EXPECT_EQ(report.flags, 0u);
}

TEST(ItoConsistencyTest, OuEnsemble) {
  const double sigma = 0.8;
  const auto model = GradientFlow(1);
  const auto sched = CovarianceSchedule::Constant(1, sigma);
  const auto ens = sde::SimulateEnsemble(model, sched, Point({1.5}), 1e-3, 2.0, 4000, 12);
  const auto report = ItoConsistency(ens, HalfSquaredNorm(), model, sched);
  EXPECT_TRUE(report.consistent) << report.z_score;
  // E[½z(T)²] = ½(z0² e^{-2T} + σ²(1 - e^{-2T})/2).
  const double expected =
      0.5 * (2.25 * std::exp(-4.0) + sigma * sigma * (1 - std::exp(-4.0)) / 2.0) - 0.5 * 2.25;
  EXPECT_NEAR(report.mean_change, expected, 0.02);
}

TEST(ReportTest, CsvAndSummary) {
  const auto model = GradientFlow(1);
  auto cert = DissipationCertificate::Make(CertificateKind::kNss,
                                           ScalarClassFunction::Linear(3.0),
                                           ScalarClassFunction::Linear(0.5));
  cert = CheckDissipation(HalfSquaredNorm(), model, cert, {Point({1.0})}, {Mat::Zero(1, 1)});
  std::ostringstream csv;
  WriteViolationsCsv(cert, csv);
  EXPECT_EQ(csv.str(), "state_0,theta_norm,lhs,rhs\n1,0,-1,-1.5\n");
  EXPECT_NE(SummaryText(cert, "quadratic").find("violations: 1"), std::string::npos);
}

}  // namespace
}  // namespace nsslab::lyapcert
