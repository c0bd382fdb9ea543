#include "nsslab/objectives.h"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "nsslab/errors.h"
#include "test_support.h"

namespace nsslab::objectives {
namespace {

using testing_support::GaussianCloud;
using testing_support::NoisyLogistic;
using testing_support::RandomUnit;

Vec V(std::initializer_list<double> v) {
  Vec x(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double e : v) x[i++] = e;
  return x;
}

LogisticModel Model(std::initializer_list<std::initializer_list<double>> cols,
                    std::initializer_list<double> labels) {
  const auto n = static_cast<Eigen::Index>(cols.begin()->size());
  Mat x(n, static_cast<Eigen::Index>(cols.size()));
  Eigen::Index k = 0;
  for (const auto& c : cols) x.col(k++) = V(c);
  return LogisticModel(x, V(labels));
}

TEST(QuadraticTest, IsotropicPlIdentity) {
  const auto obj = QuadraticObjective(Mat::Identity(2, 2), Vec::Zero(2));
  const Vec z = V({0.3, -1.7});
  EXPECT_TRUE(obj.Gradient(z).isApprox(z));
  EXPECT_NEAR(obj.Gradient(z).norm(), std::sqrt(2.0 * obj.Value(z)), 1e-14);
  ASSERT_TRUE(obj.envelope().has_value());
  EXPECT_NEAR(obj.envelope()->mu(obj.Value(z)), z.norm(), 1e-14);
  EXPECT_EQ(obj.envelope()->kind, PLKind::kClassicPL);
}

TEST(QuadraticTest, OptimumValueAndGradient) {
  Mat a(2, 2);
  a << 2.0, 0.5, 0.5, 1.0;
  const Vec b = V({1.0, -2.0});
  const auto obj = QuadraticObjective(a, b, 3.5);
  EXPECT_TRUE(obj.minimizer().isApprox(a.inverse() * b, 1e-14));
  EXPECT_DOUBLE_EQ(obj.Value(obj.minimizer()), 3.5);
  EXPECT_LE(obj.Gradient(obj.minimizer()).norm(), 1e-14);
}

TEST(QuadraticTest, DiagonalConstants) {
  Mat a = Mat::Zero(2, 2);
  a.diagonal() << 1.0, 4.0;
  const auto obj = QuadraticObjective(a, Vec::Zero(2));
  EXPECT_DOUBLE_EQ(*obj.global_lipschitz(), 4.0);
  EXPECT_NEAR(obj.envelope()->mu(1.0), std::sqrt(2.0), 1e-14);
}

TEST(QuadraticTest, RejectsIndefinite) {
  Mat a = Mat::Identity(2, 2);
  a(1, 1) = -1.0;
  EXPECT_THROW(QuadraticObjective(a, Vec::Zero(2)), InvalidArgument);
}

TEST(LogisticLossTest, Examples) {
  const auto m = Model({{1.0}, {-2.0}, {0.5}}, {1, 0, 1});
  EXPECT_NEAR(LogisticLoss(m, Vec::Zero(1)), std::log(2.0), 1e-15);
  const auto single = Model({{1.0}}, {1});
  EXPECT_NEAR(LogisticLoss(single, V({std::log(3.0)})), std::log(4.0 / 3.0), 1e-15);
  EXPECT_NEAR(LogisticLoss(Model({{1.0}, {-1.0}}, {1, 0}), Vec::Zero(1)), std::log(2.0), 1e-15);
}

TEST(LogisticLossTest, FiniteForHugeLogits) {
  const auto m = Model({{1.0}, {-1.0}}, {1, 1});
  const double loss = LogisticLoss(m, V({1e6}));
  EXPECT_TRUE(std::isfinite(loss));
  EXPECT_NEAR(loss, 0.5 * 1e6, 1e-6);
}

TEST(LogisticGradientTest, Examples) {
  const auto m = Model({{1.0, 2.0}, {-1.0, 0.5}, {0.0, 3.0}}, {1, 0, 0});
  Vec expected = Vec::Zero(2);
  for (int i = 0; i < 3; ++i) expected += (0.5 - m.y()[i]) * m.x().col(i);
  expected /= 3.0;
  EXPECT_TRUE(LogisticGradient(m, Vec::Zero(2)).isApprox(expected, 1e-15));
  EXPECT_NEAR(LogisticGradient(Model({{1.0}, {-1.0}}, {1, 0}), Vec::Zero(1))[0], -0.5, 1e-15);
}

TEST(LogisticGradientTest, VanishesAtMinimizer) {
  const auto m = NoisyLogistic(3, 200, 5);
  const Vec theta = LogisticMinimizer(m);
  EXPECT_LE(LogisticGradient(m, theta).norm(), 1e-8);
}

TEST(LogisticHessianTest, AtOriginAndBound) {
  const auto m = NoisyLogistic(3, 50, 6);
  const Mat gram = m.x() * m.x().transpose();
  EXPECT_TRUE(LogisticHessian(m, Vec::Zero(3)).isApprox(gram / (4.0 * 50), 1e-14));
  const double bound = SymmetricSpectralNorm(gram) / (4.0 * 50);
  for (const auto& theta : GaussianCloud(Vec::Zero(3), {0.1, 1, 10}, 100, 8))
    EXPECT_LE(SymmetricSpectralNorm(LogisticHessian(m, theta)), bound + 1e-9);
}

TEST(LogisticHessianTest, DecaysAlongRays) {
  const auto m = Model({{1, 1}, {-1, 2}, {2, -1}, {-2, -2}, {1, -1}, {2, 2}},
                       {1, 0, 1, 0, 0, 1});
  const Vec d = V({0.6, 0.8});
  const double scale = SymmetricSpectralNorm(m.x() * m.x().transpose()) / m.samples();
  EXPECT_LT(SymmetricSpectralNorm(LogisticHessian(m, 1e3 * d)), 1e-6 * scale);
}

TEST(LogisticLipschitzTest, Examples) {
  EXPECT_DOUBLE_EQ(LogisticLipschitzConstant(Model({{1.0}, {-1.0}}, {1, 0})), 0.25);
  EXPECT_EQ(LogisticLipschitzConstant(LogisticModel(Mat::Zero(2, 3), V({1, 0, 1}))), 0.0);
  EXPECT_DOUBLE_EQ(LogisticLipschitzConstant(LogisticModel(Mat::Identity(2, 2), V({1, 0}))),
                   0.125);
}

TEST(NonseparableTest, HandVerifiedInstances) {
  const auto sep = CheckNonseparable(Model({{1.0}, {-1.0}}, {1, 0}));
  EXPECT_TRUE(sep.separable);
  ASSERT_EQ(sep.witness.size(), 1);
  EXPECT_GT(sep.witness[0], 0.0);
  EXPECT_FALSE(CheckNonseparable(Model({{1.0}, {1.0}}, {1, 0})).separable);
  EXPECT_FALSE(CheckNonseparable(
                   Model({{1, 1}, {-1, -1}, {1, -1}, {-1, 1}}, {1, 1, 0, 0}))
                   .separable);
}

TEST(NonseparableTest, WeakSeparationCounts) {
  // θ = (0, 1) gives margins (1, 0, 1): all nonnegative, one zero.
  const auto m = Model({{1, 1}, {1, 0}, {-1, -1}}, {1, 1, 0});
  const auto report = CheckNonseparable(m);
  ASSERT_TRUE(report.separable);
  const Vec w = report.witness;
  EXPECT_GT(w.norm(), 0.0);
  for (int i = 0; i < m.samples(); ++i) {
    const double margin = (m.y()[i] == 1.0 ? 1.0 : -1.0) * w.dot(m.x().col(i));
    EXPECT_GE(margin, -1e-12);
  }
}

TEST(NonseparableTest, DegenerateZeroData) {
  const auto report = CheckNonseparable(LogisticModel(Mat::Zero(3, 2), V({1, 0})));
  EXPECT_TRUE(report.separable);
  EXPECT_NEAR(report.witness.norm(), 1.0, 1e-15);
}

TEST(NonseparableTest, NoisyDataAreNonseparable) {
  EXPECT_FALSE(CheckNonseparable(NoisyLogistic(3, 200, 5)).separable);
}

TEST(RaySlopeTest, ZeroAtStationaryPoint) {
  const auto m = NoisyLogistic(3, 200, 5);
  const Vec theta = LogisticMinimizer(m);
  rng::CounterStream s(1);
  for (int k = 0; k < 10; ++k) EXPECT_NEAR(RaySlope(m, theta, 0.0, RandomUnit(3, s)), 0.0, 1e-10);
}

TEST(RaySlopeTest, ApproachesLimitAndIncreases) {
  const auto m = Model({{1, 0.5}, {-0.8, 1}, {0.3, -1}, {1, 1}, {-1, -0.2}}, {1, 0, 1, 0, 1});
  rng::CounterStream s(2);
  int accepted = 0;
  while (accepted < 20) {
    const Vec d = RandomUnit(2, s);
    // The tail gap decays like exp(-r |d·x_i|).
    if ((d.transpose() * m.x()).cwiseAbs().minCoeff() < 0.5) continue;
    ++accepted;
    EXPECT_NEAR(RaySlope(m, Vec::Zero(2), 50.0, d), RaySlopeLimit(m, d), 1e-8);
    double prev = RaySlope(m, Vec::Zero(2), 0.0, d);
    for (double r = 0.25; r <= 10.0; r += 0.25) {
      const double cur = RaySlope(m, Vec::Zero(2), r, d);
      EXPECT_GT(cur, prev);
      prev = cur;
    }
  }
}

TEST(RaySlopeTest, RejectsNonUnitDirection) {
  const auto m = Model({{1.0}, {-1.0}}, {1, 1});
  EXPECT_THROW(RaySlope(m, Vec::Zero(1), 1.0, V({2.0})), InvalidArgument);
}

TEST(OracleConsistency, GradientsAndHessiansMatchDifferences) {
  const auto m = NoisyLogistic(3, 100, 9);
  const auto obj = MakeLogisticObjective(m);
  const auto probes = GaussianCloud(obj.minimizer(), {0.3, 1, 3}, 34, 10);
  EXPECT_LE(MaxGradientMismatch(obj, probes), 1e-4);
  Mat a(2, 2);
  a << 3.0, 1.0, 1.0, 2.0;
  const auto quad = QuadraticObjective(a, V({1.0, 1.0}));
  EXPECT_LE(MaxGradientMismatch(quad, GaussianCloud(Vec::Zero(2), {1, 10}, 50, 2)), 1e-4);
  for (const auto& p : probes) {
    const Mat h = obj.Hessian(p);
    Mat fd(3, 3);
    const double step = 1e-5 * (1.0 + p.norm());
    for (int i = 0; i < 3; ++i) {
      Vec e = Vec::Zero(3);
      e[i] = step;
      fd.col(i) = (obj.Gradient(p + e) - obj.Gradient(p - e)) / (2 * step);
    }
    EXPECT_LE((h - fd).norm(), 1e-4 * std::max(1.0, h.norm()));
    EXPECT_LT((h - h.transpose()).norm(), 1e-15);
    EXPECT_GT(Eigen::SelfAdjointEigenSolver<Mat>(h).eigenvalues().minCoeff(), 0.0);
    EXPECT_GE(obj.Value(p), obj.optimum_value() - 1e-9);
  }
}

TEST(CoercivityTest, LossGrowsAlongRays) {
  const auto m = NoisyLogistic(3, 200, 5);
  const Vec theta = LogisticMinimizer(m);
  rng::CounterStream s(4);
  double e1 = std::numeric_limits<double>::infinity();
  std::vector<Vec> dirs;
  for (int k = 0; k < 50; ++k) {
    dirs.push_back(RandomUnit(3, s));
    e1 = std::min(e1, RaySlopeLimit(m, dirs.back()));
  }
  ASSERT_GT(e1, 0.0);
  for (const auto& d : dirs) {
    double prev = LogisticLoss(m, theta);
    for (double r = 0.5; r <= 200.0; r *= 1.5) {
      const double cur = LogisticLoss(m, theta + r * d);
      EXPECT_GT(cur, prev);
      prev = cur;
    }
    EXPECT_GE(RaySlope(m, theta, 200.0, d), 0.5 * e1);
  }
}

TEST(EnvelopeTest, RecoversClassicModulusOnQuadratics) {
  const auto iso = QuadraticObjective(Mat::Identity(2, 2), Vec::Zero(2));
  const auto env = EstimateKplEnvelope(iso, Vec::Zero(2), {.n_dirs = 16});
  EXPECT_EQ(env.mu(0.0), 0.0);
  for (double h : GeometricGrid(1e-3, 10.0, 30))
    EXPECT_NEAR(env.mu(h), std::sqrt(2.0 * h), 0.02 * std::sqrt(2.0 * h)) << h;
  Mat a = Mat::Zero(2, 2);
  a.diagonal() << 1.0, 4.0;
  const auto aniso = QuadraticObjective(a, Vec::Zero(2));
  const auto env2 = EstimateKplEnvelope(aniso, Vec::Zero(2), {.n_dirs = 256, .seed = 3});
  for (double h : GeometricGrid(1e-3, 10.0, 30)) {
    EXPECT_GE(env2.mu(h), std::sqrt(2.0 * h) * 0.98) << h;
    EXPECT_LE(env2.mu(h), std::sqrt(2.0 * h) * 1.02) << h;
  }
}

TEST(EnvelopeTest, RejectsNonStationaryPoint) {
  const auto iso = QuadraticObjective(Mat::Identity(2, 2), Vec::Zero(2));
  EXPECT_THROW(EstimateKplEnvelope(iso, V({1.0, 0.0})), InvalidArgument);
}

TEST(EnvelopeTest, LogisticEnvelopeHoldsOnHeldOutPoints) {
  const auto m = NoisyLogistic(3, 200, 5);
  const auto obj = MakeLogisticObjective(m);
  const auto env = EstimateKplEnvelope(obj, obj.minimizer(), {.n_dirs = 256, .seed = 1});
  EXPECT_EQ(env.kind, PLKind::kK);
  const auto probes = GaussianCloud(obj.minimizer(), {0.1, 1, 10, 100}, 250, 77);
  const auto report = VerifyPl(obj, env, probes);
  EXPECT_TRUE(report.violations.empty()) << report.violations.size() << " violations";
  EXPECT_EQ(report.checked, 1000u);
}

TEST(VerifyPlTest, QuadraticExactAndInflated) {
  const auto quad = QuadraticObjective(Mat::Identity(2, 2), Vec::Zero(2));
  const auto pts = GaussianCloud(Vec::Zero(2), {0.1, 1, 10}, 30, 3);
  EXPECT_TRUE(VerifyPl(quad, *quad.envelope(), pts).violations.empty());
  PLEnvelope inflated{compfun::ScalarClassFunction([](double h) { return 10 * std::sqrt(h); },
                                                   compfun::FunctionClass::kKInfinity, "10 sqrt h"),
                      PLKind::kClassicPL, "inflated"};
  EXPECT_EQ(VerifyPl(quad, inflated, pts).violations.size(), pts.size());
  EXPECT_TRUE(VerifyPl(quad, inflated, {}).violations.empty());
}

TEST(GradientBoundTest, Examples) {
  const auto m = NoisyLogistic(3, 100, 12);
  EXPECT_LT(GradientBoundCheck(m, {Vec::Zero(3)}).max_ratio, 1.0);
  rng::CounterStream s(6);
  std::vector<Vec> far;
  for (int k = 0; k < 100; ++k) far.push_back(1e3 * RandomUnit(3, s));
  EXPECT_TRUE(GradientBoundCheck(m, far).holds);
  const auto zero = LogisticModel(Mat::Zero(2, 4), V({1, 0, 0, 1}));
  const auto report = GradientBoundCheck(zero, {V({1.0, 2.0})});
  EXPECT_TRUE(report.holds);
  EXPECT_EQ(report.max_ratio, 0.0);
}

TEST(CsvTest, ReadsDataset) {
  std::istringstream in("x1,x2,label\n1.5,2,1\n-1,0.25,0\n");
  const auto m = ReadLogisticCsv(in, "mem");
  EXPECT_EQ(m.dim(), 2);
  EXPECT_EQ(m.samples(), 2);
  EXPECT_EQ(m.x()(1, 1), 0.25);
  EXPECT_EQ(m.y()[0], 1.0);
}

TEST(CsvTest, ReportsLineNumbers) {
  std::istringstream bad_label("x,y\n1,1\n2,3\n");
  try {
    ReadLogisticCsv(bad_label, "data.csv");
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("data.csv:3"), std::string::npos) << e.what();
  }
  std::istringstream ragged("x,y\n1\n");
  EXPECT_THROW(ReadLogisticCsv(ragged, "r"), InvalidArgument);
  std::istringstream empty("");
  EXPECT_THROW(ReadLogisticCsv(empty, "e"), InvalidArgument);
}

TEST(CsvTest, EnvelopeExport) {
  const auto quad = QuadraticObjective(Mat::Identity(1, 1), Vec::Zero(1));
  std::ostringstream out;
  WriteEnvelopeCsv(*quad.envelope(), {0.0, 2.0}, out);
  EXPECT_EQ(out.str(), "h,mu\n0,0\n2,2\n");
}

}  // namespace
}  // namespace nsslab::objectives
