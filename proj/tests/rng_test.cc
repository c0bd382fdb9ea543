#include "nsslab/rng.h"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace nsslab::rng {
namespace {

// Known-answer vectors published with the Random123 library.
TEST(PhiloxTest, KnownAnswerZero) {
  const PhiloxCounter out = Philox4x32({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x6627e8d5u);
  EXPECT_EQ(out[1], 0xe169c58du);
  EXPECT_EQ(out[2], 0xbc57ac4cu);
  EXPECT_EQ(out[3], 0x9b00dbd8u);
}

TEST(PhiloxTest, KnownAnswerAllOnes) {
  const PhiloxCounter out = Philox4x32(
      {0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
      {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(out[0], 0x408f276du);
  EXPECT_EQ(out[1], 0x41c83b0eu);
  EXPECT_EQ(out[2], 0xa20bc7c6u);
  EXPECT_EQ(out[3], 0x6d5451fdu);
}

TEST(PhiloxTest, KnownAnswerPi) {
  const PhiloxCounter out =
      Philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                 {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(out[0], 0xd16cfe09u);
  EXPECT_EQ(out[1], 0x94fdccebu);
  EXPECT_EQ(out[2], 0x5001e420u);
  EXPECT_EQ(out[3], 0x24126ea1u);
}

TEST(RngTest, InverseNormalCdfMatchesReferenceQuantiles) {
  // Reference values from an independent quantile implementation.
  const std::vector<std::pair<double, double>> table{
      {1e-20, -9.262340089798409}, {1e-10, -6.361340902404056},
      {0.001, -3.090232306167813}, {0.02425, -1.972961051311885},
      {0.1, -1.2815515655446004},  {0.3, -0.5244005127080409},
      {0.5, 0.0},                  {0.7, 0.5244005127080407},
      {0.975, 1.959963984540054},  {0.999999, 4.753424308817087}};
  for (const auto& [p, z] : table)
    EXPECT_NEAR(InverseNormalCdf(p), z, 1e-14 * std::max(1.0, std::abs(z))) << p;
}

TEST(RngTest, ToOpenUnitStaysInside) {
  EXPECT_GT(ToOpenUnit(0, 0), 0.0);
  EXPECT_LT(ToOpenUnit(0xffffffffu, 0xffffffffu), 1.0);
}

TEST(RngTest, DeterministicHashDependsOnBothInputs) {
  EXPECT_EQ(DeterministicHash(7, 3), DeterministicHash(7, 3));
  EXPECT_NE(DeterministicHash(7, 3), DeterministicHash(7, 4));
  EXPECT_NE(DeterministicHash(7, 3), DeterministicHash(8, 3));
}

TEST(RngTest, FillStandardNormalIsPureFunctionOfSeedAndStep) {
  std::vector<double> a(5), b(5), c(5);
  FillStandardNormal(42, 17, a);
  FillStandardNormal(42, 17, b);
  FillStandardNormal(42, 18, c);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
}

TEST(RngTest, NormalMomentsMatch) {
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  std::vector<double> z(1);
  for (int k = 0; k < n; ++k) {
    FillStandardNormal(1234, static_cast<std::uint64_t>(k), z);
    sum += z[0];
    sum2 += z[0] * z[0];
    sum4 += z[0] * z[0] * z[0] * z[0];
  }
  EXPECT_NEAR(sum / n, 0.0, 5.0 / std::sqrt(n));
  EXPECT_NEAR(sum2 / n, 1.0, 5.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(sum4 / n, 3.0, 5.0 * std::sqrt(96.0 / n));
}

TEST(RngTest, CounterStreamUniformMean) {
  CounterStream s(99);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = s.Uniform();
    ASSERT_GT(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 5.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(RngTest, CounterStreamsAreIndependentOfEachOther) {
  CounterStream a(5, 0), b(5, 1), a2(5, 0);
  const double x = a.Normal();
  EXPECT_NE(x, b.Normal());
  EXPECT_EQ(x, a2.Normal());
}

}  // namespace
}  // namespace nsslab::rng
