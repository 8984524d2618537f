#include <gtest/gtest.h>

#include <cmath>

#include "dsf/spatial.hpp"
#include "test_util.hpp"

using namespace dsf;
using dsf::testing::sine;
using dsf::testing::white_noise;

TEST(PhiLogvar, FlatChannelMapsToZero) {
  Rng rng(1);
  Matrix x = white_noise(3, 100, 1.0, rng);
  for (std::size_t k = 0; k < 100; ++k) x(1, k) = 0.0;
  const auto s = phi_logvar(x);
  EXPECT_EQ(s.values[1], 0.0);
  EXPECT_NE(s.values[0], 0.0);
}

TEST(PhiLogvar, IdenticalChannelsGiveEqualEntries) {
  Rng rng(2);
  Matrix x = white_noise(2, 64, 3.0, rng);
  for (std::size_t k = 0; k < 64; ++k) x(1, k) = x(0, k);
  const auto s = phi_logvar(x);
  EXPECT_EQ(s.values[0], s.values[1]);
}

TEST(PhiLogvar, SinusoidOverWholePeriods) {
  const double a = 7.0;
  const auto s = sine(4000, 5.0, 100.0, a, 0.3);  // 200 full periods
  Matrix x(1, 4000, s);
  EXPECT_NEAR(phi_logvar(x).values[0], std::log(a * a / 2.0), 1e-3);
}

TEST(PhiLogmCov, LengthForSixChannels) {
  Rng rng(3);
  const auto s = phi_logm_cov(white_noise(6, 200, 1.0, rng));
  EXPECT_EQ(s.values.size(), 21u);
  EXPECT_EQ(summary_size(SummaryKind::logm_covariance, 6), 21u);
  EXPECT_EQ(summary_size(SummaryKind::log_variance, 6), 6u);
}

TEST(PhiLogmCov, WhiteUnitChannelsApproachZero) {
  Rng rng(4);
  const auto s = phi_logm_cov(white_noise(6, 4096, 1.0, rng));
  double worst = 0.0;
  for (double v : s.values) worst = std::max(worst, std::abs(v));
  EXPECT_LT(worst, 0.15);
}

TEST(PhiLogmCov, FlatChannelStaysFinite) {
  Rng rng(5);
  Matrix x = white_noise(4, 128, 2.0, rng);
  for (std::size_t k = 0; k < 128; ++k) x(2, k) = 1.5;
  for (double v : phi_logm_cov(x).values) EXPECT_TRUE(std::isfinite(v));
  for (double v : phi_logm_cov(Matrix(3, 50)).values) EXPECT_TRUE(std::isfinite(v));
}

TEST(SpatialSummary, OffsetInvariant) {
  Rng rng(6);
  const Matrix x = white_noise(5, 300, 4.0, rng);
  Matrix shifted = x;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t k = 0; k < 300; ++k) shifted(i, k) += 10.0 * double(i + 1);
  for (auto kind : {SummaryKind::log_variance, SummaryKind::logm_covariance}) {
    const auto a = spatial_summary(kind, x).values, b = spatial_summary(kind, shifted).values;
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
  }
}

TEST(SpatialSummary, LogvarMatchesLogmDiagonalForUncorrelatedChannels) {
  Rng rng(7);
  Matrix x(4, 4096);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 4096; ++k) x(i, k) = rng.normal(0.0, 1.0 + 0.3 * double(i));
  const auto lv = phi_logvar(x).values;
  const Matrix lm = unvec_upper(phi_logm_cov(x).values, 4);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(lv[i], lm(i, i), 0.1);
}

TEST(SpatialSummary, RejectsSingleSample) {
  EXPECT_THROW(phi_logvar(Matrix(2, 1)), DegenerateInput);
  EXPECT_THROW(phi_logm_cov(Matrix(2, 1)), DegenerateInput);
}
