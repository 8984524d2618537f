#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "dsf/dsf.hpp"
#include "dsf/shallownet.hpp"
#include "gradcheck.hpp"
#include "test_util.hpp"

using namespace dsf;
using dsf::testing::network_gradcheck;
using dsf::testing::random_tensor;
using dsf::testing::white_noise;

namespace {

DsfConfig make_cfg(DsfVariant v, std::size_t c, std::size_t co, double tau = 0.1) {
  DsfConfig cfg;
  cfg.variant = v;
  cfg.channels = c;
  cfg.channels_out = co;
  cfg.tau = tau;
  return cfg;
}

ParamStore init_params(const DsfConfig& cfg, std::uint64_t seed) {
  ParamStore ps;
  Rng rng(seed);
  DsfModule(cfg).init_params(ps, rng);
  return ps;
}

// Least-squares solve by Gaussian elimination on the normal equations.
std::vector<double> lstsq(const Matrix& a, std::span<const double> y) {
  const std::size_t p = a.cols();
  Matrix m(p, p + 1);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j)
      for (std::size_t k = 0; k < a.rows(); ++k) m(i, j) += a(k, i) * a(k, j);
    for (std::size_t k = 0; k < a.rows(); ++k) m(i, p) += a(k, i) * y[k];
  }
  for (std::size_t c = 0; c < p; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < p; ++r)
      if (std::abs(m(r, c)) > std::abs(m(piv, c))) piv = r;
    for (std::size_t j = 0; j <= p; ++j) std::swap(m(c, j), m(piv, j));
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = m(r, c) / m(c, c);
      for (std::size_t j = c; j <= p; ++j) m(r, j) -= f * m(c, j);
    }
  }
  std::vector<double> beta(p);
  for (std::size_t i = 0; i < p; ++i) beta[i] = m(i, p) / m(i, i);
  return beta;
}

}  // namespace

TEST(SoftThreshold, ScalarExamples) {
  EXPECT_EQ(soft_threshold(0.05, 0.1), 0.0);
  EXPECT_DOUBLE_EQ(soft_threshold(-0.5, 0.1), -0.4);
  EXPECT_DOUBLE_EQ(soft_threshold(0.5, 0.1), 0.4);
  EXPECT_EQ(soft_threshold(0.1, 0.1), 0.0);
  EXPECT_EQ(soft_threshold(-0.3, 0.0), -0.3);
}

TEST(SoftThreshold, MatrixIsElementwiseScalarRule) {
  Rng rng(1);
  Matrix w(4, 5);
  for (double& v : w.data()) v = rng.normal(0.0, 0.2);
  const Matrix out = soft_threshold(w, 0.1);
  for (std::size_t i = 0; i < w.data().size(); ++i) {
    const double a = w.data()[i];
    const double expect = std::abs(a) <= 0.1 ? 0.0 : (a > 0 ? a - 0.1 : a + 0.1);
    EXPECT_DOUBLE_EQ(out.data()[i], expect);
  }
}

TEST(ChannelContribution, Examples) {
  for (double v : channel_contribution(Matrix::identity(4))) EXPECT_EQ(v, 1.0);
  Matrix w{{1, 0, 2}, {3, 0, 4}};
  EXPECT_EQ(channel_contribution(w)[1], 0.0);
  EXPECT_EQ(channel_contribution(Matrix{{3}, {4}}), std::vector<double>{5.0});
}

TEST(DsfParamCount, ReferenceConfigurations) {
  EXPECT_EQ(dsf_param_count(make_cfg(DsfVariant::dsfd, 4, 4)), 420u);
  const auto c6 = make_cfg(DsfVariant::dsfm, 6, 6);
  EXPECT_EQ(dsf_param_count(c6), 2346u);
  EXPECT_EQ(init_params(c6, 0).parameter_count(), 2346u);
  EXPECT_EQ(init_params(make_cfg(DsfVariant::dsfd, 4, 4), 0).parameter_count(), 420u);

  auto bad = c6;
  bad.hidden = 0;
  EXPECT_THROW(dsf_param_count(bad), InputError);
  EXPECT_THROW(DsfModule{bad}, InputError);
}

TEST(DsfForward, ZeroParametersGiveZeroOutput) {
  const auto cfg = make_cfg(DsfVariant::dsfm, 4, 3);
  ParamStore ps = init_params(cfg, 1);
  for (auto& e : ps.entries()) e.value.fill(0.0);
  Rng rng(2);
  const auto out = dsf_forward(white_noise(4, 50, 5.0, rng), ps, cfg);
  EXPECT_EQ(out.y, Matrix(3, 50));
  EXPECT_EQ(out.filters.weights, Matrix(3, 4));
  EXPECT_EQ(out.filters.bias, std::vector<double>(3, 0.0));
}

TEST(DsfForward, IdentityFiltersPassInputThrough) {
  for (auto v : {DsfVariant::dsfd, DsfVariant::dsfm, DsfVariant::dsfm_st}) {
    const auto cfg = make_cfg(v, 5, 5, 0.0);
    ParamStore ps = init_params(cfg, 3);
    ps.value("dsf.fc2.weight").fill(0.0);
    auto& b = ps.value("dsf.fc2.bias");
    b.fill(0.0);
    for (std::size_t i = 0; i < 5; ++i) b[i * 5 + i] = 1.0;
    Rng rng(4);
    const Matrix x = white_noise(5, 80, 10.0, rng);
    EXPECT_EQ(dsf_forward(x, ps, cfg).y, x);
  }
}

TEST(DsfForward, ThresholdedFiltersAreSoftThresholdedRawFilters) {
  const auto st = make_cfg(DsfVariant::dsfm_st, 6, 6);
  const auto plain = make_cfg(DsfVariant::dsfm, 6, 6);
  Rng rng(5);
  for (int rep = 0; rep < 10; ++rep) {
    const ParamStore ps = init_params(st, 100 + rep);
    const Matrix x = white_noise(6, 100, 10.0, rng);
    const auto raw = dsf_forward(x, ps, plain).filters.weights;
    const auto out = dsf_forward(x, ps, st).filters.weights;
    EXPECT_EQ(out, soft_threshold(raw, st.tau));
    for (std::size_t i = 0; i < raw.data().size(); ++i)
      if (std::abs(raw.data()[i]) <= st.tau) EXPECT_EQ(out.data()[i], 0.0);
  }
}

TEST(DsfForward, ZeroTauThresholdIsBitIdenticalToUnthresholded) {
  Rng rng(6);
  for (int rep = 0; rep < 10; ++rep) {
    const auto st = make_cfg(DsfVariant::dsfm_st, 6, 4, 0.0);
    const auto plain = make_cfg(DsfVariant::dsfm, 6, 4);
    const ParamStore ps = init_params(plain, rep);
    const Matrix x = white_noise(6, 120, 8.0, rng);
    const auto a = dsf_forward(x, ps, st), b = dsf_forward(x, ps, plain);
    EXPECT_EQ(a.y, b.y);
    EXPECT_EQ(a.filters.weights, b.filters.weights);
  }
}

TEST(DsfForward, OutputRowsAreAffineInInputRows) {
  Rng rng(7);
  for (auto v : {DsfVariant::dsfd, DsfVariant::dsfm, DsfVariant::dsfm_st}) {
    const auto cfg = make_cfg(v, 4, 3);
    const ParamStore ps = init_params(cfg, 8);
    const Matrix x = white_noise(4, 200, 1.0, rng);
    const auto out = dsf_forward(x, ps, cfg);
    Matrix design(200, 5);
    for (std::size_t k = 0; k < 200; ++k) {
      for (std::size_t j = 0; j < 4; ++j) design(k, j) = x(j, k);
      design(k, 4) = 1.0;
    }
    for (std::size_t i = 0; i < 3; ++i) {
      const auto beta = lstsq(design, out.y.row(i));
      double worst = 0.0;
      for (std::size_t k = 0; k < 200; ++k) {
        double fit = 0.0;
        for (std::size_t j = 0; j < 5; ++j) fit += design(k, j) * beta[j];
        worst = std::max(worst, std::abs(fit - out.y(i, k)));
      }
      EXPECT_LT(worst, 1e-10);
    }
  }
}

TEST(DsfForward, FrozenFiltersActLinearly) {
  const auto cfg = make_cfg(DsfVariant::dsfm_st, 4, 4);
  const ParamStore ps = init_params(cfg, 9);
  Rng rng(10);
  const Matrix x = white_noise(4, 60, 3.0, rng);
  const auto out = dsf_forward(x, ps, cfg);
  const Matrix& w = out.filters.weights;
  Matrix wx = matmul(w, x);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 60; ++k) EXPECT_NEAR(out.y(i, k) - out.filters.bias[i], wx(i, k), 1e-12);
  // Scaling a channel changes the summary, yet the applied rule stays W X + b.
  Matrix scaled = x;
  for (std::size_t k = 0; k < 60; ++k) scaled(2, k) *= 5.0;
  const auto out2 = dsf_forward(scaled, ps, cfg);
  wx = matmul(out2.filters.weights, scaled);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 60; ++k)
      EXPECT_NEAR(out2.y(i, k) - out2.filters.bias[i], wx(i, k), 1e-11);
}

TEST(DsfForward, ChannelContributionIsPermutationEquivariant) {
  const std::vector<std::size_t> perm = {2, 0, 3, 1};  // new channel j is old perm[j]
  const std::size_t c = 4, co = 3;
  for (auto v : {DsfVariant::dsfd, DsfVariant::dsfm, DsfVariant::dsfm_st}) {
    const auto cfg = make_cfg(v, c, co);
    const ParamStore ps = init_params(cfg, 11);
    const std::size_t d = cfg.summary_dim(), h = cfg.hidden_units();

    // Old summary index feeding each new summary index.
    std::vector<std::size_t> src(d);
    if (v == DsfVariant::dsfd) {
      src = perm;
    } else {
      Matrix idx(c, c);
      std::size_t n = 0;
      for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = i; j < c; ++j) idx(i, j) = idx(j, i) = double(n++);
      n = 0;
      for (std::size_t i = 0; i < c; ++i)
        for (std::size_t j = i; j < c; ++j) src[n++] = std::size_t(idx(perm[i], perm[j]));
    }

    ParamStore pp = ps;
    auto& w1 = pp.value("dsf.fc1.weight");
    const auto& w1o = ps.value("dsf.fc1.weight");
    for (std::size_t u = 0; u < h; ++u)
      for (std::size_t k = 0; k < d; ++k) w1[u * d + k] = w1o[u * d + src[k]];
    auto& w2 = pp.value("dsf.fc2.weight");
    auto& b2 = pp.value("dsf.fc2.bias");
    const auto& w2o = ps.value("dsf.fc2.weight");
    const auto& b2o = ps.value("dsf.fc2.bias");
    for (std::size_t i = 0; i < co; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        const std::size_t dst = i * c + j, from = i * c + perm[j];
        b2[dst] = b2o[from];
        for (std::size_t u = 0; u < h; ++u) w2[dst * h + u] = w2o[from * h + u];
      }

    Rng rng(12);
    const Matrix x = white_noise(c, 150, 5.0, rng);
    Matrix xp(c, 150);
    for (std::size_t j = 0; j < c; ++j)
      for (std::size_t k = 0; k < 150; ++k) xp(j, k) = x(perm[j], k);

    const auto a = dsf_forward(x, ps, cfg), b = dsf_forward(xp, pp, cfg);
    const auto phi = channel_contribution(a.filters.weights);
    const auto phip = channel_contribution(b.filters.weights);
    for (std::size_t j = 0; j < c; ++j) EXPECT_NEAR(phip[j], phi[perm[j]], 1e-10);
    EXPECT_LT(max_abs(a.y - b.y), 1e-9);
  }
}

TEST(DsfForward, RejectsWrongChannelCountAndParameterShapes) {
  const auto cfg = make_cfg(DsfVariant::dsfm, 4, 4);
  const ParamStore ps = init_params(cfg, 0);
  Rng rng(0);
  EXPECT_THROW(dsf_forward(white_noise(5, 40, 1.0, rng), ps, cfg), InputError);
  const ParamStore other = init_params(make_cfg(DsfVariant::dsfm, 4, 2), 0);
  EXPECT_THROW(dsf_forward(white_noise(4, 40, 1.0, rng), other, cfg), InputError);
}

class DsfGradient : public ::testing::TestWithParam<int> {};

TEST_P(DsfGradient, EndToEndThroughShallowNet) {
  const auto seed = std::uint64_t(GetParam());
  ShallowNetConfig ncfg;
  ncfg.kernel = 9;
  ncfg.pool_window = 10;
  ncfg.pool_stride = 5;
  for (auto v : {DsfVariant::dsfd, DsfVariant::dsfm, DsfVariant::dsfm_st}) {
    Sequential net;
    net.emplace<DsfModule>(make_cfg(v, 4, 3));
    net.add(make_shallownet(ncfg, 3, 64));
    ParamStore ps;
    Rng rng(seed + 1000);
    net.init_params(ps, rng);
    const Tensor x = random_tensor({2, 4, 64}, rng, 3.0);
    EXPECT_LT(network_gradcheck(net, ps, x, {0, 1}, {0.7, 1.3}, seed), 1e-4);
  }
}

INSTANTIATE_TEST_SUITE_P(Seeds, DsfGradient, ::testing::Range(0, 20));
