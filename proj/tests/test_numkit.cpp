#include <gtest/gtest.h>

#include <array>
#include <cmath>

#include "oracles.hpp"

using namespace convtrack;

namespace {

double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  EXPECT_EQ(a.size(), b.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  return worst;
}

}  // namespace

TEST(Conv2d, ScalarProduct) {
  Tensor3 in(1, 1, 1, 3.0);
  FilterStack f(1, 1, 1, 1);
  f.weights()[0] = 2.0;
  EXPECT_EQ(conv2d(in, f, ConvMode::valid)(0, 0, 0), 6.0);
}

TEST(Conv2d, SumOfOnes) {
  Tensor3 in(1, 3, 3, 1.0);
  FilterStack f(1, 1, 3, 3);
  for (double& w : f.weights()) w = 1.0;
  const Tensor3 out = conv2d(in, f, ConvMode::valid);
  ASSERT_EQ(out.height(), 1);
  ASSERT_EQ(out.width(), 1);
  EXPECT_EQ(out(0, 0, 0), 9.0);
  EXPECT_THROW(FilterStack(1, 1, 2, 3), ContractViolation);
}

TEST(Conv2d, MatchesNestedLoopOracleOnFixedCase) {
  Rng rng(3);
  const Tensor3 in = oracle::random_tensor(2, 5, 5, rng);
  const FilterStack f = oracle::random_filters(3, 2, 3, 3, rng);
  const Tensor3 got = conv2d(in, f, ConvMode::valid);
  const Tensor3 want = oracle::conv2d(in, f, false, 1);
  ASSERT_TRUE(got.same_shape(want));
  EXPECT_LE(max_abs_diff(got.data(), want.data()), 1e-12);
}

TEST(Conv2d, MatchesOracleBitForBitOnRandomShapes) {
  Rng rng(17);
  for (int trial = 0; trial < 150; ++trial) {
    const int c = 1 + static_cast<int>(rng.uniform() * 3);
    const int o = 1 + static_cast<int>(rng.uniform() * 3);
    const int k = 1 + 2 * static_cast<int>(rng.uniform() * 4);
    const int h = k + static_cast<int>(rng.uniform() * 12);
    const int w = k + static_cast<int>(rng.uniform() * 12);
    const bool same = rng.uniform() < 0.5;
    const int stride = rng.uniform() < 0.3 ? 2 : 1;
    const Tensor3 in = oracle::random_tensor(c, h, w, rng);
    const FilterStack f = oracle::random_filters(o, c, k, k, rng);
    const Tensor3 got = conv2d(in, f, same ? ConvMode::same : ConvMode::valid, stride);
    const Tensor3 want = oracle::conv2d(in, f, same, stride);
    ASSERT_TRUE(got.same_shape(want)) << "trial " << trial;
    EXPECT_LE(max_abs_diff(got.data(), want.data()), 1e-12) << "trial " << trial;
    if (stride == 1) {
      // The summation order is fixed, so results are exactly reproducible.
      EXPECT_TRUE(got == want) << "trial " << trial;
    }
  }
}

TEST(Conv2d, RejectsChannelMismatchAndOversizedKernel) {
  FilterStack f(1, 2, 3, 3);
  EXPECT_THROW(conv2d(Tensor3(1, 5, 5), f, ConvMode::same), ContractViolation);
  EXPECT_THROW(conv2d(Tensor3(2, 2, 5), f, ConvMode::valid), ContractViolation);
}

TEST(Conv2d, IsLinearInTheInput) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor3 x = oracle::random_tensor(2, 7, 6, rng);
    const Tensor3 y = oracle::random_tensor(2, 7, 6, rng);
    FilterStack f = oracle::random_filters(2, 2, 3, 3, rng);
    for (double& b : f.bias()) b = 0.0;
    const double a = rng.uniform(-1, 1);
    const double b = rng.uniform(-1, 1);
    Tensor3 mix(2, 7, 6);
    for (std::size_t k = 0; k < mix.size(); ++k) mix.data()[k] = a * x.data()[k] + b * y.data()[k];
    const Tensor3 lhs = conv2d(mix, f, ConvMode::same);
    const Tensor3 cx = conv2d(x, f, ConvMode::same);
    const Tensor3 cy = conv2d(y, f, ConvMode::same);
    for (std::size_t k = 0; k < lhs.size(); ++k)
      EXPECT_NEAR(lhs.data()[k], a * cx.data()[k] + b * cy.data()[k], 1e-9);
  }
}

TEST(Conv2d, SameModeKeepsSpatialDims) {
  for (int n : {1, 4, 7, 16}) {
    EXPECT_EQ(conv_output_extent(n, 5, ConvMode::same, 1), n);
    EXPECT_EQ(conv_output_extent(n, 3, ConvMode::same, 2), (n + 1) / 2);
  }
  EXPECT_EQ(conv_output_extent(9, 3, ConvMode::valid, 1), 7);
}

TEST(Conv2dGrads, ZeroUpstreamGivesZeroGradients) {
  Rng rng(2);
  const Tensor3 in = oracle::random_tensor(2, 4, 4, rng);
  const FilterStack f = oracle::random_filters(2, 2, 3, 3, rng);
  const ConvGrads g = conv2d_grads(in, f, Tensor3(2, 4, 4), ConvMode::same);
  for (double v : g.filters.weights()) EXPECT_EQ(v, 0.0);
  for (double v : g.filters.bias()) EXPECT_EQ(v, 0.0);
  for (double v : g.input.data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv2dGrads, ScalarProductRule) {
  Tensor3 in(1, 1, 1, 3.0);
  FilterStack f(1, 1, 1, 1);
  f.weights()[0] = 2.0;
  const ConvGrads g = conv2d_grads(in, f, Tensor3(1, 1, 1, 1.0), ConvMode::valid);
  EXPECT_EQ(g.filters.weights()[0], 3.0);
  EXPECT_EQ(g.filters.bias()[0], 1.0);
  EXPECT_EQ(g.input(0, 0, 0), 2.0);
}

TEST(Conv2dGrads, MatchesIndexMapOracle) {
  Rng rng(23);
  for (int trial = 0; trial < 120; ++trial) {
    const int c = 1 + static_cast<int>(rng.uniform() * 3);
    const int o = 1 + static_cast<int>(rng.uniform() * 3);
    const int k = 1 + 2 * static_cast<int>(rng.uniform() * 4);
    const int h = k + static_cast<int>(rng.uniform() * 10);
    const int w = k + static_cast<int>(rng.uniform() * 10);
    const bool same = rng.uniform() < 0.5;
    const int stride = rng.uniform() < 0.3 ? 2 : 1;
    const Tensor3 in = oracle::random_tensor(c, h, w, rng);
    const FilterStack f = oracle::random_filters(o, c, k, k, rng);
    const ConvMode mode = same ? ConvMode::same : ConvMode::valid;
    const Tensor3 out = conv2d(in, f, mode, stride);
    const Tensor3 up = oracle::random_tensor(o, out.height(), out.width(), rng);
    const ConvGrads got = conv2d_grads(in, f, up, mode, stride, true);
    const auto want = oracle::conv2d_grads(in, f, up, same, stride);
    EXPECT_LE(max_abs_diff(got.filters.weights(), want.filters.weights()), 1e-12) << trial;
    EXPECT_LE(max_abs_diff(got.filters.bias(), want.filters.bias()), 1e-12) << trial;
    EXPECT_LE(max_abs_diff(got.input.data(), want.input.data()), 1e-12) << trial;
  }
}

TEST(Conv2dGrads, MatchesFiniteDifferences) {
  Rng rng(29);
  for (int trial = 0; trial < 10; ++trial) {
    Tensor3 in = oracle::random_tensor(2, 4, 4, rng);
    FilterStack f = oracle::random_filters(2, 2, 3, 3, rng);
    const ConvMode mode = trial % 2 == 0 ? ConvMode::same : ConvMode::valid;
    const Tensor3 out = conv2d(in, f, mode);
    const Tensor3 up = oracle::random_tensor(2, out.height(), out.width(), rng);
    const ConvGrads g = conv2d_grads(in, f, up, mode);
    auto objective = [&] { return oracle::dot(conv2d(in, f, mode).data(), up.data()); };
    EXPECT_LT(oracle::worst_fd_error(f.weights(), g.filters.weights(), objective, 200), 1e-6);
    EXPECT_LT(oracle::worst_fd_error(f.bias(), g.filters.bias(), objective, 200), 1e-6);
    EXPECT_LT(oracle::worst_fd_error(in.data(), g.input.data(), objective, 200), 1e-6);
  }
}

TEST(Conv2dGrads, RejectsUpstreamShapeMismatch) {
  const FilterStack f(1, 1, 3, 3);
  EXPECT_THROW(conv2d_grads(Tensor3(1, 4, 4), f, Tensor3(1, 3, 3), ConvMode::same),
               ContractViolation);
}

TEST(Sigmoid, SymmetryPointAndSaturation) {
  EXPECT_EQ(sigmoid(0.0), 0.5);
  EXPECT_NEAR(sigmoid(40.0), 1.0, 1e-12);
  EXPECT_NEAR(sigmoid(-40.0), 0.0, 1e-12);
  EXPECT_TRUE(std::isfinite(sigmoid(-1000.0)));
  EXPECT_TRUE(std::isfinite(sigmoid(1000.0)));
}

TEST(Sigmoid, GradientMatchesFiniteDifferences) {
  Rng rng(31);
  Tensor3 x = oracle::random_tensor(1, 3, 3, rng);
  const Tensor3 up = oracle::random_tensor(1, 3, 3, rng);
  const Tensor3 g = sigmoid_grad(sigmoid_map(x), up);
  auto objective = [&] { return oracle::dot(sigmoid_map(x).data(), up.data()); };
  EXPECT_LT(oracle::worst_fd_error(x.data(), g.data(), objective), 1e-6);
}

TEST(L2Loss, PerfectFitAndSingleResidual) {
  Map2 a(2, 2, 0.5);
  const LossAndGrad zero = l2_loss_and_grad(a, a, {}, 0.0);
  EXPECT_EQ(zero.loss, 0.0);
  for (double v : zero.response_grad.data()) EXPECT_EQ(v, 0.0);

  Map2 r(1, 2);
  r(0, 0) = 1.0;
  const LossAndGrad one = l2_loss_and_grad(r, Map2(1, 2), {}, 0.0);
  EXPECT_EQ(one.loss, 1.0);
  EXPECT_EQ(one.response_grad(0, 0), 2.0);
  EXPECT_EQ(one.response_grad(0, 1), 0.0);
}

TEST(L2Loss, MatchesDirectSummationWithDecay) {
  Rng rng(37);
  for (int trial = 0; trial < 100; ++trial) {
    const Map2 r = oracle::random_map(4, 4, rng);
    const Map2 y = oracle::random_map(4, 4, rng);
    std::vector<double> p(7);
    oracle::fill_uniform(p, rng);
    const std::array<std::span<const double>, 1> params{p};
    const LossAndGrad lg = l2_loss_and_grad(r, y, params, 0.005);
    double want = 0.0;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) want += (r(i, j) - y(i, j)) * (r(i, j) - y(i, j));
    double reg = 0.0;
    for (double v : p) reg += v * v;
    want += 0.005 * reg;
    EXPECT_NEAR(lg.loss, want, 1e-12);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) EXPECT_NEAR(lg.response_grad(i, j), 2.0 * (r(i, j) - y(i, j)), 1e-15);
  }
}

TEST(L2Loss, RejectsShapeMismatch) {
  EXPECT_THROW(l2_loss_and_grad(Map2(2, 2), Map2(2, 3), {}, 0.0), ContractViolation);
}

TEST(SgdStep, ZeroGradientIsAFixedPoint) {
  std::vector<double> p{0.25, -1.5};
  const std::vector<double> before = p;
  const std::vector<double> g(2, 0.0);
  const std::array<std::size_t, 1> sizes{2};
  OptState opt(sizes, 0.1, 0.9, 0.0);
  const std::array<std::span<double>, 1> params{p};
  const std::array<std::span<const double>, 1> grads{g};
  sgd_step(params, grads, opt);
  EXPECT_EQ(p, before);
}

TEST(SgdStep, VanillaWithoutMomentum) {
  std::vector<double> p{0.25, -1.5};
  const std::vector<double> g{2.0, -4.0};
  const std::array<std::size_t, 1> sizes{2};
  OptState opt(sizes, 0.1, 0.0, 0.0);
  const std::array<std::span<double>, 1> params{p};
  const std::array<std::span<const double>, 1> grads{g};
  sgd_step(params, grads, opt);
  EXPECT_DOUBLE_EQ(p[0], 0.25 - 0.2);
  EXPECT_DOUBLE_EQ(p[1], -1.5 + 0.4);
}

TEST(SgdStep, MomentumMatchesUnrolledRecursion) {
  std::vector<double> p{1.0};
  const std::vector<double> g{1.0};
  const std::array<std::size_t, 1> sizes{1};
  OptState opt(sizes, 0.1, 0.9, 0.0);
  const std::array<std::span<double>, 1> params{p};
  const std::array<std::span<const double>, 1> grads{g};
  sgd_step(params, grads, opt);
  EXPECT_NEAR(p[0], 0.9, 1e-15);  // v1 = -0.1
  sgd_step(params, grads, opt);
  EXPECT_NEAR(p[0], 0.9 + (0.9 * -0.1 - 0.1), 1e-15);  // v2 = -0.19
}

TEST(SgdStep, CoupledWeightDecay) {
  std::vector<double> p{2.0};
  const std::vector<double> g{0.5};
  const std::array<std::size_t, 1> sizes{1};
  OptState opt(sizes, 0.1, 0.0, 0.25);
  const std::array<std::span<double>, 1> params{p};
  const std::array<std::span<const double>, 1> grads{g};
  sgd_step(params, grads, opt);
  EXPECT_NEAR(p[0], 2.0 - 0.1 * (0.5 + 2.0 * 0.25 * 2.0), 1e-15);
}

TEST(SgdStep, RejectsShapeMismatch) {
  std::vector<double> p(3);
  const std::vector<double> g(2);
  const std::array<std::size_t, 1> sizes{3};
  OptState opt(sizes, 0.1, 0.9, 0.0);
  const std::array<std::span<double>, 1> params{p};
  const std::array<std::span<const double>, 1> grads{g};
  EXPECT_THROW(sgd_step(params, grads, opt), ContractViolation);
}

TEST(Hann, DegenerateEndpointsAndSymmetry) {
  EXPECT_EQ(hann2d(1, 1)(0, 0), 1.0);
  const Map2 h3 = hann2d(3, 3);
  EXPECT_NEAR(h3(1, 1), 1.0, 1e-15);
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(h3(0, k), 0.0, 1e-15);
    EXPECT_NEAR(h3(2, k), 0.0, 1e-15);
    EXPECT_NEAR(h3(k, 0), 0.0, 1e-15);
    EXPECT_NEAR(h3(k, 2), 0.0, 1e-15);
  }
  const Map2 h5 = hann2d(5, 5);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j) EXPECT_NEAR(h5(i, j), h5(4 - i, 4 - j), 1e-15);
}

TEST(Hann, ValuesInUnitInterval) {
  for (int n : {2, 7, 16, 33}) {
    const Map2 h = hann2d(n, n + 3);
    for (double v : h.data()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(GaussianLabel, PeakSymmetryAndScalarFormula) {
  const Map2 g = gaussian_label(11, 11, {5.0, 5.0}, 20.0, 20.0, 0.1);
  EXPECT_EQ(g(5, 5), 1.0);
  for (int d = 1; d <= 5; ++d) {
    EXPECT_EQ(g(5 + d, 5), g(5 - d, 5));
    EXPECT_EQ(g(5, 5 + d), g(5, 5 - d));
  }
  EXPECT_NEAR(g(5, 7), std::exp(-0.5), 1e-12);
  for (double v : g.data()) {
    EXPECT_GT(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(GaussianLabel, AnisotropicWidths) {
  const Map2 g = gaussian_label(9, 15, {4.0, 7.0}, 10.0, 30.0, 0.1);
  // sigma_r = 1, sigma_c = 3: one row away equals three columns away.
  EXPECT_NEAR(g(5, 7), g(4, 10), 1e-15);
}

TEST(Rng, ReproducibleStreams) {
  Rng a(99);
  Rng b(99);
  for (int k = 0; k < 100; ++k) {
    EXPECT_EQ(a.next_u64(), b.next_u64());
    EXPECT_EQ(a.normal(0.0, 1.0), b.normal(0.0, 1.0));
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}
