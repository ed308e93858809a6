#include <gtest/gtest.h>

#include <cmath>

#include "convtrack/features.hpp"
#include "oracles.hpp"

using namespace convtrack;

namespace {

Frame ramp_frame(int h, int w) {
  Frame f(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) f(y, x) = 0.01 * (3 * x + 7 * y) + 0.001 * ((x * y) % 5);
  return f;
}

// Bilinear sample at continuous pixel-centre coordinates with clamped taps.
double bilinear(const Frame& f, double fx, double fy) {
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const double tx = fx - x0;
  const double ty = fy - y0;
  auto at = [&](int y, int x) {
    return f(std::clamp(y, 0, f.height() - 1), std::clamp(x, 0, f.width() - 1));
  };
  return (1 - ty) * ((1 - tx) * at(y0, x0) + tx * at(y0, x0 + 1)) +
         ty * ((1 - tx) * at(y0 + 1, x0) + tx * at(y0 + 1, x0 + 1));
}

}  // namespace

TEST(CropResize, IntegerAlignedWindowIsTheSubImage) {
  const Frame f = ramp_frame(20, 30);
  const Rect r{5.0, 4.0, 8.0, 6.0};
  const Patch p = crop_resize(f, r, 0.0, 6, 8);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 8; ++j) EXPECT_NEAR(p.pixels(i, j), f(4 + i, 5 + j), 1e-15);
}

TEST(CropResize, ConstantFrameGivesConstantPatch) {
  const Frame f(12, 9, 0.37);
  for (double pad : {0.0, 1.8, 5.0}) {
    const Patch p = crop_resize(f, {-3.0, 7.5, 4.0, 11.0}, pad, 16, 8);
    for (double v : p.pixels.data()) EXPECT_NEAR(v, 0.37, 1e-15);
  }
}

TEST(CropResize, MatchesScalarBilinearOracle) {
  Frame f(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) f(y, x) = y * 4 + x + 0.5 * ((x + y) % 2);
  const Patch p = crop_window(f, 2.0, 2.0, 2.0, 2.0, 4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      // Output pixel centres sit at 1 + (k + 0.5) * 0.5 in frame coordinates.
      const double fx = 1.0 + (j + 0.5) * 0.5 - 0.5;
      const double fy = 1.0 + (i + 0.5) * 0.5 - 0.5;
      EXPECT_NEAR(p.pixels(i, j), bilinear(f, fx, fy), 1e-12);
    }
}

TEST(CropResize, ClampsOutsideTheFrame) {
  const Frame f = ramp_frame(10, 10);
  const Patch p = crop_window(f, 0.0, 0.0, 10.0, 10.0, 10, 10);
  // The top-left quarter of the window lies outside and repeats pixel (0, 0).
  EXPECT_NEAR(p.pixels(0, 0), f(0, 0), 1e-15);
  EXPECT_NEAR(p.pixels(2, 3), f(0, 0), 1e-15);
}

TEST(CropResize, IdempotentWhenOutputMatchesWindowPixels) {
  const Frame f = ramp_frame(24, 24);
  const Rect r{6.0, 5.0, 8.0, 8.0};
  const Patch once = crop_resize(f, r, 0.0, 8, 8);
  Frame as_frame(8, 8);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) as_frame(i, j) = once.pixels(i, j);
  const Patch twice = crop_resize(as_frame, {0.0, 0.0, 8.0, 8.0}, 0.0, 8, 8);
  for (std::size_t k = 0; k < once.pixels.size(); ++k)
    EXPECT_NEAR(twice.pixels.data()[k], once.pixels.data()[k], 1e-15);
}

TEST(CropResize, RejectsDegenerateTarget) {
  const Frame f(8, 8);
  EXPECT_THROW(crop_resize(f, {1.0, 1.0, 0.5, 4.0}, 1.8, 8, 8), ContractViolation);
  EXPECT_THROW(crop_resize(f, {1.0, 1.0, 4.0, 4.0}, -0.1, 8, 8), ContractViolation);
}

TEST(Extract, GrayIsIdentity) {
  Rng rng(1);
  const Map2 patch = oracle::random_map(8, 8, rng, 0.0, 1.0);
  const Tensor3 out = extract(Extractor::gray(), patch);
  ASSERT_EQ(out.channels(), 1);
  for (std::size_t k = 0; k < patch.size(); ++k) EXPECT_EQ(out.data()[k], patch.data()[k]);
}

TEST(Extract, GradOfConstantIsZero) {
  const Tensor3 out = extract(Extractor::grad(), Map2(8, 8, 0.6));
  ASSERT_EQ(out.channels(), 3);
  for (double v : out.data()) EXPECT_EQ(v, 0.0);
}

TEST(Extract, GradOfColumnRampHasUnitInteriorSlope) {
  Map2 patch(6, 7);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 7; ++j) patch(i, j) = j;
  const Tensor3 out = extract(Extractor::grad(), patch);
  for (int i = 0; i < 6; ++i)
    for (int j = 1; j < 6; ++j) {
      EXPECT_NEAR(out(0, i, j), 1.0, 1e-15);
      EXPECT_NEAR(out(1, i, j), 0.0, 1e-15);
      EXPECT_NEAR(out(2, i, j), 1.0, 1e-15);
    }
  // Replicated borders halve the one-sided difference.
  EXPECT_NEAR(out(0, 0, 0), 0.5, 1e-15);
}

TEST(Extract, GradIsTranslationEquivariantInTheInterior) {
  Rng rng(4);
  const Map2 patch = oracle::random_map(10, 10, rng);
  Map2 shifted(10, 10);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) shifted(i, j) = patch(i, std::max(j - 1, 0));
  const Tensor3 a = extract(Extractor::grad(), patch);
  const Tensor3 b = extract(Extractor::grad(), shifted);
  for (int c = 0; c < 3; ++c)
    for (int i = 1; i < 9; ++i)
      for (int j = 2; j < 9; ++j) EXPECT_EQ(b(c, i, j), a(c, i, j - 1));
}

TEST(Extract, OutputDimsFollowCellStride) {
  const Extractor tiny = Extractor::tinycnn(4, 5, 3, 0.3, 9);
  for (int n : {8, 16, 24}) {
    const Map2 patch(n, n + 8, 0.3);
    for (const Extractor& e : {Extractor::gray(), Extractor::grad(), tiny}) {
      const Tensor3 out = extract(e, patch);
      EXPECT_EQ(out.height() * e.cell_stride(), n);
      EXPECT_EQ(out.width() * e.cell_stride(), n + 8);
      EXPECT_EQ(out.channels(), e.output_channels());
    }
  }
  EXPECT_THROW(extract(tiny, Map2(10, 8)), ContractViolation);
}

TEST(TinyCnn, ZeroUpstreamGivesZeroGradients) {
  const Extractor e = Extractor::tinycnn(3, 2, 3, 0.5, 2);
  Rng rng(2);
  const Map2 patch = oracle::random_map(8, 8, rng);
  const TinyCnnGrads g = tinycnn_backward(e, patch, Tensor3(2, 2, 2));
  for (double v : g.conv1.weights()) EXPECT_EQ(v, 0.0);
  for (double v : g.conv2.weights()) EXPECT_EQ(v, 0.0);
}

TEST(TinyCnn, IdentitySecondLayerReducesToFirstLayerGradient) {
  // conv2 as a 1x1 identity: out = sigmoid(conv1(x)) sampled at stride 2.
  Extractor e = Extractor::tinycnn(2, 2, 3, 0.5, 6);
  e.conv2 = FilterStack(2, 2, 1, 1);
  e.conv2.weight(0, 0, 0, 0) = 1.0;
  e.conv2.weight(1, 1, 0, 0) = 1.0;
  Rng rng(6);
  const Map2 patch = oracle::random_map(8, 8, rng);
  const Tensor3 up = oracle::random_tensor(2, 2, 2, rng);
  const TinyCnnGrads g = tinycnn_backward(e, patch, up);

  const Tensor3 hidden = sigmoid_map(conv2d(as_tensor(patch), e.conv1, ConvMode::same, 2));
  Tensor3 up_hidden(2, 4, 4);
  for (int c = 0; c < 2; ++c)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) up_hidden(c, 2 * i, 2 * j) = up(c, i, j);
  const Tensor3 pre = sigmoid_grad(hidden, up_hidden);
  const ConvGrads want = conv2d_grads(as_tensor(patch), e.conv1, pre, ConvMode::same, 2, false);
  for (std::size_t k = 0; k < want.filters.weights().size(); ++k)
    EXPECT_NEAR(g.conv1.weights()[k], want.filters.weights()[k], 1e-14);
}

TEST(TinyCnn, GradientsMatchFiniteDifferences) {
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    Extractor e = Extractor::tinycnn(3, 2, 3, 0.6, 100 + trial);
    oracle::fill_uniform(e.conv1.bias(), rng, -0.3, 0.3);
    oracle::fill_uniform(e.conv2.bias(), rng, -0.3, 0.3);
    const Map2 patch = oracle::random_map(8, 8, rng);
    const Tensor3 up = oracle::random_tensor(2, 2, 2, rng);
    const TinyCnnGrads g = tinycnn_backward(e, patch, up);
    auto objective = [&] { return oracle::dot(extract(e, patch).data(), up.data()); };
    EXPECT_LT(oracle::worst_fd_error(e.conv1.weights(), g.conv1.weights(), objective, 100), 1e-5);
    EXPECT_LT(oracle::worst_fd_error(e.conv1.bias(), g.conv1.bias(), objective), 1e-5);
    EXPECT_LT(oracle::worst_fd_error(e.conv2.weights(), g.conv2.weights(), objective, 100), 1e-5);
    EXPECT_LT(oracle::worst_fd_error(e.conv2.bias(), g.conv2.bias(), objective), 1e-5);
  }
}

TEST(TinyCnn, RejectsUpstreamShapeMismatch) {
  const Extractor e = Extractor::tinycnn(3, 2, 3, 0.5, 2);
  EXPECT_THROW(tinycnn_backward(e, Map2(8, 8), Tensor3(2, 4, 4)), ContractViolation);
  EXPECT_THROW(tinycnn_backward(Extractor::grad(), Map2(8, 8), Tensor3(3, 8, 8)), ContractViolation);
}

TEST(Window, OnesIsIdentityAndBordersVanish) {
  Rng rng(10);
  const Tensor3 feat = oracle::random_tensor(2, 3, 3, rng);
  const Tensor3 same = window(feat, Map2(3, 3, 1.0));
  EXPECT_TRUE(same == feat);
  const Tensor3 w = window(feat, hann2d(3, 3));
  for (int c = 0; c < 2; ++c) {
    EXPECT_NEAR(w(c, 1, 1), feat(c, 1, 1), 1e-15);
    EXPECT_NEAR(w(c, 0, 1), 0.0, 1e-15);
    EXPECT_NEAR(w(c, 2, 2), 0.0, 1e-15);
  }
}

TEST(Window, ElementwiseOracleAndNeverGrows) {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor3 feat = oracle::random_tensor(3, 6, 5, rng);
    const Map2 hann = hann2d(6, 5);
    const Tensor3 w = window(feat, hann);
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 5; ++j) {
          EXPECT_EQ(w(c, i, j), feat(c, i, j) * hann(i, j));
          EXPECT_LE(std::abs(w(c, i, j)), std::abs(feat(c, i, j)));
        }
  }
  EXPECT_THROW(window(Tensor3(1, 3, 3), Map2(3, 4)), ContractViolation);
}

TEST(Luminance, StandardWeights) {
  EXPECT_NEAR(luminance(1.0, 1.0, 1.0), 1.0, 1e-15);
  EXPECT_NEAR(luminance(1.0, 0.0, 0.0), 0.299, 1e-15);
  EXPECT_NEAR(luminance(0.0, 1.0, 0.0), 0.587, 1e-15);
  EXPECT_NEAR(luminance(0.0, 0.0, 1.0), 0.114, 1e-15);
}
