#include "convtrack/features.hpp"

#include <algorithm>
#include <cmath>

namespace convtrack {

Frame::Frame(int height, int width, double fill) : height_(height), width_(width) {
  require(height > 0 && width > 0, "Frame: dimensions must be positive");
  pixels_.assign(static_cast<std::size_t>(height) * width, fill);
}

Patch crop_window(const Frame& frame, double center_x, double center_y, double window_w,
                  double window_h, int out_h, int out_w) {
  require(!frame.empty(), "crop_window: empty frame");
  require(out_h > 0 && out_w > 0, "crop_window: output size must be positive");
  require(window_w > 0.0 && window_h > 0.0, "crop_window: window must have positive size");

  Patch patch;
  patch.pixels = Map2(out_h, out_w);
  patch.geometry.origin_x = center_x - 0.5 * window_w;
  patch.geometry.origin_y = center_y - 0.5 * window_h;
  patch.geometry.scale_x = window_w / out_w;
  patch.geometry.scale_y = window_h / out_h;

  const int fh = frame.height();
  const int fw = frame.width();
  // Bilinear taps per output column are shared by every row.
  std::vector<int> x0(out_w), x1(out_w);
  std::vector<double> tx(out_w);
  for (int c = 0; c < out_w; ++c) {
    // Continuous sample position converted to pixel-centre index space.
    const double fx = patch.geometry.origin_x + (c + 0.5) * patch.geometry.scale_x - 0.5;
    const double fl = std::floor(fx);
    tx[c] = fx - fl;
    const int xi = static_cast<int>(fl);
    x0[c] = std::clamp(xi, 0, fw - 1);
    x1[c] = std::clamp(xi + 1, 0, fw - 1);
  }
  for (int r = 0; r < out_h; ++r) {
    const double fy = patch.geometry.origin_y + (r + 0.5) * patch.geometry.scale_y - 0.5;
    const double fl = std::floor(fy);
    const double ty = fy - fl;
    const int yi = static_cast<int>(fl);
    const int y0 = std::clamp(yi, 0, fh - 1);
    const int y1 = std::clamp(yi + 1, 0, fh - 1);
    for (int c = 0; c < out_w; ++c) {
      const double top = frame(y0, x0[c]) + tx[c] * (frame(y0, x1[c]) - frame(y0, x0[c]));
      const double bottom = frame(y1, x0[c]) + tx[c] * (frame(y1, x1[c]) - frame(y1, x0[c]));
      patch.pixels(r, c) = top + ty * (bottom - top);
    }
  }
  return patch;
}

Patch crop_resize(const Frame& frame, const Rect& target, double padding, int out_h, int out_w) {
  require(padding >= 0.0, "crop_resize: padding must be nonnegative");
  require(target.w >= 1.0 && target.h >= 1.0, "crop_resize: target smaller than one pixel");
  return crop_window(frame, target.center_x(), target.center_y(), target.w * (1.0 + padding),
                     target.h * (1.0 + padding), out_h, out_w);
}

std::string_view to_string(ExtractorKind kind) {
  switch (kind) {
    case ExtractorKind::gray: return "gray";
    case ExtractorKind::grad: return "grad";
    case ExtractorKind::tinycnn: return "tinycnn";
  }
  return "grad";
}

ExtractorKind parse_extractor_kind(std::string_view name) {
  if (name == "gray") return ExtractorKind::gray;
  if (name == "grad") return ExtractorKind::grad;
  if (name == "tinycnn") return ExtractorKind::tinycnn;
  throw ContractViolation("unknown extractor kind '" + std::string(name) + "'");
}

int Extractor::output_channels() const {
  switch (kind) {
    case ExtractorKind::gray: return 1;
    case ExtractorKind::grad: return 3;
    case ExtractorKind::tinycnn: return conv2.out_channels();
  }
  return 0;
}

Extractor Extractor::gray() { return Extractor{ExtractorKind::gray, {}, {}}; }
Extractor Extractor::grad() { return Extractor{ExtractorKind::grad, {}, {}}; }

Extractor Extractor::tinycnn(int hidden_channels, int output_channels, int kernel,
                             double init_std, std::uint64_t seed) {
  Extractor e;
  e.kind = ExtractorKind::tinycnn;
  e.conv1 = FilterStack(hidden_channels, 1, kernel, kernel);
  e.conv2 = FilterStack(output_channels, hidden_channels, kernel, kernel);
  Rng rng(seed);
  for (double& w : e.conv1.weights()) w = rng.normal(0.0, init_std);
  for (double& w : e.conv2.weights()) w = rng.normal(0.0, init_std);
  return e;
}

namespace {

Tensor3 gradient_channels(const Map2& patch) {
  const int h = patch.height();
  const int w = patch.width();
  Tensor3 out(3, h, w);
  for (int i = 0; i < h; ++i) {
    const int up = std::max(i - 1, 0);
    const int down = std::min(i + 1, h - 1);
    for (int j = 0; j < w; ++j) {
      const int left = std::max(j - 1, 0);
      const int right = std::min(j + 1, w - 1);
      const double gx = 0.5 * (patch(i, right) - patch(i, left));
      const double gy = 0.5 * (patch(down, j) - patch(up, j));
      out(0, i, j) = gx;
      out(1, i, j) = gy;
      out(2, i, j) = std::sqrt(gx * gx + gy * gy);
    }
  }
  return out;
}

struct TinyCnnForward {
  Tensor3 input;
  Tensor3 hidden;  // after sigmoid
  Tensor3 output;
};

TinyCnnForward tinycnn_forward(const Extractor& e, const Map2& patch) {
  TinyCnnForward f;
  f.input = as_tensor(patch);
  f.hidden = sigmoid_map(conv2d(f.input, e.conv1, ConvMode::same, 2));
  f.output = conv2d(f.hidden, e.conv2, ConvMode::same, 2);
  return f;
}

}  // namespace

Tensor3 extract(const Extractor& extractor, const Map2& patch) {
  const int stride = extractor.cell_stride();
  require(patch.height() % stride == 0 && patch.width() % stride == 0,
          "extract: patch size not divisible by the extractor cell stride");
  switch (extractor.kind) {
    case ExtractorKind::gray: return as_tensor(patch);
    case ExtractorKind::grad: return gradient_channels(patch);
    case ExtractorKind::tinycnn: return tinycnn_forward(extractor, patch).output;
  }
  return {};
}

TinyCnnGrads tinycnn_backward(const Extractor& extractor, const Map2& patch,
                              const Tensor3& upstream) {
  require(extractor.kind == ExtractorKind::tinycnn, "tinycnn_backward: extractor is not tinycnn");
  const TinyCnnForward f = tinycnn_forward(extractor, patch);
  require(upstream.same_shape(f.output), "tinycnn_backward: upstream shape mismatch");
  ConvGrads g2 = conv2d_grads(f.hidden, extractor.conv2, upstream, ConvMode::same, 2, true);
  const Tensor3 pre = sigmoid_grad(f.hidden, g2.input);
  ConvGrads g1 = conv2d_grads(f.input, extractor.conv1, pre, ConvMode::same, 2, false);
  return {std::move(g1.filters), std::move(g2.filters)};
}

Tensor3 window(const Tensor3& feat, const Map2& hann) {
  require(hann.height() == feat.height() && hann.width() == feat.width(),
          "window: Hann window and feature spatial dims differ");
  Tensor3 out = feat;
  const auto w = hann.data();
  for (int c = 0; c < out.channels(); ++c) {
    auto plane = out.channel(c);
    for (std::size_t k = 0; k < plane.size(); ++k) plane[k] *= w[k];
  }
  return out;
}

}  // namespace convtrack
