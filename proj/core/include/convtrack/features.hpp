#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "convtrack/numkit.hpp"

namespace convtrack {

/// Grayscale image with intensities in [0, 1].
class Frame {
 public:
  Frame() = default;
  Frame(int height, int width, double fill = 0.0);

  int height() const { return height_; }
  int width() const { return width_; }
  bool empty() const { return pixels_.empty(); }

  double& operator()(int y, int x) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  double operator()(int y, int x) const {
    return pixels_[static_cast<std::size_t>(y) * width_ + x];
  }
  std::span<double> pixels() { return pixels_; }
  std::span<const double> pixels() const { return pixels_; }

  friend bool operator==(const Frame&, const Frame&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> pixels_;
};

/// Axis-aligned box; (x, y) is the top-left corner in continuous pixel
/// coordinates where pixel (r, c) covers [c, c+1) x [r, r+1).
struct Rect {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double center_x() const { return x + 0.5 * w; }
  double center_y() const { return y + 0.5 * h; }
  static Rect from_center(double cx, double cy, double w, double h) {
    return {cx - 0.5 * w, cy - 0.5 * h, w, h};
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Where a resampled patch came from: frame coordinate of the window's
/// top-left corner and frame pixels per patch pixel along each axis.
struct PatchGeometry {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double scale_x = 1.0;
  double scale_y = 1.0;
};

struct Patch {
  Map2 pixels;
  PatchGeometry geometry;
};

/// Crops the window of size (w*(1+padding), h*(1+padding)) centred on the
/// target and bilinearly resamples it to out_h x out_w. Samples outside the
/// frame are clamped to the nearest border pixel.
Patch crop_resize(const Frame& frame, const Rect& target, double padding, int out_h, int out_w);

/// Same sampling for an explicit window size.
Patch crop_window(const Frame& frame, double center_x, double center_y, double window_w,
                  double window_h, int out_h, int out_w);

enum class ExtractorKind { gray, grad, tinycnn };

std::string_view to_string(ExtractorKind kind);
ExtractorKind parse_extractor_kind(std::string_view name);

/// Feature extractor. gray and grad are fixed; tinycnn is two stride-2 "same"
/// convolutions with a sigmoid in between and is trainable.
struct Extractor {
  ExtractorKind kind = ExtractorKind::grad;
  FilterStack conv1;  // tinycnn only
  FilterStack conv2;  // tinycnn only

  int cell_stride() const { return kind == ExtractorKind::tinycnn ? 4 : 1; }
  int output_channels() const;

  static Extractor gray();
  static Extractor grad();
  /// Zero-mean Gaussian init with the given std; biases zero.
  static Extractor tinycnn(int hidden_channels, int output_channels, int kernel, double init_std,
                           std::uint64_t seed);
};

Tensor3 extract(const Extractor& extractor, const Map2& patch);

struct TinyCnnGrads {
  FilterStack conv1;
  FilterStack conv2;
};

/// Analytic gradients of sum(upstream * extract(tinycnn, patch)) with respect
/// to both convolution layers.
TinyCnnGrads tinycnn_backward(const Extractor& extractor, const Map2& patch,
                              const Tensor3& upstream);

/// Multiplies every channel by the window.
Tensor3 window(const Tensor3& feat, const Map2& hann);

/// Luminance 0.299 R + 0.587 G + 0.114 B.
inline double luminance(double r, double g, double b) { return 0.299 * r + 0.587 * g + 0.114 * b; }

}  // namespace convtrack
