#pragma once

#include <utility>
#include <vector>

#include "convtrack/features.hpp"
#include "convtrack/numkit.hpp"

namespace convtrack {

struct ScaleConfig {
  int count = 33;            // S, odd
  double step = 1.02;        // a > 1
  int descriptor_dim = 16;   // perfect square: pooling grid is sqrt(dim) x sqrt(dim)
  int template_size = 16;    // side of the resampled scale sample
  double learning_rate = 3e-3;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double sigma_cells = 1.0;  // label width over scale indices
  int train_radius = 4;      // offsets -r..r are rehearsed when the filter is (re)trained
  int init_steps = 30;       // passes over the rehearsal set on the first frame

  int half() const { return (count - 1) / 2; }
  void validate() const;
};

/// (w_n, h_n) = (a^n W, a^n H) for n = -(S-1)/2 .. (S-1)/2.
std::vector<std::pair<double, double>> pyramid_sizes(double width, double height,
                                                     const ScaleConfig& cfg);

/// S x descriptor_dim matrix; row k holds the pooled gradient-magnitude
/// descriptor of the pyramid sample n = k - (S-1)/2. Contrast is normalised by
/// the mean row norm and every column is centred over the scales.
Map2 scale_descriptors(const Frame& frame, double center_x, double center_y, double base_w,
                       double base_h, const ScaleConfig& cfg);

/// 1-D convolution along the scale axis: the descriptor columns are input
/// channels and the kernel spans S taps, so a shifted pyramid shifts the response.
struct ScaleFilter {
  ScaleFilter() = default;
  explicit ScaleFilter(const ScaleConfig& cfg);

  FilterStack taps;  // 1 x descriptor_dim x 1 x S, bias fixed at zero
  OptState opt;
};

/// score[k] = sum_{m,d} taps[d][m] * desc[k + m - (S-1)/2][d], zero outside the pyramid.
std::vector<double> scale_response(const ScaleFilter& filter, const Map2& desc);

struct ScaleGrad {
  double loss = 0.0;  // includes lambda*|weights|^2
  FilterStack taps;   // gradient of the data term only
};

/// Loss of the scale filter against the Gaussian label centred at
/// (S-1)/2 + true_offset_cells and the gradient of its data term.
ScaleGrad scale_gradient(const ScaleFilter& filter, const Map2& desc, double true_offset_cells,
                         const ScaleConfig& cfg);

/// One SGD step on sum((score - label)^2) + lambda*|weights|^2 where the label
/// is a Gaussian over scale indices centred at (S-1)/2 + true_offset_cells.
double scale_train(ScaleFilter& filter, const Map2& desc, double true_offset_cells,
                   const ScaleConfig& cfg);

/// Trains on pyramids around `box` whose base is shifted by a^j, j = -r..r,
/// each labelled with offset -j; `passes` sweeps over the shifts.
void rehearse_scale(ScaleFilter& filter, const Frame& frame, const Rect& box, int passes,
                    const ScaleConfig& cfg);

/// a^(n*) where n* is the parabolically refined argmax offset of the response.
double estimate_scale(const ScaleFilter& filter, const Map2& desc, const ScaleConfig& cfg);

/// Sub-cell offset of a three-sample peak: (left - right) / (2 (left - 2 centre + right)),
/// clamped to [-0.5, 0.5]; zero when the samples do not form a maximum.
double parabolic_offset(double left, double centre, double right);

}  // namespace convtrack
