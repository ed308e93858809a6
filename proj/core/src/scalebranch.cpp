#include "convtrack/scalebranch.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace convtrack {

void ScaleConfig::validate() const {
  require(count >= 1 && count % 2 == 1, "ScaleConfig: scale count must be odd and positive");
  require(step > 1.0, "ScaleConfig: scale step must exceed 1");
  const int grid = static_cast<int>(std::lround(std::sqrt(static_cast<double>(descriptor_dim))));
  require(descriptor_dim > 0 && grid * grid == descriptor_dim,
          "ScaleConfig: descriptor_dim must be a perfect square");
  require(template_size >= grid && template_size % grid == 0,
          "ScaleConfig: template size must be a multiple of the pooling grid");
  require(learning_rate > 0.0, "ScaleConfig: learning rate must be positive");
  require(momentum >= 0.0 && momentum < 1.0, "ScaleConfig: momentum must lie in [0, 1)");
  require(weight_decay >= 0.0, "ScaleConfig: weight decay must be nonnegative");
  require(sigma_cells > 0.0, "ScaleConfig: sigma must be positive");
  require(train_radius >= 0 && train_radius <= half(),
          "ScaleConfig: train radius must lie in [0, (S-1)/2]");
  require(init_steps >= 0, "ScaleConfig: init steps must be nonnegative");
}

std::vector<std::pair<double, double>> pyramid_sizes(double width, double height,
                                                     const ScaleConfig& cfg) {
  require(width > 0.0 && height > 0.0, "pyramid_sizes: base size must be positive");
  require(cfg.count >= 1 && cfg.count % 2 == 1, "pyramid_sizes: scale count must be odd");
  std::vector<std::pair<double, double>> sizes;
  sizes.reserve(static_cast<std::size_t>(cfg.count));
  const int half = cfg.half();
  for (int n = -half; n <= half; ++n) {
    const double f = std::pow(cfg.step, n);
    sizes.emplace_back(f * width, f * height);
  }
  return sizes;
}

namespace {

void pooled_gradient(const Map2& sample, int grid, std::span<double> out) {
  const int t = sample.height();
  const int block = t / grid;
  std::fill(out.begin(), out.end(), 0.0);
  for (int i = 0; i < t; ++i) {
    const int up = std::max(i - 1, 0);
    const int down = std::min(i + 1, t - 1);
    for (int j = 0; j < t; ++j) {
      const int left = std::max(j - 1, 0);
      const int right = std::min(j + 1, t - 1);
      const double gx = 0.5 * (sample(i, right) - sample(i, left));
      const double gy = 0.5 * (sample(down, j) - sample(up, j));
      out[(i / block) * grid + j / block] += std::sqrt(gx * gx + gy * gy);
    }
  }
  const double inv = 1.0 / (block * block);
  for (double& v : out) v *= inv;
}

}  // namespace

Map2 scale_descriptors(const Frame& frame, double center_x, double center_y, double base_w,
                       double base_h, const ScaleConfig& cfg) {
  require(base_w > 0.0 && base_h > 0.0, "scale_descriptors: base size must be positive");
  const int grid = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cfg.descriptor_dim))));
  Map2 desc(cfg.count, cfg.descriptor_dim);
  const auto sizes = pyramid_sizes(base_w, base_h, cfg);
  for (int k = 0; k < cfg.count; ++k) {
    const double w = std::max(sizes[k].first, 2.0);
    const double h = std::max(sizes[k].second, 2.0);
    const Patch sample =
        crop_window(frame, center_x, center_y, w, h, cfg.template_size, cfg.template_size);
    pooled_gradient(sample.pixels, grid,
                    desc.data().subspan(static_cast<std::size_t>(k) * cfg.descriptor_dim,
                                        static_cast<std::size_t>(cfg.descriptor_dim)));
  }
  // One global contrast normalisation keeps the relative energy between rows.
  double norm_sum = 0.0;
  for (int k = 0; k < cfg.count; ++k) {
    double sq = 0.0;
    for (int d = 0; d < cfg.descriptor_dim; ++d) sq += desc(k, d) * desc(k, d);
    norm_sum += std::sqrt(sq);
  }
  const double mean_norm = norm_sum / cfg.count;
  if (mean_norm > 1e-12)
    for (double& v : desc.data()) v /= mean_norm;
  // Centring removes the common level the all-positive rows share, which
  // would otherwise dominate the curvature of the training loss.
  for (int d = 0; d < cfg.descriptor_dim; ++d) {
    double mean = 0.0;
    for (int k = 0; k < cfg.count; ++k) mean += desc(k, d);
    mean /= cfg.count;
    for (int k = 0; k < cfg.count; ++k) desc(k, d) -= mean;
  }
  return desc;
}

ScaleFilter::ScaleFilter(const ScaleConfig& cfg)
    : taps(1, cfg.descriptor_dim, 1, cfg.count) {
  const std::array<std::size_t, 1> sizes{taps.weights().size()};
  opt = OptState(sizes, cfg.learning_rate, cfg.momentum, cfg.weight_decay);
}

namespace {

Tensor3 scale_input(const Map2& desc) {
  Tensor3 t(desc.width(), 1, desc.height());
  for (int d = 0; d < desc.width(); ++d)
    for (int k = 0; k < desc.height(); ++k) t(d, 0, k) = desc(k, d);
  return t;
}

void check_shapes(const ScaleFilter& filter, const Map2& desc, const char* who) {
  require(filter.taps.in_channels() == desc.width() && filter.taps.kernel_w() == desc.height() &&
              filter.taps.out_channels() == 1 && filter.taps.kernel_h() == 1,
          std::string(who) + ": filter and descriptor shapes differ");
}

}  // namespace

std::vector<double> scale_response(const ScaleFilter& filter, const Map2& desc) {
  check_shapes(filter, desc, "scale_response");
  const Tensor3 out = conv2d(scale_input(desc), filter.taps, ConvMode::same);
  std::vector<double> scores(static_cast<std::size_t>(desc.height()));
  for (int k = 0; k < desc.height(); ++k) scores[k] = out(0, 0, k);
  return scores;
}

ScaleGrad scale_gradient(const ScaleFilter& filter, const Map2& desc, double true_offset_cells,
                         const ScaleConfig& cfg) {
  check_shapes(filter, desc, "scale_gradient");
  require(std::abs(true_offset_cells) <= cfg.half(),
          "scale_gradient: offset outside the scale pyramid");
  const Tensor3 input = scale_input(desc);
  const Tensor3 out = conv2d(input, filter.taps, ConvMode::same);
  const double centre = cfg.half() + true_offset_cells;
  const double two_sigma_sq = 2.0 * cfg.sigma_cells * cfg.sigma_cells;

  Tensor3 upstream(1, 1, desc.height());
  ScaleGrad g;
  for (int k = 0; k < desc.height(); ++k) {
    const double label = std::exp(-(k - centre) * (k - centre) / two_sigma_sq);
    const double r = out(0, 0, k) - label;
    g.loss += r * r;
    upstream(0, 0, k) = 2.0 * r;
  }
  double reg = 0.0;
  for (double w : filter.taps.weights()) reg += w * w;
  g.loss += cfg.weight_decay * reg;
  g.taps = conv2d_grads(input, filter.taps, upstream, ConvMode::same, 1, false).filters;
  return g;
}

double scale_train(ScaleFilter& filter, const Map2& desc, double true_offset_cells,
                   const ScaleConfig& cfg) {
  const ScaleGrad g = scale_gradient(filter, desc, true_offset_cells, cfg);
  filter.opt.learning_rate = cfg.learning_rate;
  filter.opt.momentum = cfg.momentum;
  filter.opt.weight_decay = cfg.weight_decay;
  const std::array<std::span<double>, 1> params{filter.taps.weights()};
  const std::array<std::span<const double>, 1> grads{g.taps.weights()};
  sgd_step(params, grads, filter.opt);
  return g.loss;
}

void rehearse_scale(ScaleFilter& filter, const Frame& frame, const Rect& box, int passes,
                    const ScaleConfig& cfg) {
  require(passes >= 0, "rehearse_scale: passes must be nonnegative");
  std::vector<Map2> shifted;
  for (int j = -cfg.train_radius; j <= cfg.train_radius; ++j) {
    const double f = std::pow(cfg.step, j);
    shifted.push_back(
        scale_descriptors(frame, box.center_x(), box.center_y(), box.w * f, box.h * f, cfg));
  }
  for (int pass = 0; pass < passes; ++pass)
    for (int j = -cfg.train_radius; j <= cfg.train_radius; ++j)
      scale_train(filter, shifted[j + cfg.train_radius], -j, cfg);
}

double parabolic_offset(double left, double centre, double right) {
  const double denom = left - 2.0 * centre + right;
  if (!(denom < 0.0)) return 0.0;
  const double offset = (left - right) / (2.0 * denom);
  return std::clamp(offset, -0.5, 0.5);
}

double estimate_scale(const ScaleFilter& filter, const Map2& desc, const ScaleConfig& cfg) {
  const auto scores = scale_response(filter, desc);
  const auto best = static_cast<int>(std::max_element(scores.begin(), scores.end()) - scores.begin());
  double refined = best;
  if (best > 0 && best + 1 < static_cast<int>(scores.size()))
    refined += parabolic_offset(scores[best - 1], scores[best], scores[best + 1]);
  const double n = std::clamp(refined - cfg.half(), -static_cast<double>(cfg.half()),
                              static_cast<double>(cfg.half()));
  return std::pow(cfg.step, n);
}

}  // namespace convtrack
