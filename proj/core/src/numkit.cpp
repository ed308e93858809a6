#include "convtrack/numkit.hpp"

#include <cmath>
#include <numbers>

namespace convtrack {

Tensor3::Tensor3(int channels, int height, int width, double fill)
    : channels_(channels), height_(height), width_(width) {
  require(channels > 0 && height > 0 && width > 0, "Tensor3: dimensions must be positive");
  data_.assign(static_cast<std::size_t>(channels) * height * width, fill);
}

Map2::Map2(int height, int width, double fill) : height_(height), width_(width) {
  require(height > 0 && width > 0, "Map2: dimensions must be positive");
  data_.assign(static_cast<std::size_t>(height) * width, fill);
}

Tensor3 as_tensor(const Map2& map) {
  Tensor3 out(1, map.height(), map.width());
  std::copy(map.data().begin(), map.data().end(), out.data().begin());
  return out;
}

Map2 as_map(const Tensor3& tensor) {
  require(tensor.channels() == 1, "as_map: tensor must have exactly one channel");
  Map2 out(tensor.height(), tensor.width());
  std::copy(tensor.data().begin(), tensor.data().end(), out.data().begin());
  return out;
}

FilterStack::FilterStack(int out_channels, int in_channels, int kernel_h, int kernel_w)
    : out_channels_(out_channels),
      in_channels_(in_channels),
      kernel_h_(kernel_h),
      kernel_w_(kernel_w) {
  require(out_channels > 0 && in_channels > 0 && kernel_h > 0 && kernel_w > 0,
          "FilterStack: dimensions must be positive");
  require(kernel_h % 2 == 1 && kernel_w % 2 == 1, "FilterStack: kernel sides must be odd");
  weights_.assign(static_cast<std::size_t>(out_channels) * in_channels * kernel_h * kernel_w, 0.0);
  bias_.assign(static_cast<std::size_t>(out_channels), 0.0);
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor3 sigmoid_map(const Tensor3& x) {
  Tensor3 y = x;
  for (double& v : y.data()) v = sigmoid(v);
  return y;
}

Tensor3 sigmoid_grad(const Tensor3& y, const Tensor3& upstream) {
  require(y.same_shape(upstream), "sigmoid_grad: shape mismatch");
  Tensor3 g = upstream;
  auto gy = g.data();
  auto yy = y.data();
  for (std::size_t k = 0; k < gy.size(); ++k) gy[k] *= yy[k] * (1.0 - yy[k]);
  return g;
}

LossAndGrad l2_loss_and_grad(const Map2& response, const Map2& label,
                             std::span<const std::span<const double>> params, double weight_decay) {
  require(response.same_shape(label), "l2_loss_and_grad: response and label shapes differ");
  LossAndGrad out;
  out.response_grad = Map2(response.height(), response.width());
  auto r = response.data();
  auto y = label.data();
  auto g = out.response_grad.data();
  double loss = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double d = r[k] - y[k];
    loss += d * d;
    g[k] = 2.0 * d;
  }
  if (weight_decay != 0.0) {
    double reg = 0.0;
    for (auto p : params)
      for (double v : p) reg += v * v;
    loss += weight_decay * reg;
  }
  out.loss = loss;
  return out;
}

OptState::OptState(std::span<const std::size_t> param_sizes, double learning_rate_,
                   double momentum_, double weight_decay_)
    : learning_rate(learning_rate_), momentum(momentum_), weight_decay(weight_decay_) {
  require(momentum_ >= 0.0 && momentum_ < 1.0, "OptState: momentum must lie in [0, 1)");
  require(weight_decay_ >= 0.0, "OptState: weight decay must be nonnegative");
  velocity.reserve(param_sizes.size());
  for (std::size_t n : param_sizes) velocity.emplace_back(n, 0.0);
}

void OptState::reset_velocity() {
  for (auto& v : velocity) std::fill(v.begin(), v.end(), 0.0);
}

void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, OptState& opt) {
  require(params.size() == grads.size() && params.size() == opt.velocity.size(),
          "sgd_step: parameter, gradient and velocity lists differ in length");
  for (std::size_t a = 0; a < params.size(); ++a) {
    auto p = params[a];
    auto g = grads[a];
    auto& v = opt.velocity[a];
    require(p.size() == g.size() && p.size() == v.size(),
            "sgd_step: parameter, gradient and velocity shapes differ");
    const double decay = 2.0 * opt.weight_decay;
    const double lr = opt.learning_rate;
    for (std::size_t k = 0; k < p.size(); ++k) {
      v[k] = opt.momentum * v[k] - lr * (g[k] + decay * p[k]);
      p[k] += v[k];
    }
  }
}

namespace {
std::vector<double> hann1d(int n) {
  std::vector<double> w(static_cast<std::size_t>(n), 1.0);
  if (n == 1) return w;
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / (n - 1)));
  return w;
}
}  // namespace

Map2 hann2d(int height, int width) {
  require(height >= 1 && width >= 1, "hann2d: dimensions must be positive");
  const auto wr = hann1d(height);
  const auto wc = hann1d(width);
  Map2 out(height, width);
  for (int i = 0; i < height; ++i)
    for (int j = 0; j < width; ++j) out(i, j) = wr[i] * wc[j];
  return out;
}

Map2 gaussian_label(int height, int width, CellPoint center, double target_h_cells,
                    double target_w_cells, double sigma_factor) {
  require(sigma_factor > 0.0, "gaussian_label: sigma_factor must be positive");
  require(target_h_cells > 0.0 && target_w_cells > 0.0,
          "gaussian_label: target size must be positive");
  const double sr = sigma_factor * target_h_cells;
  const double sc = sigma_factor * target_w_cells;
  Map2 out(height, width);
  for (int i = 0; i < height; ++i) {
    const double dr = i - center.row;
    for (int j = 0; j < width; ++j) {
      const double dc = j - center.col;
      out(i, j) = std::exp(-(dr * dr / (2.0 * sr * sr) + dc * dc / (2.0 * sc * sc)));
    }
  }
  return out;
}

std::uint64_t Rng::next_u64() { return engine_(); }

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal(double mean, double stddev) {
  if (has_spare_) {
    has_spare_ = false;
    return mean + stddev * spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return mean + stddev * radius * std::cos(angle);
}

}  // namespace convtrack
