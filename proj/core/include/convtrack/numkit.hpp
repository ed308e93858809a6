#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace convtrack {

/// Thrown when a caller breaks an operation's precondition (shape mismatch,
/// degenerate geometry, out-of-range configuration).
class ContractViolation : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void require(bool condition, const char* what) {
  if (!condition) throw ContractViolation(what);
}
inline void require(bool condition, const std::string& what) {
  if (!condition) throw ContractViolation(what);
}

/// Dense channel-major C x H x W array of doubles.
class Tensor3 {
 public:
  Tensor3() = default;
  Tensor3(int channels, int height, int width, double fill = 0.0);

  int channels() const { return channels_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  std::size_t plane_size() const { return static_cast<std::size_t>(height_) * width_; }
  bool empty() const { return data_.empty(); }

  double& operator()(int c, int i, int j) {
    return data_[(static_cast<std::size_t>(c) * height_ + i) * width_ + j];
  }
  double operator()(int c, int i, int j) const {
    return data_[(static_cast<std::size_t>(c) * height_ + i) * width_ + j];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> channel(int c) { return {data_.data() + c * plane_size(), plane_size()}; }
  std::span<const double> channel(int c) const {
    return {data_.data() + c * plane_size(), plane_size()};
  }

  bool same_shape(const Tensor3& other) const {
    return channels_ == other.channels_ && height_ == other.height_ && width_ == other.width_;
  }
  friend bool operator==(const Tensor3&, const Tensor3&) = default;

 private:
  int channels_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

/// Single-channel H x W map (labels, windows, responses, patches).
class Map2 {
 public:
  Map2() = default;
  Map2(int height, int width, double fill = 0.0);

  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * width_ + j]; }
  double operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * width_ + j]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool same_shape(const Map2& other) const {
    return height_ == other.height_ && width_ == other.width_;
  }
  friend bool operator==(const Map2&, const Map2&) = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<double> data_;
};

Tensor3 as_tensor(const Map2& map);
/// Requires a single-channel tensor.
Map2 as_map(const Tensor3& tensor);

/// out_channels x in_channels x kernel_h x kernel_w weights plus one bias per
/// output channel. Kernel sides are odd so a "same" convolution is centered.
class FilterStack {
 public:
  FilterStack() = default;
  FilterStack(int out_channels, int in_channels, int kernel_h, int kernel_w);

  int out_channels() const { return out_channels_; }
  int in_channels() const { return in_channels_; }
  int kernel_h() const { return kernel_h_; }
  int kernel_w() const { return kernel_w_; }

  double& weight(int o, int l, int u, int v) { return weights_[index(o, l, u, v)]; }
  double weight(int o, int l, int u, int v) const { return weights_[index(o, l, u, v)]; }

  std::span<double> weights() { return weights_; }
  std::span<const double> weights() const { return weights_; }
  std::span<double> bias() { return bias_; }
  std::span<const double> bias() const { return bias_; }

  bool same_shape(const FilterStack& other) const {
    return out_channels_ == other.out_channels_ && in_channels_ == other.in_channels_ &&
           kernel_h_ == other.kernel_h_ && kernel_w_ == other.kernel_w_;
  }
  friend bool operator==(const FilterStack&, const FilterStack&) = default;

 private:
  std::size_t index(int o, int l, int u, int v) const {
    return ((static_cast<std::size_t>(o) * in_channels_ + l) * kernel_h_ + u) * kernel_w_ + v;
  }

  int out_channels_ = 0;
  int in_channels_ = 0;
  int kernel_h_ = 0;
  int kernel_w_ = 0;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

enum class ConvMode { valid, same };

/// Output spatial extent of a convolution along one axis.
int conv_output_extent(int input, int kernel, ConvMode mode, int stride);

/// out[o,i,j] = bias[o] + sum_{l,u,v} in[l, i*stride+u-pad, j*stride+v-pad] * w[o,l,u,v]
/// with pad = kernel/2 in same mode (zero padding) and 0 in valid mode.
/// Accumulation order per output element is l, then u, then v.
Tensor3 conv2d(const Tensor3& input, const FilterStack& filters, ConvMode mode, int stride = 1);

struct ConvGrads {
  FilterStack filters;  // weight and bias gradients
  Tensor3 input;        // empty when not requested
};

/// Gradients of sum(upstream * conv2d(input, filters)) with respect to the
/// weights, biases and (optionally) the input.
ConvGrads conv2d_grads(const Tensor3& input, const FilterStack& filters, const Tensor3& upstream,
                       ConvMode mode, int stride = 1, bool want_input_grad = true);

double sigmoid(double x);
Tensor3 sigmoid_map(const Tensor3& x);
/// upstream * y * (1 - y), where y is the sigmoid output.
Tensor3 sigmoid_grad(const Tensor3& y, const Tensor3& upstream);

struct LossAndGrad {
  double loss = 0.0;
  Map2 response_grad;
};

/// sum((response - label)^2) + weight_decay * sum over params of sum(p^2).
/// Only the response gradient is returned; the decay gradient lives in sgd_step.
LossAndGrad l2_loss_and_grad(const Map2& response, const Map2& label,
                             std::span<const std::span<const double>> params, double weight_decay);

/// Momentum SGD state for a fixed list of parameter arrays.
struct OptState {
  OptState() = default;
  OptState(std::span<const std::size_t> param_sizes, double learning_rate, double momentum,
           double weight_decay);

  void reset_velocity();

  std::vector<std::vector<double>> velocity;
  double learning_rate = 0.0;
  double momentum = 0.0;
  double weight_decay = 0.0;
};

/// v <- momentum*v - lr*(grad + 2*weight_decay*param); param <- param + v.
void sgd_step(std::span<const std::span<double>> params,
              std::span<const std::span<const double>> grads, OptState& opt);

/// Outer product of 1-D Hann windows 0.5*(1 - cos(2*pi*i/(n-1))); n == 1 gives [1].
Map2 hann2d(int height, int width);

struct CellPoint {
  double row = 0.0;
  double col = 0.0;
};

/// exp(-((i-row)^2/(2 sr^2) + (j-col)^2/(2 sc^2))) with sr = sigma_factor*th,
/// sc = sigma_factor*tw.
Map2 gaussian_label(int height, int width, CellPoint center, double target_h_cells,
                    double target_w_cells, double sigma_factor);

/// Portable deterministic random source (the std distributions are not
/// bit-reproducible across standard libraries).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  std::uint64_t next_u64();
  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  double normal(double mean, double stddev);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace convtrack
