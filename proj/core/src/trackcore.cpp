#include "convtrack/trackcore.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>

namespace convtrack {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::array<std::size_t, 4> stack_sizes(const FilterStack& a, const FilterStack& b) {
  return {a.weights().size(), a.bias().size(), b.weights().size(), b.bias().size()};
}

}  // namespace

Tensor3 hidden_activation(const Tensor3& pre) {
  Tensor3 h = sigmoid_map(pre);
  for (double& v : h.data()) v -= 0.5;
  return h;
}

Tensor3 hidden_activation_grad(const Tensor3& hidden, const Tensor3& upstream) {
  Tensor3 y = hidden;
  for (double& v : y.data()) v += 0.5;
  return sigmoid_grad(y, upstream);
}

TrackHead TrackHead::random(int in_channels, int hidden_channels, int kernel,
                            double layer1_std, double layer2_std, std::uint64_t seed) {
  TrackHead head{FilterStack(hidden_channels, in_channels, kernel, kernel),
                 FilterStack(1, hidden_channels, kernel, kernel)};
  Rng rng(seed);
  for (double& w : head.layer1.weights()) w = rng.normal(0.0, layer1_std);
  for (double& w : head.layer2.weights()) w = rng.normal(0.0, layer2_std);
  return head;
}

void TrackerConfig::validate() const {
  require(patch_size > 0 && patch_size % 4 == 0, "TrackerConfig: patch_size must be a multiple of 4");
  require(padding >= 0.0, "TrackerConfig: padding must be nonnegative");
  require(sigma_factor > 0.0, "TrackerConfig: sigma_factor must be positive");
  require(hidden_channels > 0, "TrackerConfig: hidden_channels must be positive");
  require(head_kernel > 0 && head_kernel % 2 == 1, "TrackerConfig: head_kernel must be odd");
  require(head_init_std >= 0.0 && hidden_init_std >= 0.0,
          "TrackerConfig: head init std must be nonnegative");
  require(first_frame_steps >= 0, "TrackerConfig: first_frame_steps must be nonnegative");
  require(lr_first > 0.0 && lr_update > 0.0, "TrackerConfig: learning rates must be positive");
  require(momentum >= 0.0 && momentum < 1.0, "TrackerConfig: momentum must lie in [0, 1)");
  require(weight_decay_first >= 0.0 && weight_decay_update >= 0.0,
          "TrackerConfig: weight decay must be nonnegative");
  require(tinycnn_hidden > 0 && tinycnn_channels > 0 && tinycnn_kernel % 2 == 1,
          "TrackerConfig: invalid tinycnn shape");
  require(pnr_cap > 0.0 && epsilon > 0.0, "TrackerConfig: pnr_cap and epsilon must be positive");
  scale.validate();
}

ResponseMap head_forward(const TrackHead& head, const Tensor3& feat) {
  require(feat.channels() == head.layer1.in_channels(),
          "head_forward: feature channels do not match the head");
  require(head.layer2.out_channels() == 1, "head_forward: head must produce one channel");
  const Tensor3 hidden = hidden_activation(conv2d(feat, head.layer1, ConvMode::same));
  ResponseMap r;
  r.scores = as_map(conv2d(hidden, head.layer2, ConvMode::same));
  return r;
}

PeakLocation locate_peak(const ResponseMap& response) {
  const Map2& m = response.scores;
  require(!m.empty(), "locate_peak: empty response");
  const auto values = m.data();
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  // minmax_element returns the last maximum; the tie-break wants the first.
  const auto first_max = std::find(values.begin(), values.end(), *max_it);
  const auto idx = static_cast<int>(first_max - values.begin());
  const int row = idx / m.width();
  const int col = idx % m.width();

  PeakLocation p;
  p.rmax = *max_it;
  p.rmin = *min_it;
  p.row = row;
  p.col = col;
  if (row > 0 && row + 1 < m.height())
    p.row += parabolic_offset(m(row - 1, col), m(row, col), m(row + 1, col));
  if (col > 0 && col + 1 < m.width())
    p.col += parabolic_offset(m(row, col - 1), m(row, col), m(row, col + 1));
  p.x = response.origin_x + p.col * response.cell_stride * response.scale_x;
  p.y = response.origin_y + p.row * response.cell_stride * response.scale_y;
  return p;
}

double pnr(const ResponseMap& response, double cap, double epsilon) {
  const auto values = response.scores.data();
  require(values.size() >= 2, "pnr: response needs at least two cells");
  const auto [min_it, max_it] = std::minmax_element(values.begin(), values.end());
  const double rmax = *max_it;
  const double rmin = *min_it;
  const double rest = std::accumulate(values.begin(), values.end(), 0.0) - rmax;
  const double denom = rest / static_cast<double>(values.size() - 1);
  if (std::abs(denom) < epsilon) return rmax > rmin ? cap : 0.0;
  return std::clamp((rmax - rmin) / denom, 0.0, cap);
}

CellPoint frame_to_cell(const PatchGeometry& g, int cell_stride, double x, double y) {
  const double px = (x - g.origin_x) / g.scale_x;
  const double py = (y - g.origin_y) / g.scale_y;
  return {(py - 0.5 * cell_stride) / cell_stride, (px - 0.5 * cell_stride) / cell_stride};
}

ResponseMap response_geometry(Map2 scores, const PatchGeometry& g, int cell_stride) {
  ResponseMap r;
  r.scores = std::move(scores);
  r.cell_stride = cell_stride;
  r.scale_x = g.scale_x;
  r.scale_y = g.scale_y;
  r.origin_x = g.origin_x + 0.5 * cell_stride * g.scale_x;
  r.origin_y = g.origin_y + 0.5 * cell_stride * g.scale_y;
  return r;
}

TrackerState make_state(const TrackerConfig& config, const PretrainedModel* pretrained) {
  config.validate();
  TrackerState s;
  s.config = config;
  if (pretrained != nullptr) {
    s.extractor = pretrained->extractor;
    s.head = pretrained->head;
    require(s.extractor.kind == config.features,
            "make_state: pretrained extractor kind differs from the configuration");
  } else {
    switch (config.features) {
      case ExtractorKind::gray: s.extractor = Extractor::gray(); break;
      case ExtractorKind::grad: s.extractor = Extractor::grad(); break;
      case ExtractorKind::tinycnn:
        s.extractor = Extractor::tinycnn(config.tinycnn_hidden, config.tinycnn_channels,
                                         config.tinycnn_kernel, config.tinycnn_init_std,
                                         config.seed ^ 0x9e3779b97f4a7c15ULL);
        break;
    }
    s.head = TrackHead::random(s.extractor.output_channels(), config.hidden_channels,
                               config.head_kernel, config.hidden_init_std, config.head_init_std,
                               config.seed);
  }
  require(s.head.layer1.in_channels() == s.extractor.output_channels(),
          "make_state: head input channels do not match the extractor");

  const auto head_sizes = stack_sizes(s.head.layer1, s.head.layer2);
  s.head_opt = OptState(head_sizes, config.lr_first, config.momentum, config.weight_decay_first);
  if (s.extractor.kind == ExtractorKind::tinycnn) {
    const auto ext_sizes = stack_sizes(s.extractor.conv1, s.extractor.conv2);
    s.extractor_opt = OptState(ext_sizes, config.lr_first, config.momentum, config.weight_decay_first);
  }
  const int cells = config.patch_size / s.extractor.cell_stride();
  s.hann = hann2d(cells, cells);
  s.scale_filter = ScaleFilter(config.scale);
  return s;
}

Map2 target_label(const TrackerState& state, const PatchGeometry& g, double cx, double cy,
                  double w, double h) {
  const int stride = state.extractor.cell_stride();
  const int cells = state.config.patch_size / stride;
  const CellPoint centre = frame_to_cell(g, stride, cx, cy);
  return gaussian_label(cells, cells, centre, h / g.scale_y / stride, w / g.scale_x / stride,
                        state.config.sigma_factor);
}

ResponseMap respond(const TrackerState& state, const Patch& patch) {
  const Tensor3 feat = window(extract(state.extractor, patch.pixels), state.hann);
  ResponseMap r = head_forward(state.head, feat);
  return response_geometry(std::move(r.scores), patch.geometry, state.extractor.cell_stride());
}

namespace {

struct HeadPass {
  Tensor3 features;  // windowed
  Tensor3 hidden;
  Map2 response;
};

HeadPass forward_pass(const TrackerState& state, const Map2& patch) {
  HeadPass pass;
  pass.features = window(extract(state.extractor, patch), state.hann);
  pass.hidden = hidden_activation(conv2d(pass.features, state.head.layer1, ConvMode::same));
  pass.response = as_map(conv2d(pass.hidden, state.head.layer2, ConvMode::same));
  return pass;
}

std::vector<std::span<const double>> trained_params(const TrackerState& state,
                                                    bool with_extractor) {
  std::vector<std::span<const double>> p{state.head.layer1.weights(), state.head.layer1.bias(),
                                         state.head.layer2.weights(), state.head.layer2.bias()};
  if (with_extractor) {
    p.push_back(state.extractor.conv1.weights());
    p.push_back(state.extractor.conv1.bias());
    p.push_back(state.extractor.conv2.weights());
    p.push_back(state.extractor.conv2.bias());
  }
  return p;
}

}  // namespace

double evaluate_loss(const TrackerState& state, const Map2& patch, const Map2& label,
                     double weight_decay) {
  const HeadPass pass = forward_pass(state, patch);
  return l2_loss_and_grad(pass.response, label, trained_params(state, false), weight_decay).loss;
}

ModelGrads model_gradients(const TrackerState& state, const Map2& patch, const Map2& label,
                           double weight_decay, bool train_extractor) {
  const bool with_ext = train_extractor && state.extractor.kind == ExtractorKind::tinycnn;
  const HeadPass pass = forward_pass(state, patch);
  require(label.same_shape(pass.response), "model_gradients: label and response shapes differ");
  const LossAndGrad lg =
      l2_loss_and_grad(pass.response, label, trained_params(state, with_ext), weight_decay);

  const TrackHead& head = state.head;
  ConvGrads g2 = conv2d_grads(pass.hidden, head.layer2, as_tensor(lg.response_grad),
                              ConvMode::same, 1, true);
  const Tensor3 pre = hidden_activation_grad(pass.hidden, g2.input);
  ConvGrads g1 = conv2d_grads(pass.features, head.layer1, pre, ConvMode::same, 1, with_ext);

  ModelGrads g;
  g.loss = lg.loss;
  g.layer1 = std::move(g1.filters);
  g.layer2 = std::move(g2.filters);
  if (with_ext) {
    g.has_extractor = true;
    g.extractor = tinycnn_backward(state.extractor, patch, window(g1.input, state.hann));
  }
  return g;
}

double train_step(TrackerState& state, const Map2& patch, const Map2& label, double lr,
                  double weight_decay, bool train_extractor) {
  const ModelGrads g = model_gradients(state, patch, label, weight_decay, train_extractor);
  if (g.has_extractor) {
    Extractor& e = state.extractor;
    const std::array<std::span<double>, 4> params{e.conv1.weights(), e.conv1.bias(),
                                                  e.conv2.weights(), e.conv2.bias()};
    const std::array<std::span<const double>, 4> grads{
        g.extractor.conv1.weights(), g.extractor.conv1.bias(), g.extractor.conv2.weights(),
        g.extractor.conv2.bias()};
    state.extractor_opt.learning_rate = lr;
    state.extractor_opt.weight_decay = weight_decay;
    sgd_step(params, grads, state.extractor_opt);
  }

  TrackHead& head = state.head;
  const std::array<std::span<double>, 4> params{head.layer1.weights(), head.layer1.bias(),
                                                head.layer2.weights(), head.layer2.bias()};
  const std::array<std::span<const double>, 4> grads{g.layer1.weights(), g.layer1.bias(),
                                                     g.layer2.weights(), g.layer2.bias()};
  state.head_opt.learning_rate = lr;
  state.head_opt.weight_decay = weight_decay;
  sgd_step(params, grads, state.head_opt);
  return g.loss;
}

namespace {

Rect clip_to_frame(const Rect& r, const Frame& frame) {
  const double x0 = std::clamp(r.x, 0.0, static_cast<double>(frame.width()));
  const double y0 = std::clamp(r.y, 0.0, static_cast<double>(frame.height()));
  const double x1 = std::clamp(r.x + r.w, 0.0, static_cast<double>(frame.width()));
  const double y1 = std::clamp(r.y + r.h, 0.0, static_cast<double>(frame.height()));
  return {x0, y0, x1 - x0, y1 - y0};
}

}  // namespace

TrackerState init_first_frame(const Frame& frame, const Rect& ground_truth,
                              const TrackerConfig& config, const PretrainedModel* pretrained) {
  require(ground_truth.w > 0.0 && ground_truth.h > 0.0,
          "init_first_frame: ground truth must have positive size");
  const Rect box = clip_to_frame(ground_truth, frame);
  require(box.w >= 1.0 && box.h >= 1.0,
          "init_first_frame: ground truth does not overlap the frame by at least one pixel");

  TrackerState state = make_state(config, pretrained);
  state.position = box;
  state.frame_width = frame.width();
  state.frame_height = frame.height();

  const Patch patch = crop_resize(frame, box, config.padding, config.patch_size, config.patch_size);
  const Map2 label =
      target_label(state, patch.geometry, box.center_x(), box.center_y(), box.w, box.h);
  for (int k = 0; k < config.first_frame_steps; ++k) {
    const double loss =
        train_step(state, patch.pixels, label, config.lr_first, config.weight_decay_first, false);
    if (k == 0) state.init_loss_before = loss;
  }
  state.head_opt.reset_velocity();
  state.init_loss_after = evaluate_loss(state, patch.pixels, label, config.weight_decay_first);
  if (config.first_frame_steps == 0) state.init_loss_before = state.init_loss_after;

  const ResponseMap response = respond(state, patch);
  const PeakLocation peak = locate_peak(response);
  state.init_rmax = peak.rmax;
  state.pnr_history.push_back(pnr(response, config.pnr_cap, config.epsilon));
  state.rmax_history.push_back(peak.rmax);

  if (config.scale_enabled)
    rehearse_scale(state.scale_filter, frame, state.position, config.scale.init_steps, config.scale);
  state.frame_index = 1;
  return state;
}

bool gate_and_record(TrackerState& state, double pnr_value, double rmax_value) {
  require(!state.pnr_history.empty() && !state.rmax_history.empty(),
          "gate_and_record: histories must be seeded by init_first_frame");
  const auto mean = [](const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  };
  const bool pass = pnr_value >= mean(state.pnr_history) && rmax_value >= mean(state.rmax_history);
  if (pass || state.config.history_all_frames) {
    state.pnr_history.push_back(pnr_value);
    state.rmax_history.push_back(rmax_value);
  }
  return pass;
}

double model_update(TrackerState& state, const Frame& frame) {
  const TrackerConfig& c = state.config;
  const Rect& p = state.position;
  const Patch patch = crop_resize(frame, p, c.padding, c.patch_size, c.patch_size);
  const Map2 label = target_label(state, patch.geometry, p.center_x(), p.center_y(), p.w, p.h);
  return train_step(state, patch.pixels, label, c.lr_update, c.weight_decay_update, false);
}

Rect step(TrackerState& state, const Frame& frame) {
  require(state.frame_index >= 1, "step: tracker not initialised");
  require(frame.width() == state.frame_width && frame.height() == state.frame_height,
          "step: frame size differs from the sequence");
  const TrackerConfig& c = state.config;
  FrameDiagnostics diag;

  auto t = Clock::now();
  const Patch patch = crop_resize(frame, state.position, c.padding, c.patch_size, c.patch_size);
  diag.times.crop = seconds_since(t);

  t = Clock::now();
  const Tensor3 feat = window(extract(state.extractor, patch.pixels), state.hann);
  diag.times.extract = seconds_since(t);

  t = Clock::now();
  ResponseMap response = head_forward(state.head, feat);
  response = response_geometry(std::move(response.scores), patch.geometry,
                               state.extractor.cell_stride());
  const PeakLocation peak = locate_peak(response);
  diag.pnr = pnr(response, c.pnr_cap, c.epsilon);
  diag.rmax = peak.rmax;
  diag.times.head = seconds_since(t);

  const double cx = std::clamp(peak.x, 0.0, static_cast<double>(frame.width()));
  const double cy = std::clamp(peak.y, 0.0, static_cast<double>(frame.height()));
  state.position = Rect::from_center(cx, cy, state.position.w, state.position.h);

  const bool pass = gate_and_record(state, diag.pnr, diag.rmax);
  diag.updated = pass;

  if (c.scale_enabled && (pass || c.scale_every_frame)) {
    t = Clock::now();
    const Map2 desc = scale_descriptors(frame, cx, cy, state.position.w, state.position.h, c.scale);
    diag.scale_change = estimate_scale(state.scale_filter, desc, c.scale);
    const double w = std::max(state.position.w * diag.scale_change, 1.0);
    const double h = std::max(state.position.h * diag.scale_change, 1.0);
    state.position = Rect::from_center(cx, cy, w, h);
    if (pass) rehearse_scale(state.scale_filter, frame, state.position, 1, c.scale);
    diag.times.scale = seconds_since(t);
  }

  if (pass) {
    t = Clock::now();
    model_update(state, frame);
    diag.times.update = seconds_since(t);
  }

  state.last = diag;
  ++state.frame_index;
  return state.position;
}

}  // namespace convtrack
