#include "convtrack/pretrain.hpp"

#include <cmath>

namespace convtrack {

PretrainSample make_pretrain_sample(const TrackerState& state, const Frame& frame, const Rect& truth,
                                    const PretrainOptions& options, Rng& rng) {
  const TrackerConfig& c = state.config;
  const double window_w = truth.w * (1.0 + c.padding);
  const double window_h = truth.h * (1.0 + c.padding);
  const double dx = rng.uniform(-options.translation_jitter, options.translation_jitter) * window_w;
  const double dy = rng.uniform(-options.translation_jitter, options.translation_jitter) * window_h;
  const double s = 1.0 + rng.uniform(-options.scale_jitter, options.scale_jitter);

  PretrainSample sample;
  sample.patch = crop_window(frame, truth.center_x() + dx, truth.center_y() + dy, window_w * s,
                             window_h * s, c.patch_size, c.patch_size);
  sample.label = target_label(state, sample.patch.geometry, truth.center_x(), truth.center_y(),
                              truth.w, truth.h);
  return sample;
}

PretrainedModel pretrain_offline(const std::vector<Sequence>& sequences, const TrackerConfig& config,
                                 const PretrainOptions& options) {
  require(!sequences.empty(), "pretrain_offline: empty dataset");
  require(options.epochs >= 0, "pretrain_offline: epochs must be nonnegative");
  for (const auto& seq : sequences) seq.validate();

  TrackerState state = make_state(config);
  Rng rng(options.seed);
  PretrainedModel model;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& seq : sequences) {
      for (std::size_t k = 0; k < seq.size(); ++k) {
        const PretrainSample sample =
            make_pretrain_sample(state, seq.frames[k], seq.ground_truth[k], options, rng);
        total += train_step(state, sample.patch.pixels, sample.label, options.learning_rate,
                            options.weight_decay, true);
        ++count;
      }
    }
    require(std::isfinite(total),
            "pretrain_offline: training diverged in epoch " + std::to_string(epoch + 1) +
                "; lower the learning rate");
    model.epoch_losses.push_back(total / static_cast<double>(count));
  }
  model.extractor = state.extractor;
  model.head = state.head;
  return model;
}

}  // namespace convtrack
