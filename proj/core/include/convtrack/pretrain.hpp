#pragma once

#include <cstdint>
#include <vector>

#include "convtrack/evalkit.hpp"
#include "convtrack/trackcore.hpp"

namespace convtrack {

struct PretrainOptions {
  int epochs = 3;
  std::uint64_t seed = 11;
  // Wide jitter keeps the head from learning a centre prior.
  double translation_jitter = 0.15;  // fraction of the crop window, uniform +-
  double scale_jitter = 0.05;        // relative window size, uniform +-
  double learning_rate = 1e-4;       // larger rates diverge with momentum 0.9
  double weight_decay = 0.01;
};

struct PretrainSample {
  Patch patch;
  Map2 label;
};

/// Jittered crop around the ground truth with the label centred on the true
/// target position inside the crop.
PretrainSample make_pretrain_sample(const TrackerState& state, const Frame& frame, const Rect& truth,
                                    const PretrainOptions& options, Rng& rng);

/// Trains extractor and head end to end on every frame of every sequence.
PretrainedModel pretrain_offline(const std::vector<Sequence>& sequences, const TrackerConfig& config,
                                 const PretrainOptions& options = {});

}  // namespace convtrack
