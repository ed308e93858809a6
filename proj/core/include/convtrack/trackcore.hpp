#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "convtrack/features.hpp"
#include "convtrack/numkit.hpp"
#include "convtrack/scalebranch.hpp"

namespace convtrack {

/// sigmoid(z) - 1/2, the hidden nonlinearity of the head. The offset keeps the
/// zero padding of layer 2 at the activation's midpoint.
Tensor3 hidden_activation(const Tensor3& pre);
/// Gradient through hidden_activation given its output.
Tensor3 hidden_activation_grad(const Tensor3& hidden, const Tensor3& upstream);

/// Two "same" convolutions with hidden_activation after the first; single-channel output.
struct TrackHead {
  FilterStack layer1;
  FilterStack layer2;

  static TrackHead random(int in_channels, int hidden_channels, int kernel,
                          double layer1_std, double layer2_std, std::uint64_t seed);
};

struct TrackerConfig {
  int patch_size = 64;
  double padding = 1.8;
  double sigma_factor = 0.1;
  ExtractorKind features = ExtractorKind::grad;

  int hidden_channels = 32;
  int head_kernel = 7;
  double head_init_std = 0.01;    // layer 2
  double hidden_init_std = 0.3;   // layer 1
  std::uint64_t seed = 1;

  int first_frame_steps = 50;
  double lr_first = 1e-4;
  double lr_update = 1e-4;
  double momentum = 0.9;
  double weight_decay_first = 0.01;
  double weight_decay_update = 0.01;

  // tinycnn extractor
  int tinycnn_hidden = 8;
  int tinycnn_channels = 8;
  int tinycnn_kernel = 5;
  double tinycnn_init_std = 0.3;

  double pnr_cap = 1e6;
  double epsilon = 1e-12;

  bool scale_enabled = true;
  bool scale_every_frame = false;    // estimate scale on every frame instead of gated frames only
  bool history_all_frames = true;    // record PNR/Rmax for gated-out frames too
  ScaleConfig scale;

  void validate() const;
};

/// Response scores plus the mapping from cell (row, col) to frame coordinates:
/// x = origin_x + col * cell_stride * scale_x (same for y).
struct ResponseMap {
  Map2 scores;
  int cell_stride = 1;
  double origin_x = 0.0;
  double origin_y = 0.0;
  double scale_x = 1.0;
  double scale_y = 1.0;
};

ResponseMap head_forward(const TrackHead& head, const Tensor3& feat);

struct PeakLocation {
  double x = 0.0;  // frame coordinates
  double y = 0.0;
  double row = 0.0;  // refined cell coordinates
  double col = 0.0;
  double rmax = 0.0;
  double rmin = 0.0;
};

PeakLocation locate_peak(const ResponseMap& response);

/// (Rmax - Rmin) / mean(all values except one occurrence of the maximum),
/// clamped to [0, cap]; a near-zero denominator yields cap (or 0 when flat).
double pnr(const ResponseMap& response, double cap = 1e6, double epsilon = 1e-12);

struct StageTimes {
  double crop = 0.0;
  double extract = 0.0;
  double head = 0.0;
  double update = 0.0;
  double scale = 0.0;
  double total() const { return crop + extract + head + update + scale; }
};

struct FrameDiagnostics {
  double pnr = 0.0;
  double rmax = 0.0;
  bool updated = false;
  double scale_change = 1.0;
  StageTimes times;
};

struct TrackerState {
  TrackerConfig config;
  Extractor extractor;
  TrackHead head;
  OptState head_opt;       // layer1 w, layer1 b, layer2 w, layer2 b
  OptState extractor_opt;  // conv1 w, conv1 b, conv2 w, conv2 b (tinycnn only)
  Rect position;
  Map2 hann;
  std::vector<double> pnr_history;
  std::vector<double> rmax_history;
  ScaleFilter scale_filter;
  int frame_index = 0;
  int frame_width = 0;
  int frame_height = 0;

  double init_loss_before = 0.0;  // loss on the first training step
  double init_loss_after = 0.0;   // loss of the trained model on the first-frame patch
  double init_rmax = 0.0;
  FrameDiagnostics last;
};

/// Extractor and head produced by offline training.
struct PretrainedModel {
  Extractor extractor;
  TrackHead head;
  std::vector<double> epoch_losses;
};

/// Builds a fresh (untrained) state: extractor, randomly initialised head,
/// optimizer buffers and Hann window. Used by init_first_frame and pretraining.
TrackerState make_state(const TrackerConfig& config, const PretrainedModel* pretrained = nullptr);

/// Cell coordinates of a frame point inside a patch crop.
CellPoint frame_to_cell(const PatchGeometry& geometry, int cell_stride, double x, double y);
ResponseMap response_geometry(Map2 scores, const PatchGeometry& geometry, int cell_stride);

/// Gaussian label for a target centred at (cx, cy) of size (w, h) inside the crop.
Map2 target_label(const TrackerState& state, const PatchGeometry& geometry, double cx, double cy,
                  double w, double h);

/// Forward pass on a patch: extract, window, head.
ResponseMap respond(const TrackerState& state, const Patch& patch);

/// Loss and data-term gradients of one patch. Weight decay enters the loss but
/// not the gradients; sgd_step adds it. Extractor gradients only for tinycnn
/// when train_extractor is set.
struct ModelGrads {
  double loss = 0.0;
  FilterStack layer1;
  FilterStack layer2;
  bool has_extractor = false;
  TinyCnnGrads extractor;
};

ModelGrads model_gradients(const TrackerState& state, const Map2& patch, const Map2& label,
                           double weight_decay, bool train_extractor);

/// One forward/backward pass and SGD step; returns the loss before the step.
double train_step(TrackerState& state, const Map2& patch, const Map2& label, double lr,
                  double weight_decay, bool train_extractor);

/// Loss of the current model without updating anything.
double evaluate_loss(const TrackerState& state, const Map2& patch, const Map2& label,
                     double weight_decay);

TrackerState init_first_frame(const Frame& frame, const Rect& ground_truth,
                              const TrackerConfig& config,
                              const PretrainedModel* pretrained = nullptr);

/// Thresholds are the history means before appending; passes when both
/// values reach their threshold. Histories grow by one either way.
bool gate_and_record(TrackerState& state, double pnr_value, double rmax_value);

double model_update(TrackerState& state, const Frame& frame);

Rect step(TrackerState& state, const Frame& frame);

}  // namespace convtrack
