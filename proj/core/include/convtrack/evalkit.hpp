#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "convtrack/features.hpp"
#include "convtrack/trackcore.hpp"

namespace convtrack {

struct Sequence {
  std::string name;
  std::vector<Frame> frames;
  std::vector<Rect> ground_truth;

  std::size_t size() const { return frames.size(); }
  void validate() const;
};

struct TrackResult {
  std::vector<Rect> rects;      // rects[0] is the initial ground truth
  std::vector<double> seconds;  // per-frame wall time; seconds[0] is the first-frame training
  std::vector<FrameDiagnostics> diagnostics;  // one per frame; [0] is default
};

struct Curve {
  std::vector<double> thresholds;
  std::vector<double> values;
};

double iou(const Rect& a, const Rect& b);
double center_error(const Rect& a, const Rect& b);

/// Thresholds 0..50 px in unit steps; value = fraction with error <= threshold.
Curve precision_curve(const std::vector<Rect>& result, const std::vector<Rect>& ground_truth);
/// Value of the curve at the given threshold (linear interpolation between grid points).
double precision_at(const Curve& curve, double threshold = 20.0);

/// Thresholds 0..1 in 101 steps; value = fraction with IoU > threshold.
Curve success_curve(const std::vector<Rect>& result, const std::vector<Rect>& ground_truth);
/// Mean of the curve values.
double auc(const Curve& curve);

struct OpeSummary {
  double precision20 = 0.0;
  double auc = 0.0;
  double fps = 0.0;            // tracked frames / tracked seconds (first frame excluded)
  double median_fps = 0.0;
  double init_seconds = 0.0;
  int updates = 0;
  StageTimes stage_means;      // per tracked frame
  Curve precision;
  Curve success;
};

struct OpeOutput {
  TrackResult result;
  OpeSummary summary;
};

/// One-pass evaluation: initialise on frame 0's ground truth, step through the
/// remaining frames without resets.
OpeOutput ope_run(const TrackerConfig& config, const Sequence& sequence,
                  const PretrainedModel* pretrained = nullptr);

enum class SynthKind { translate, zoom, occlude, clutter };

std::string_view to_string(SynthKind kind);
SynthKind parse_synth_kind(std::string_view name);

struct SynthSpec {
  SynthKind kind = SynthKind::translate;
  int frames = 100;
  int canvas_w = 320;
  int canvas_h = 160;
  Rect initial{40.0, 68.0, 24.0, 24.0};
  double velocity_x = 2.0;
  double velocity_y = 0.0;
  double zoom_rate = 1.0;
  int occlusion_start = -1;     // first occluded frame, -1 for none
  int occlusion_duration = 0;
  double clutter_density = 0.0;  // distractor squares per 1000 px^2
  double noise_std = 0.0;

  /// Preset for one of the four kinds with the given frame count.
  static SynthSpec preset(SynthKind kind, int frames);
};

/// Renders a textured target over a textured background; ground truth is exact.
Sequence synth_sequence(const SynthSpec& spec, std::uint64_t seed);

}  // namespace convtrack
