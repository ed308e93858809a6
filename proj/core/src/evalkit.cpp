#include "convtrack/evalkit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

namespace convtrack {

void Sequence::validate() const {
  require(frames.size() == ground_truth.size(),
          "Sequence: frame count " + std::to_string(frames.size()) +
              " differs from ground-truth count " + std::to_string(ground_truth.size()));
  require(frames.size() >= 2, "Sequence: needs at least two frames");
}

double iou(const Rect& a, const Rect& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double center_error(const Rect& a, const Rect& b) {
  return std::hypot(a.center_x() - b.center_x(), a.center_y() - b.center_y());
}

Curve precision_curve(const std::vector<Rect>& result, const std::vector<Rect>& ground_truth) {
  require(result.size() == ground_truth.size(), "precision_curve: length mismatch");
  Curve c;
  std::vector<double> errors(result.size());
  for (std::size_t k = 0; k < result.size(); ++k) errors[k] = center_error(result[k], ground_truth[k]);
  for (int t = 0; t <= 50; ++t) {
    const double tau = t;
    const auto hits = std::count_if(errors.begin(), errors.end(), [&](double e) { return e <= tau; });
    c.thresholds.push_back(tau);
    c.values.push_back(errors.empty() ? 0.0 : static_cast<double>(hits) / errors.size());
  }
  return c;
}

double precision_at(const Curve& curve, double threshold) {
  require(!curve.thresholds.empty(), "precision_at: empty curve");
  const auto& t = curve.thresholds;
  if (threshold <= t.front()) return curve.values.front();
  if (threshold >= t.back()) return curve.values.back();
  const auto it = std::lower_bound(t.begin(), t.end(), threshold);
  const auto k = static_cast<std::size_t>(it - t.begin());
  if (*it == threshold) return curve.values[k];
  const double f = (threshold - t[k - 1]) / (t[k] - t[k - 1]);
  return curve.values[k - 1] + f * (curve.values[k] - curve.values[k - 1]);
}

Curve success_curve(const std::vector<Rect>& result, const std::vector<Rect>& ground_truth) {
  require(result.size() == ground_truth.size(), "success_curve: length mismatch");
  Curve c;
  std::vector<double> overlaps(result.size());
  for (std::size_t k = 0; k < result.size(); ++k) overlaps[k] = iou(result[k], ground_truth[k]);
  for (int t = 0; t <= 100; ++t) {
    const double tau = t / 100.0;
    const auto hits =
        std::count_if(overlaps.begin(), overlaps.end(), [&](double o) { return o > tau; });
    c.thresholds.push_back(tau);
    c.values.push_back(overlaps.empty() ? 0.0 : static_cast<double>(hits) / overlaps.size());
  }
  return c;
}

double auc(const Curve& curve) {
  require(!curve.values.empty(), "auc: empty curve");
  return std::accumulate(curve.values.begin(), curve.values.end(), 0.0) /
         static_cast<double>(curve.values.size());
}

OpeOutput ope_run(const TrackerConfig& config, const Sequence& sequence,
                  const PretrainedModel* pretrained) {
  sequence.validate();
  using Clock = std::chrono::steady_clock;
  OpeOutput out;
  TrackResult& r = out.result;
  const std::size_t n = sequence.size();
  r.rects.reserve(n);
  r.seconds.reserve(n);
  r.diagnostics.reserve(n);

  auto t0 = Clock::now();
  TrackerState state = init_first_frame(sequence.frames[0], sequence.ground_truth[0], config, pretrained);
  r.seconds.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
  r.rects.push_back(sequence.ground_truth[0]);
  r.diagnostics.emplace_back();

  for (std::size_t k = 1; k < n; ++k) {
    t0 = Clock::now();
    const Rect box = step(state, sequence.frames[k]);
    r.seconds.push_back(std::chrono::duration<double>(Clock::now() - t0).count());
    r.rects.push_back(box);
    r.diagnostics.push_back(state.last);
  }

  OpeSummary& s = out.summary;
  s.precision = precision_curve(r.rects, sequence.ground_truth);
  s.success = success_curve(r.rects, sequence.ground_truth);
  s.precision20 = precision_at(s.precision, 20.0);
  s.auc = auc(s.success);
  s.init_seconds = r.seconds.front();

  std::vector<double> tracked(r.seconds.begin() + 1, r.seconds.end());
  const double total = std::accumulate(tracked.begin(), tracked.end(), 0.0);
  s.fps = total > 0.0 ? static_cast<double>(tracked.size()) / total : 0.0;
  std::sort(tracked.begin(), tracked.end());
  const std::size_t m = tracked.size();
  const double median = m % 2 == 1 ? tracked[m / 2] : 0.5 * (tracked[m / 2 - 1] + tracked[m / 2]);
  s.median_fps = median > 0.0 ? 1.0 / median : 0.0;

  for (std::size_t k = 1; k < n; ++k) {
    const auto& d = r.diagnostics[k];
    s.updates += d.updated ? 1 : 0;
    s.stage_means.crop += d.times.crop;
    s.stage_means.extract += d.times.extract;
    s.stage_means.head += d.times.head;
    s.stage_means.update += d.times.update;
    s.stage_means.scale += d.times.scale;
  }
  const double frames = static_cast<double>(n - 1);
  s.stage_means.crop /= frames;
  s.stage_means.extract /= frames;
  s.stage_means.head /= frames;
  s.stage_means.update /= frames;
  s.stage_means.scale /= frames;
  return out;
}

}  // namespace convtrack
