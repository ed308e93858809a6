#include <algorithm>
#include <cstdio>
#include <numeric>

#include "convtrack/apprunner.hpp"

namespace convtrack {

BenchReport run_bench(const TrackerConfig& config, int n_frames, std::uint64_t seed) {
  require(n_frames >= 2, "run_bench: at least two frames are required");
  const Sequence seq = synth_sequence(SynthSpec::preset(SynthKind::translate, n_frames), seed);
  const OpeOutput out = ope_run(config, seq);

  BenchReport r;
  const std::vector<double> tracked(out.result.seconds.begin() + 1, out.result.seconds.end());
  r.frames_tracked = static_cast<int>(tracked.size());
  r.tracked_seconds = std::accumulate(tracked.begin(), tracked.end(), 0.0);
  r.mean_fps = r.tracked_seconds > 0.0 ? r.frames_tracked / r.tracked_seconds : 0.0;
  r.median_fps = out.summary.median_fps;
  r.init_seconds = out.summary.init_seconds;
  r.stage_means = out.summary.stage_means;
  r.frame_mean = r.tracked_seconds / r.frames_tracked;
  return r;
}

std::string format_bench(const BenchReport& r) {
  char buf[512];
  const StageTimes& s = r.stage_means;
  std::snprintf(buf, sizeof buf,
                "frames tracked   %d\n"
                "mean fps         %.2f\n"
                "median fps       %.2f\n"
                "first frame      %.3f s\n"
                "per frame        %.3f ms\n"
                "  crop           %.3f ms\n"
                "  extract        %.3f ms\n"
                "  head           %.3f ms\n"
                "  update         %.3f ms\n"
                "  scale          %.3f ms\n"
                "  other          %.3f ms\n",
                r.frames_tracked, r.mean_fps, r.median_fps, r.init_seconds, r.frame_mean * 1e3,
                s.crop * 1e3, s.extract * 1e3, s.head * 1e3, s.update * 1e3, s.scale * 1e3,
                std::max(0.0, r.frame_mean - s.total()) * 1e3);
  return buf;
}

}  // namespace convtrack
