#include <benchmark/benchmark.h>

#include <string>

#include "convtrack/evalkit.hpp"
#include "convtrack/features.hpp"
#include "convtrack/numkit.hpp"
#include "convtrack/scalebranch.hpp"
#include "convtrack/trackcore.hpp"

using namespace convtrack;

namespace {

Tensor3 random_tensor(int c, int h, int w, Rng& rng) {
  Tensor3 t(c, h, w);
  for (double& v : t.data()) v = rng.normal(0.0, 1.0);
  return t;
}

FilterStack random_filters(int out, int in, int k, Rng& rng) {
  FilterStack f(out, in, k, k);
  for (double& v : f.weights()) v = rng.normal(0.0, 0.1);
  return f;
}

// Head-sized layers: args are in_channels, out_channels; 16x16 cells, 7x7 kernel.
void BM_Conv2dForward(benchmark::State& state) {
  Rng rng(1);
  const int in = static_cast<int>(state.range(0));
  const int out = static_cast<int>(state.range(1));
  const Tensor3 x = random_tensor(in, 16, 16, rng);
  const FilterStack f = random_filters(out, in, 7, rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d(x, f, ConvMode::same));
}
BENCHMARK(BM_Conv2dForward)->Args({8, 32})->Args({32, 1})->Unit(benchmark::kMicrosecond);

void BM_Conv2dGrads(benchmark::State& state) {
  Rng rng(2);
  const int in = static_cast<int>(state.range(0));
  const int out = static_cast<int>(state.range(1));
  const Tensor3 x = random_tensor(in, 16, 16, rng);
  const FilterStack f = random_filters(out, in, 7, rng);
  const Tensor3 up = random_tensor(out, 16, 16, rng);
  for (auto _ : state) benchmark::DoNotOptimize(conv2d_grads(x, f, up, ConvMode::same));
}
BENCHMARK(BM_Conv2dGrads)->Args({8, 32})->Args({32, 1})->Unit(benchmark::kMicrosecond);

void BM_HeadForward(benchmark::State& state) {
  Rng rng(3);
  const TrackerConfig config;
  const TrackerState s = make_state(config);
  const Tensor3 feat = random_tensor(s.head.layer1.in_channels(), 16, 16, rng);
  for (auto _ : state) benchmark::DoNotOptimize(head_forward(s.head, feat));
}
BENCHMARK(BM_HeadForward)->Unit(benchmark::kMicrosecond);

void BM_ScaleDescriptors(benchmark::State& state) {
  const Sequence seq = synth_sequence(SynthSpec::preset(SynthKind::zoom, 2), 5);
  const Rect& box = seq.ground_truth[0];
  const ScaleConfig cfg;
  for (auto _ : state)
    benchmark::DoNotOptimize(
        scale_descriptors(seq.frames[0], box.center_x(), box.center_y(), box.w, box.h, cfg));
}
BENCHMARK(BM_ScaleDescriptors)->Unit(benchmark::kMicrosecond);

// Full per-frame cost after the first frame; arg 0 is the extractor kind.
void BM_TrackerStep(benchmark::State& state) {
  const Sequence seq = synth_sequence(SynthSpec::preset(SynthKind::translate, 60), 7);
  TrackerConfig config;
  config.features = state.range(0) == 0 ? ExtractorKind::grad : ExtractorKind::tinycnn;
  TrackerState s = init_first_frame(seq.frames[0], seq.ground_truth[0], config);
  std::size_t k = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(step(s, seq.frames[k]));
    if (++k == seq.size()) {
      state.PauseTiming();
      s = init_first_frame(seq.frames[0], seq.ground_truth[0], config);
      k = 1;
      state.ResumeTiming();
    }
  }
  state.SetLabel(std::string(to_string(config.features)));
}
BENCHMARK(BM_TrackerStep)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
