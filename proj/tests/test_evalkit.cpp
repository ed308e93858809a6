#include <gtest/gtest.h>

#include <cmath>

#include "convtrack/evalkit.hpp"
#include "convtrack/pretrain.hpp"
#include "oracles.hpp"

using namespace convtrack;

namespace {

Rect random_rect(Rng& rng) {
  return {rng.uniform(0.0, 60.0), rng.uniform(0.0, 60.0), rng.uniform(1.0, 40.0),
          rng.uniform(1.0, 40.0)};
}

// A result that wanders around the ground truth by up to `spread` pixels.
std::vector<Rect> jittered(const std::vector<Rect>& gt, double spread, Rng& rng) {
  std::vector<Rect> out;
  for (const Rect& g : gt)
    out.push_back({g.x + rng.uniform(-spread, spread), g.y + rng.uniform(-spread, spread),
                   g.w * rng.uniform(0.7, 1.3), g.h * rng.uniform(0.7, 1.3)});
  return out;
}

bool outside(const Rect& r, int x, int y) {
  return x + 1 < std::floor(r.x) || x > std::ceil(r.x + r.w) || y + 1 < std::floor(r.y) ||
         y > std::ceil(r.y + r.h);
}

}  // namespace

TEST(Iou, MatchesOracleAndIsSymmetric) {
  Rng rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const Rect a = random_rect(rng);
    const Rect b = random_rect(rng);
    const double v = iou(a, b);
    EXPECT_NEAR(v, oracle::iou(a, b), 1e-12);
    EXPECT_EQ(v, iou(b, a));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Iou, IdentityDisjointAndKnownValues) {
  const Rect a{0.0, 0.0, 10.0, 10.0};
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(a, {10.0, 0.0, 5.0, 5.0}), 0.0);
  EXPECT_EQ(iou(a, {20.0, 20.0, 5.0, 5.0}), 0.0);
  EXPECT_NEAR(iou(a, {5.0, 0.0, 10.0, 10.0}), 50.0 / 150.0, 1e-15);
  EXPECT_NEAR(iou(a, {2.5, 2.5, 5.0, 5.0}), 0.25, 1e-15);
}

TEST(Iou, InvariantToJointTranslationAndScaling) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Rect a = random_rect(rng);
    const Rect b = random_rect(rng);
    const double c = rng.uniform(0.1, 10.0);
    const double dx = rng.uniform(-100.0, 100.0);
    const double dy = rng.uniform(-100.0, 100.0);
    auto map = [&](const Rect& r) { return Rect{c * r.x + dx, c * r.y + dy, c * r.w, c * r.h}; };
    EXPECT_NEAR(iou(map(a), map(b)), iou(a, b), 1e-9);
  }
}

TEST(CenterError, Euclidean) {
  EXPECT_EQ(center_error({0, 0, 2, 2}, {3, 4, 2, 2}), 5.0);
  EXPECT_EQ(center_error({0, 0, 2, 2}, {-1, -1, 4, 4}), 0.0);
}

TEST(Curves, MatchOraclesOnRandomTrajectories) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + trial % 37;
    std::vector<Rect> gt;
    for (int k = 0; k < n; ++k) gt.push_back(random_rect(rng));
    const auto res = jittered(gt, 1.0 + trial % 40, rng);

    const Curve p = precision_curve(res, gt);
    const Curve s = success_curve(res, gt);
    const auto pw = oracle::precision_values(res, gt);
    const auto sw = oracle::success_values(res, gt);
    ASSERT_EQ(p.values.size(), 51u);
    ASSERT_EQ(s.values.size(), 101u);
    for (std::size_t k = 0; k < pw.size(); ++k) {
      EXPECT_EQ(p.thresholds[k], static_cast<double>(k));
      EXPECT_EQ(p.values[k], pw[k]);
    }
    for (std::size_t k = 0; k < sw.size(); ++k) {
      EXPECT_NEAR(s.thresholds[k], k / 100.0, 1e-15);
      EXPECT_EQ(s.values[k], sw[k]);
    }
    double mean = 0.0;
    for (double v : sw) mean += v;
    EXPECT_NEAR(auc(s), mean / 101.0, 1e-12);
    EXPECT_EQ(precision_at(p, 20.0), pw[20]);
  }
}

TEST(Curves, Monotone) {
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Rect> gt;
    for (int k = 0; k < 20; ++k) gt.push_back(random_rect(rng));
    const auto res = jittered(gt, 25.0, rng);
    const Curve p = precision_curve(res, gt);
    const Curve s = success_curve(res, gt);
    for (std::size_t k = 1; k < p.values.size(); ++k) EXPECT_GE(p.values[k], p.values[k - 1]);
    for (std::size_t k = 1; k < s.values.size(); ++k) EXPECT_LE(s.values[k], s.values[k - 1]);
  }
}

TEST(Curves, ThresholdConventions) {
  // Centre error exactly 20 counts at 20; IoU exactly 0.5 does not count at 0.5.
  const std::vector<Rect> gt{{0, 0, 10, 10}};
  const Curve p = precision_curve({{20, 0, 10, 10}}, gt);
  EXPECT_EQ(p.values[19], 0.0);
  EXPECT_EQ(p.values[20], 1.0);
  const Curve s = success_curve({{0, 0, 10, 20}}, gt);
  EXPECT_EQ(s.values[49], 1.0);
  EXPECT_EQ(s.values[50], 0.0);
  const Curve perfect = success_curve(gt, gt);
  EXPECT_EQ(perfect.values[99], 1.0);
  EXPECT_EQ(perfect.values[100], 0.0);
  EXPECT_NEAR(auc(perfect), 100.0 / 101.0, 1e-15);
  EXPECT_THROW(precision_curve(gt, {}), ContractViolation);
}

TEST(PrecisionAt, InterpolatesAndClamps) {
  const Curve c{{0.0, 10.0, 20.0}, {0.0, 0.5, 1.0}};
  EXPECT_EQ(precision_at(c, 10.0), 0.5);
  EXPECT_NEAR(precision_at(c, 15.0), 0.75, 1e-15);
  EXPECT_EQ(precision_at(c, -3.0), 0.0);
  EXPECT_EQ(precision_at(c, 99.0), 1.0);
  EXPECT_THROW(precision_at(Curve{}, 1.0), ContractViolation);
}

TEST(Synth, GroundTruthFollowsTheSpec) {
  for (SynthKind kind : {SynthKind::translate, SynthKind::zoom, SynthKind::occlude, SynthKind::clutter}) {
    const SynthSpec spec = SynthSpec::preset(kind, 30);
    const Sequence seq = synth_sequence(spec, 4);
    ASSERT_EQ(seq.size(), 30u);
    for (int t = 0; t < 30; ++t) {
      const Rect& r = seq.ground_truth[t];
      EXPECT_NEAR(r.center_x(), spec.initial.center_x() + spec.velocity_x * t, 1e-9);
      EXPECT_NEAR(r.center_y(), spec.initial.center_y() + spec.velocity_y * t, 1e-9);
      EXPECT_NEAR(r.w, spec.initial.w * std::pow(spec.zoom_rate, t), 1e-9 * r.w);
      EXPECT_EQ(seq.frames[t].width(), spec.canvas_w);
      EXPECT_EQ(seq.frames[t].height(), spec.canvas_h);
    }
  }
}

TEST(Synth, PixelsAreQuantisedIntensities) {
  SynthSpec spec = SynthSpec::preset(SynthKind::clutter, 3);
  spec.noise_std = 0.2;
  for (const Frame& f : synth_sequence(spec, 5).frames)
    for (double v : f.pixels()) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      EXPECT_NEAR(v * 255.0, std::round(v * 255.0), 1e-9);
    }
}

TEST(Synth, OnlyTheTargetRegionChangesWithoutNoise) {
  const Sequence seq = synth_sequence(SynthSpec::preset(SynthKind::translate, 10), 6);
  const Frame& f0 = seq.frames[0];
  for (std::size_t t = 1; t < seq.size(); ++t)
    for (int y = 0; y < f0.height(); ++y)
      for (int x = 0; x < f0.width(); ++x)
        if (outside(seq.ground_truth[0], x, y) && outside(seq.ground_truth[t], x, y))
          ASSERT_EQ(seq.frames[t](y, x), f0(y, x)) << "frame " << t << " at " << x << "," << y;
}

TEST(Synth, OcclusionCoversTheTarget) {
  const SynthSpec spec = SynthSpec::preset(SynthKind::occlude, 20);
  SynthSpec open = spec;
  open.occlusion_start = -1;
  const Sequence a = synth_sequence(spec, 8);
  const Sequence b = synth_sequence(open, 8);
  for (int t = 0; t < 20; ++t) {
    const bool occluded = t >= spec.occlusion_start && t < spec.occlusion_start + spec.occlusion_duration;
    EXPECT_EQ(a.frames[t] == b.frames[t], !occluded) << "frame " << t;
  }
}

TEST(Synth, DeterministicPerSeed) {
  const SynthSpec spec = SynthSpec::preset(SynthKind::clutter, 4);
  const Sequence a = synth_sequence(spec, 9);
  const Sequence b = synth_sequence(spec, 9);
  const Sequence c = synth_sequence(spec, 10);
  EXPECT_TRUE(a.frames == b.frames);
  EXPECT_FALSE(a.frames == c.frames);
  EXPECT_EQ(a.name, "clutter_9");
}

TEST(Synth, RejectsTargetsLeavingTheCanvas) {
  SynthSpec spec = SynthSpec::preset(SynthKind::translate, 10);
  spec.velocity_x = 100.0;
  EXPECT_THROW(synth_sequence(spec, 1), ContractViolation);
  EXPECT_EQ(parse_synth_kind("zoom"), SynthKind::zoom);
  EXPECT_THROW(parse_synth_kind("spin"), ContractViolation);
}

TEST(OpeRun, SummaryAgreesWithItsRects) {
  const Sequence seq = synth_sequence(SynthSpec::preset(SynthKind::translate, 12), 7);
  const OpeOutput out = ope_run(TrackerConfig{}, seq);
  ASSERT_EQ(out.result.rects.size(), seq.size());
  EXPECT_EQ(out.result.rects[0], seq.ground_truth[0]);
  const Curve p = precision_curve(out.result.rects, seq.ground_truth);
  EXPECT_EQ(out.summary.precision.values, p.values);
  EXPECT_EQ(out.summary.precision20, precision_at(p, 20.0));
  EXPECT_EQ(out.summary.auc, auc(success_curve(out.result.rects, seq.ground_truth)));
  int updates = 0;
  for (const auto& d : out.result.diagnostics) updates += d.updated ? 1 : 0;
  EXPECT_EQ(out.summary.updates, updates);
  EXPECT_GT(out.summary.fps, 0.0);

  Sequence broken = seq;
  broken.ground_truth.pop_back();
  EXPECT_THROW(ope_run(TrackerConfig{}, broken), ContractViolation);
}

TEST(Pretrain, LossFallsAndRunsAreReproducible) {
  TrackerConfig c;
  c.features = ExtractorKind::tinycnn;
  const std::vector<Sequence> corpus{synth_sequence(SynthSpec::preset(SynthKind::clutter, 6), 1),
                                     synth_sequence(SynthSpec::preset(SynthKind::translate, 6), 2)};
  PretrainOptions o;
  o.epochs = 3;
  const PretrainedModel a = pretrain_offline(corpus, c, o);
  const PretrainedModel b = pretrain_offline(corpus, c, o);
  ASSERT_EQ(a.epoch_losses.size(), 3u);
  EXPECT_LT(a.epoch_losses.back(), a.epoch_losses.front());
  EXPECT_EQ(a.epoch_losses, b.epoch_losses);
  EXPECT_TRUE(a.head.layer1 == b.head.layer1);
  EXPECT_FALSE(a.extractor.conv1 == make_state(c).extractor.conv1);
}

TEST(Pretrain, SampleLabelPeaksOnTheTrueCentre) {
  TrackerConfig c;
  const TrackerState s = make_state(c);
  const Sequence seq = synth_sequence(SynthSpec::preset(SynthKind::translate, 2), 3);
  Rng rng(4);
  PretrainOptions o;
  for (int k = 0; k < 20; ++k) {
    const PretrainSample p = make_pretrain_sample(s, seq.frames[0], seq.ground_truth[0], o, rng);
    const CellPoint want = frame_to_cell(p.patch.geometry, 1, seq.ground_truth[0].center_x(),
                                         seq.ground_truth[0].center_y());
    const auto v = p.label.data();
    const auto i = static_cast<int>(std::max_element(v.begin(), v.end()) - v.begin());
    EXPECT_LE(std::abs(i / p.label.width() - want.row), 0.5 + 1e-9);
    EXPECT_LE(std::abs(i % p.label.width() - want.col), 0.5 + 1e-9);
  }
}

TEST(Pretrain, DivergenceIsReported) {
  TrackerConfig c;
  c.features = ExtractorKind::tinycnn;
  const std::vector<Sequence> corpus{synth_sequence(SynthSpec::preset(SynthKind::clutter, 20), 1)};
  PretrainOptions o;
  o.learning_rate = 1e-1;
  o.epochs = 2;
  EXPECT_THROW(pretrain_offline(corpus, c, o), ContractViolation);
  EXPECT_THROW(pretrain_offline({}, c, o), ContractViolation);
}
