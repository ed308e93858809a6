#include <algorithm>
#include <cmath>

#include "convtrack/evalkit.hpp"

namespace convtrack {

std::string_view to_string(SynthKind kind) {
  switch (kind) {
    case SynthKind::translate: return "translate";
    case SynthKind::zoom: return "zoom";
    case SynthKind::occlude: return "occlude";
    case SynthKind::clutter: return "clutter";
  }
  return "translate";
}

SynthKind parse_synth_kind(std::string_view name) {
  if (name == "translate") return SynthKind::translate;
  if (name == "zoom") return SynthKind::zoom;
  if (name == "occlude") return SynthKind::occlude;
  if (name == "clutter") return SynthKind::clutter;
  throw ContractViolation("unknown synthetic sequence kind '" + std::string(name) + "'");
}

SynthSpec SynthSpec::preset(SynthKind kind, int frames) {
  require(frames >= 2, "SynthSpec: at least two frames are required");
  SynthSpec s;
  s.kind = kind;
  s.frames = frames;
  const double travel = s.velocity_x * (frames - 1);
  switch (kind) {
    case SynthKind::translate:
      break;
    case SynthKind::occlude:
      s.occlusion_start = static_cast<int>(std::lround(0.4 * frames));
      s.occlusion_duration = std::max(1, static_cast<int>(std::lround(0.21 * frames)));
      break;
    case SynthKind::clutter:
      s.clutter_density = 0.15;
      break;
    case SynthKind::zoom:
      s.velocity_x = 0.0;
      s.zoom_rate = 1.01;
      s.initial = {0.0, 0.0, 30.0, 30.0};
      break;
  }
  if (kind == SynthKind::zoom) {
    const double final_side = s.initial.w * std::pow(s.zoom_rate, frames - 1);
    const int side = static_cast<int>(std::ceil(final_side * 1.5)) + 64;
    s.canvas_w = side + 32;
    s.canvas_h = side;
    s.initial = Rect::from_center(0.5 * s.canvas_w, 0.5 * s.canvas_h, 30.0, 30.0);
  } else {
    s.canvas_w = std::max(320, static_cast<int>(std::ceil(s.initial.x + s.initial.w + travel)) + 48);
  }
  return s;
}

namespace {

// Smooth value noise: bilinear interpolation of a random lattice.
class ValueNoise {
 public:
  ValueNoise(int width, int height, double spacing, Rng& rng)
      : spacing_(spacing),
        cols_(static_cast<int>(std::ceil(width / spacing)) + 2),
        rows_(static_cast<int>(std::ceil(height / spacing)) + 2),
        lattice_(static_cast<std::size_t>(cols_) * rows_) {
    for (double& v : lattice_) v = rng.uniform(-1.0, 1.0);
  }

  double operator()(double x, double y) const {
    const double gx = x / spacing_;
    const double gy = y / spacing_;
    const int ix = static_cast<int>(gx);
    const int iy = static_cast<int>(gy);
    const double tx = smooth(gx - ix);
    const double ty = smooth(gy - iy);
    const double a = at(ix, iy) + tx * (at(ix + 1, iy) - at(ix, iy));
    const double b = at(ix, iy + 1) + tx * (at(ix + 1, iy + 1) - at(ix, iy + 1));
    return a + ty * (b - a);
  }

 private:
  static double smooth(double t) { return t * t * (3.0 - 2.0 * t); }
  double at(int ix, int iy) const {
    return lattice_[static_cast<std::size_t>(std::clamp(iy, 0, rows_ - 1)) * cols_ +
                    std::clamp(ix, 0, cols_ - 1)];
  }

  double spacing_;
  int cols_;
  int rows_;
  std::vector<double> lattice_;
};

// Quadrant checker with a ramp in each colour; (u, v) in [0, 1)^2.
double target_texture(double u, double v) {
  const bool dark = (u < 0.5) != (v < 0.5);
  return dark ? 0.08 + 0.22 * v : 0.95 - 0.25 * u;
}

// Diagonal stripes, clearly different from the target.
double occluder_texture(double x, double y) {
  const double phase = std::fmod(std::abs(x + y), 6.0);
  return phase < 3.0 ? 0.35 : 0.6;
}

Rect occluder_box(const Rect& target) {
  return Rect::from_center(target.center_x(), target.center_y(), target.w * 1.25, target.h * 1.25);
}

bool inside(const Rect& r, double x, double y) {
  return x >= r.x && x < r.x + r.w && y >= r.y && y < r.y + r.h;
}

double quantize(double v) { return std::round(std::clamp(v, 0.0, 1.0) * 255.0) / 255.0; }

}  // namespace

Sequence synth_sequence(const SynthSpec& spec, std::uint64_t seed) {
  require(spec.frames >= 2, "synth_sequence: at least two frames are required");
  require(spec.canvas_w > 0 && spec.canvas_h > 0, "synth_sequence: canvas must be non-empty");
  require(spec.initial.w >= 4.0 && spec.initial.h >= 4.0, "synth_sequence: target too small");
  require(spec.zoom_rate > 0.0, "synth_sequence: zoom rate must be positive");

  Sequence seq;
  seq.name = std::string(to_string(spec.kind)) + "_" + std::to_string(seed);
  seq.ground_truth.reserve(spec.frames);
  {
    double w = spec.initial.w;
    double h = spec.initial.h;
    for (int t = 0; t < spec.frames; ++t) {
      if (t > 0) {
        w *= spec.zoom_rate;
        h *= spec.zoom_rate;
      }
      const double cx = spec.initial.center_x() + spec.velocity_x * t;
      const double cy = spec.initial.center_y() + spec.velocity_y * t;
      const Rect r = Rect::from_center(cx, cy, w, h);
      require(r.x >= 0.0 && r.y >= 0.0 && r.x + r.w <= spec.canvas_w && r.y + r.h <= spec.canvas_h,
              "synth_sequence: target leaves the canvas at frame " + std::to_string(t));
      seq.ground_truth.push_back(r);
    }
  }

  Rng rng(seed);
  const ValueNoise coarse(spec.canvas_w, spec.canvas_h, 24.0, rng);
  const ValueNoise fine(spec.canvas_w, spec.canvas_h, 6.0, rng);
  Frame background(spec.canvas_h, spec.canvas_w);
  for (int y = 0; y < spec.canvas_h; ++y)
    for (int x = 0; x < spec.canvas_w; ++x)
      background(y, x) = 0.5 + 0.18 * coarse(x + 0.5, y + 0.5) + 0.06 * fine(x + 0.5, y + 0.5);

  const int clutter = static_cast<int>(
      std::lround(spec.clutter_density * spec.canvas_w * spec.canvas_h / 1000.0));
  for (int k = 0; k < clutter; ++k) {
    const double side = rng.uniform(6.0, 14.0);
    const double x0 = rng.uniform(0.0, spec.canvas_w - side);
    const double y0 = rng.uniform(0.0, spec.canvas_h - side);
    const double value = rng.uniform(0.1, 0.9);
    for (int y = static_cast<int>(y0); y < static_cast<int>(y0 + side); ++y)
      for (int x = static_cast<int>(x0); x < static_cast<int>(x0 + side); ++x) background(y, x) = value;
  }

  constexpr int kSuper = 4;
  seq.frames.reserve(spec.frames);
  for (int t = 0; t < spec.frames; ++t) {
    Frame frame = background;
    const Rect& target = seq.ground_truth[t];
    const bool occluded = spec.occlusion_start >= 0 && t >= spec.occlusion_start &&
                          t < spec.occlusion_start + spec.occlusion_duration;
    const Rect cover = occluded ? occluder_box(target) : target;
    const int x_lo = std::max(0, static_cast<int>(std::floor(cover.x)));
    const int y_lo = std::max(0, static_cast<int>(std::floor(cover.y)));
    const int x_hi = std::min(spec.canvas_w, static_cast<int>(std::ceil(cover.x + cover.w)));
    const int y_hi = std::min(spec.canvas_h, static_cast<int>(std::ceil(cover.y + cover.h)));
    for (int y = y_lo; y < y_hi; ++y) {
      for (int x = x_lo; x < x_hi; ++x) {
        double acc = 0.0;
        for (int a = 0; a < kSuper; ++a) {
          const double sy = y + (a + 0.5) / kSuper;
          for (int b = 0; b < kSuper; ++b) {
            const double sx = x + (b + 0.5) / kSuper;
            if (occluded && inside(cover, sx, sy))
              acc += occluder_texture(sx - cover.x, sy - cover.y);
            else if (inside(target, sx, sy))
              acc += target_texture((sx - target.x) / target.w, (sy - target.y) / target.h);
            else
              acc += background(y, x);
          }
        }
        frame(y, x) = acc / (kSuper * kSuper);
      }
    }
    for (double& p : frame.pixels()) {
      if (spec.noise_std > 0.0) p += rng.normal(0.0, spec.noise_std);
      p = quantize(p);
    }
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

}  // namespace convtrack
