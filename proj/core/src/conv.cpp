#include <algorithm>
#include <cstring>
#include <vector>

#include "convtrack/numkit.hpp"

namespace convtrack {

namespace {

struct Geometry {
  int in_h, in_w, out_h, out_w, pad_h, pad_w, stride;
};

Geometry make_geometry(const Tensor3& input, const FilterStack& filters, ConvMode mode,
                       int stride) {
  require(stride >= 1, "conv2d: stride must be positive");
  require(input.channels() == filters.in_channels(),
          "conv2d: input channels do not match filter input channels");
  if (mode == ConvMode::valid)
    require(input.height() >= filters.kernel_h() && input.width() >= filters.kernel_w(),
            "conv2d: kernel larger than input in valid mode");
  Geometry g{};
  g.in_h = input.height();
  g.in_w = input.width();
  g.stride = stride;
  g.pad_h = mode == ConvMode::same ? filters.kernel_h() / 2 : 0;
  g.pad_w = mode == ConvMode::same ? filters.kernel_w() / 2 : 0;
  g.out_h = conv_output_extent(g.in_h, filters.kernel_h(), mode, stride);
  g.out_w = conv_output_extent(g.in_w, filters.kernel_w(), mode, stride);
  return g;
}

// Output columns j for which j*stride + offset lands inside [0, extent).
struct Span1 {
  int lo, hi;
};

Span1 inside_range(int offset, int stride, int extent, int out_extent) {
  int lo = 0;
  if (offset < 0) lo = (-offset + stride - 1) / stride;
  int hi = out_extent;
  const int last = extent - 1 - offset;
  if (last < 0) return {0, 0};
  hi = std::min(hi, last / stride + 1);
  return {lo, std::max(lo, hi)};
}

#if defined(__GNUC__)
using Vec4 = double __attribute__((vector_size(32)));
inline Vec4 load4(const double* p) {
  Vec4 r;
  std::memcpy(&r, p, sizeof r);
  return r;
}
inline void store4(double* p, Vec4 v) { std::memcpy(p, &v, sizeof v); }
#endif

// acc[j] += sum_v w[v] * src[j + v] for j in [0, n), taps summed in v order.
template <int K>
void row_taps_fixed(double* acc, const double* src, const double* w, int n) {
  int j = 0;
#if defined(__GNUC__)
  for (; j + 4 <= n; j += 4) {
    Vec4 s = load4(acc + j);
    for (int v = 0; v < K; ++v) s += w[v] * load4(src + j + v);
    store4(acc + j, s);
  }
#endif
  for (; j < n; ++j) {
    double s = acc[j];
    for (int v = 0; v < K; ++v) s += w[v] * src[j + v];
    acc[j] = s;
  }
}

void row_taps(double* acc, const double* src, const double* w, int kw, int n) {
  switch (kw) {
    case 3: row_taps_fixed<3>(acc, src, w, n); return;
    case 5: row_taps_fixed<5>(acc, src, w, n); return;
    case 7: row_taps_fixed<7>(acc, src, w, n); return;
    default:
      for (int j = 0; j < n; ++j) {
        double s = acc[j];
        for (int v = 0; v < kw; ++v) s += w[v] * src[j + v];
        acc[j] = s;
      }
  }
}

// g[v] += sum_j up[j] * src[j + v] for j in [0, n), with four partial sums per tap.
template <int K>
void row_corr_fixed(double* g, const double* up, const double* src, int n) {
  int j = 0;
  double part[K][4] = {};
#if defined(__GNUC__)
  Vec4 acc[K] = {};
  for (; j + 4 <= n; j += 4) {
    const Vec4 a = load4(up + j);
    for (int v = 0; v < K; ++v) acc[v] += a * load4(src + j + v);
  }
  for (int v = 0; v < K; ++v)
    for (int t = 0; t < 4; ++t) part[v][t] = acc[v][t];
#endif
  for (int v = 0; v < K; ++v) {
    double s = (part[v][0] + part[v][1]) + (part[v][2] + part[v][3]);
    for (int r = j; r < n; ++r) s += up[r] * src[r + v];
    g[v] += s;
  }
}

void row_corr(double* g, const double* up, const double* src, int kw, int n) {
  switch (kw) {
    case 3: row_corr_fixed<3>(g, up, src, n); return;
    case 5: row_corr_fixed<5>(g, up, src, n); return;
    case 7: row_corr_fixed<7>(g, up, src, n); return;
    default:
      for (int v = 0; v < kw; ++v) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) s += up[j] * src[j + v];
        g[v] += s;
      }
  }
}

}  // namespace

int conv_output_extent(int input, int kernel, ConvMode mode, int stride) {
  if (mode == ConvMode::valid) return (input - kernel) / stride + 1;
  return (input + stride - 1) / stride;
}

Tensor3 conv2d(const Tensor3& input, const FilterStack& filters, ConvMode mode, int stride) {
  const Geometry g = make_geometry(input, filters, mode, stride);
  const int out_c = filters.out_channels();
  const int in_c = filters.in_channels();
  const int kh = filters.kernel_h();
  const int kw = filters.kernel_w();
  Tensor3 out(out_c, g.out_h, g.out_w);

  std::vector<Span1> col_spans(static_cast<std::size_t>(kw));
  for (int v = 0; v < kw; ++v) col_spans[v] = inside_range(v - g.pad_w, g.stride, g.in_w, g.out_w);

  const double* in_data = input.data().data();
  const double* w_data = filters.weights().data();
  for (int o = 0; o < out_c; ++o) {
    const double bias = filters.bias()[o];
    for (int i = 0; i < g.out_h; ++i) {
      double* acc = &out(o, i, 0);
      std::fill(acc, acc + g.out_w, bias);
      for (int l = 0; l < in_c; ++l) {
        for (int u = 0; u < kh; ++u) {
          const int y = i * g.stride + u - g.pad_h;
          if (y < 0 || y >= g.in_h) continue;
          const double* row = in_data + (static_cast<std::size_t>(l) * g.in_h + y) * g.in_w;
          const double* wrow = w_data + ((static_cast<std::size_t>(o) * in_c + l) * kh + u) * kw;
          if (g.stride == 1) {
            // Columns whose taps all fall inside the row take the unrolled path.
            const int j_lo = std::min(g.pad_w, g.out_w);
            const int j_hi = std::max(j_lo, std::min(g.out_w, g.in_w - kw + 1 + g.pad_w));
            for (int j = 0; j < g.out_w; ++j) {
              if (j == j_lo && j_hi > j_lo) {
                row_taps(acc + j_lo, row + (j_lo - g.pad_w), wrow, kw, j_hi - j_lo);
                j = j_hi - 1;
                continue;
              }
              double s = acc[j];
              for (int v = 0; v < kw; ++v) {
                const int x = j + v - g.pad_w;
                if (x >= 0 && x < g.in_w) s += wrow[v] * row[x];
              }
              acc[j] = s;
            }
          } else {
            for (int v = 0; v < kw; ++v) {
              const double w = wrow[v];
              const int x0 = v - g.pad_w;
              const auto [lo, hi] = col_spans[v];
              for (int j = lo; j < hi; ++j) acc[j] += w * row[j * g.stride + x0];
            }
          }
        }
      }
    }
  }
  return out;
}

ConvGrads conv2d_grads(const Tensor3& input, const FilterStack& filters, const Tensor3& upstream,
                       ConvMode mode, int stride, bool want_input_grad) {
  const Geometry g = make_geometry(input, filters, mode, stride);
  const int out_c = filters.out_channels();
  const int in_c = filters.in_channels();
  const int kh = filters.kernel_h();
  const int kw = filters.kernel_w();
  require(upstream.channels() == out_c && upstream.height() == g.out_h &&
              upstream.width() == g.out_w,
          "conv2d_grads: upstream shape does not match the convolution output");

  ConvGrads grads;
  grads.filters = FilterStack(out_c, in_c, kh, kw);
  if (want_input_grad) grads.input = Tensor3(in_c, g.in_h, g.in_w);

  std::vector<Span1> col_spans(static_cast<std::size_t>(kw));
  for (int v = 0; v < kw; ++v) col_spans[v] = inside_range(v - g.pad_w, g.stride, g.in_w, g.out_w);

  const double* in_data = input.data().data();
  const double* up_data = upstream.data().data();
  std::vector<double> lane(static_cast<std::size_t>(g.out_w));
  // Interior output columns, where every tap reads inside the input row (stride 1).
  const int j_lo = std::min(g.pad_w, g.out_w);
  const int j_hi = std::max(j_lo, std::min(g.out_w, g.in_w - kw + 1 + g.pad_w));

  for (int o = 0; o < out_c; ++o) {
    const double* up_plane = up_data + static_cast<std::size_t>(o) * g.out_h * g.out_w;
    double bias_grad = 0.0;
    for (std::size_t k = 0; k < static_cast<std::size_t>(g.out_h) * g.out_w; ++k)
      bias_grad += up_plane[k];
    grads.filters.bias()[o] = bias_grad;

    for (int l = 0; l < in_c; ++l) {
      const double* in_plane = in_data + static_cast<std::size_t>(l) * g.in_h * g.in_w;
      for (int u = 0; u < kh; ++u) {
        double* gw = &grads.filters.weight(o, l, u, 0);
        if (g.stride == 1) {
          for (int i = 0; i < g.out_h; ++i) {
            const int y = i + u - g.pad_h;
            if (y < 0 || y >= g.in_h) continue;
            const double* row = in_plane + static_cast<std::size_t>(y) * g.in_w;
            const double* up = up_plane + static_cast<std::size_t>(i) * g.out_w;
            if (j_hi > j_lo) row_corr(gw, up + j_lo, row + (j_lo - g.pad_w), kw, j_hi - j_lo);
            for (int j = 0; j < g.out_w; ++j) {
              if (j == j_lo && j_hi > j_lo) {
                j = j_hi - 1;
                continue;
              }
              for (int v = 0; v < kw; ++v) {
                const int x = j + v - g.pad_w;
                if (x >= 0 && x < g.in_w) gw[v] += up[j] * row[x];
              }
            }
          }
          continue;
        }
        for (int v = 0; v < kw; ++v) {
          const int x0 = v - g.pad_w;
          const auto [lo, hi] = col_spans[v];
          // Per-column partial sums keep the row loop vectorizable.
          std::fill(lane.begin(), lane.end(), 0.0);
          for (int i = 0; i < g.out_h; ++i) {
            const int y = i * g.stride + u - g.pad_h;
            if (y < 0 || y >= g.in_h) continue;
            const double* row = in_plane + static_cast<std::size_t>(y) * g.in_w;
            const double* up = up_plane + static_cast<std::size_t>(i) * g.out_w;
            for (int j = lo; j < hi; ++j) lane[j] += up[j] * row[j * g.stride + x0];
          }
          double sum = 0.0;
          for (int j = lo; j < hi; ++j) sum += lane[j];
          gw[v] = sum;
        }
      }
    }
  }

  if (!want_input_grad) return grads;
  double* din = grads.input.data().data();
  if (g.stride == 1 && mode == ConvMode::same) {
    // Gather form: input row y collects from upstream row y - u + pad through the
    // kernel flipped along columns.
    std::vector<double> flipped(static_cast<std::size_t>(kw));
    for (int l = 0; l < in_c; ++l) {
      double* din_plane = din + static_cast<std::size_t>(l) * g.in_h * g.in_w;
      for (int o = 0; o < out_c; ++o) {
        const double* up_plane = up_data + static_cast<std::size_t>(o) * g.out_h * g.out_w;
        for (int u = 0; u < kh; ++u) {
          const double* w =
              filters.weights().data() + ((static_cast<std::size_t>(o) * in_c + l) * kh + u) * kw;
          for (int v = 0; v < kw; ++v) flipped[v] = w[kw - 1 - v];
          for (int y = 0; y < g.in_h; ++y) {
            const int i = y - u + g.pad_h;
            if (i < 0 || i >= g.out_h) continue;
            double* dst = din_plane + static_cast<std::size_t>(y) * g.in_w;
            const double* up = up_plane + static_cast<std::size_t>(i) * g.out_w;
            if (j_hi > j_lo)
              row_taps(dst + j_lo, up + (j_lo - g.pad_w), flipped.data(), kw, j_hi - j_lo);
            for (int x = 0; x < g.in_w; ++x) {
              if (x == j_lo && j_hi > j_lo) {
                x = j_hi - 1;
                continue;
              }
              double s = dst[x];
              for (int v = 0; v < kw; ++v) {
                const int j = x + v - g.pad_w;
                if (j >= 0 && j < g.out_w) s += flipped[v] * up[j];
              }
              dst[x] = s;
            }
          }
        }
      }
    }
    return grads;
  }
  for (int o = 0; o < out_c; ++o) {
    const double* up_plane = up_data + static_cast<std::size_t>(o) * g.out_h * g.out_w;
    for (int l = 0; l < in_c; ++l) {
      double* din_plane = din + static_cast<std::size_t>(l) * g.in_h * g.in_w;
      for (int u = 0; u < kh; ++u) {
        for (int v = 0; v < kw; ++v) {
          const double w = filters.weight(o, l, u, v);
          const int x0 = v - g.pad_w;
          const auto [lo, hi] = col_spans[v];
          for (int i = 0; i < g.out_h; ++i) {
            const int y = i * g.stride + u - g.pad_h;
            if (y < 0 || y >= g.in_h) continue;
            double* dst_row = din_plane + static_cast<std::size_t>(y) * g.in_w;
            const double* up = up_plane + static_cast<std::size_t>(i) * g.out_w;
            for (int j = lo; j < hi; ++j) dst_row[j * g.stride + x0] += w * up[j];
          }
        }
      }
    }
  }
  return grads;
}

}  // namespace convtrack
