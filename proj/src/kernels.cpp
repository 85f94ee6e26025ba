#include "lbhic/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

namespace lbhic {

namespace {

constexpr int kTile = 64;      // output pixels per GEMM tile
constexpr int kOcBlock = 4;    // output channels per micro-kernel call
constexpr int kOcChunk = 16;   // output channels per parallel work item

struct Tap {
  int ic;
  int dy;
  int dx;
};

// Maps the iteration grid onto input and output coordinates:
//   input  = in_stride * g + tap offset
//   output = out_stride * g + phase
struct GridMap {
  int grid_h;
  int grid_w;
  int in_stride;
  int out_stride;
  int phase_y;
  int phase_x;
};

std::string dims(const Shape& s) {
  return "(" + std::to_string(s.c) + "," + std::to_string(s.h) + "," + std::to_string(s.w) + ")";
}

void check_bias(std::span<const float> bias, int out_ch, const char* op) {
  if (static_cast<int>(bias.size()) != out_ch) {
    throw ShapeError(std::string(op) + ": bias length " + std::to_string(bias.size()) +
                     " != output channels " + std::to_string(out_ch));
  }
}

void check_kernel(const KernelView& k, const char* op) {
  if (k.d0 <= 0 || k.d1 <= 0 || k.kh <= 0 || k.kw <= 0 || k.data.size() != k.size()) {
    throw ShapeError(std::string(op) + ": malformed kernel");
  }
}

// Gathers a (K x kTile) column tile for grid pixels [p0, p0 + count).
void im2col_tile(const Tensor& in, std::span<const Tap> taps, const GridMap& map, int p0, int count,
                 float* col) {
  const int H = in.height();
  const int W = in.width();
  for (std::size_t k = 0; k < taps.size(); ++k) {
    const Tap& t = taps[k];
    const float* plane = in.channel(t.ic).data();
    float* dst = col + k * kTile;
    int t_idx = 0;
    for (; t_idx < count; ++t_idx) {
      const int p = p0 + t_idx;
      const int gy = p / map.grid_w;
      const int gx = p - gy * map.grid_w;
      const int iy = map.in_stride * gy + t.dy;
      const int ix = map.in_stride * gx + t.dx;
      dst[t_idx] = (iy >= 0 && iy < H && ix >= 0 && ix < W) ? plane[iy * W + ix] : 0.0f;
    }
    for (; t_idx < kTile; ++t_idx) dst[t_idx] = 0.0f;
  }
}

// acc[r][t] = bias[r] + sum_k w[r][k] * col[k][t], k ascending, summed in
// double (float products are exact there) and rounded once.
void micro_kernel(const float* col, int K, const float* const* wrows, const float* bias, int rows,
                  float (*acc)[kTile]) {
  if (rows == kOcBlock) {
    double a0[kTile], a1[kTile], a2[kTile], a3[kTile];
    for (int t = 0; t < kTile; ++t) {
      a0[t] = bias[0];
      a1[t] = bias[1];
      a2[t] = bias[2];
      a3[t] = bias[3];
    }
    const float* w0 = wrows[0];
    const float* w1 = wrows[1];
    const float* w2 = wrows[2];
    const float* w3 = wrows[3];
    for (int k = 0; k < K; ++k) {
      const float* c = col + static_cast<std::size_t>(k) * kTile;
      const double x0 = w0[k], x1 = w1[k], x2 = w2[k], x3 = w3[k];
#pragma omp simd
      for (int t = 0; t < kTile; ++t) {
        const double v = c[t];
        a0[t] += x0 * v;
        a1[t] += x1 * v;
        a2[t] += x2 * v;
        a3[t] += x3 * v;
      }
    }
    for (int t = 0; t < kTile; ++t) {
      acc[0][t] = static_cast<float>(a0[t]);
      acc[1][t] = static_cast<float>(a1[t]);
      acc[2][t] = static_cast<float>(a2[t]);
      acc[3][t] = static_cast<float>(a3[t]);
    }
    return;
  }
  for (int r = 0; r < rows; ++r) {
    double a[kTile];
    for (int t = 0; t < kTile; ++t) a[t] = bias[r];
    const float* w = wrows[r];
    for (int k = 0; k < K; ++k) {
      const float* c = col + static_cast<std::size_t>(k) * kTile;
      const double x = w[k];
#pragma omp simd
      for (int t = 0; t < kTile; ++t) a[t] += x * static_cast<double>(c[t]);
    }
    for (int t = 0; t < kTile; ++t) acc[r][t] = static_cast<float>(a[t]);
  }
}

// weights: row-major (out_ch x taps.size()).
void conv_core(const Tensor& in, std::span<const Tap> taps, const float* weights,
               std::span<const float> bias, int out_ch, const GridMap& map, Tensor& out) {
  const int K = static_cast<int>(taps.size());
  const int pixels = map.grid_h * map.grid_w;
  if (pixels == 0 || out_ch == 0) return;
  const int tiles = (pixels + kTile - 1) / kTile;
  const int chunks = (out_ch + kOcChunk - 1) / kOcChunk;
  const int items = tiles * chunks;
  const int out_w = out.width();

#pragma omp parallel if (items > 1 && !omp_in_parallel())
  {
    std::vector<float> col(static_cast<std::size_t>(std::max(K, 1)) * kTile);
    float acc[kOcBlock][kTile];
#pragma omp for schedule(static)
    for (int item = 0; item < items; ++item) {
      const int tile = item / chunks;
      const int chunk = item - tile * chunks;
      const int p0 = tile * kTile;
      const int count = std::min(kTile, pixels - p0);
      im2col_tile(in, taps, map, p0, count, col.data());
      const int oc_end = std::min(out_ch, (chunk + 1) * kOcChunk);
      for (int oc = chunk * kOcChunk; oc < oc_end; oc += kOcBlock) {
        const int rows = std::min(kOcBlock, oc_end - oc);
        const float* wrows[kOcBlock];
        for (int r = 0; r < rows; ++r) wrows[r] = weights + static_cast<std::size_t>(oc + r) * K;
        micro_kernel(col.data(), K, wrows, bias.data() + oc, rows, acc);
        for (int r = 0; r < rows; ++r) {
          float* plane = out.channel(oc + r).data();
          for (int t = 0; t < count; ++t) {
            const int p = p0 + t;
            const int gy = p / map.grid_w;
            const int gx = p - gy * map.grid_w;
            const int oy = map.out_stride * gy + map.phase_y;
            const int ox = map.out_stride * gx + map.phase_x;
            plane[oy * out_w + ox] = acc[r][t];
          }
        }
      }
    }
  }
}

int floor_div(int a, int b) { return (a >= 0) ? a / b : -((-a + b - 1) / b); }

std::vector<Tap> masked_taps(const KernelView& kernel, std::vector<float>* weights) {
  const int k = kernel.kh;
  const int centre = k / 2;
  const int pad = k / 2;
  std::vector<Tap> taps;
  for (int ic = 0; ic < kernel.d1; ++ic)
    for (int ky = 0; ky < k; ++ky)
      for (int kx = 0; kx < k; ++kx)
        if (ky < centre || (ky == centre && kx < centre)) taps.push_back({ic, ky - pad, kx - pad});
  if (weights) {
    weights->resize(static_cast<std::size_t>(kernel.d0) * taps.size());
    for (int oc = 0; oc < kernel.d0; ++oc) {
      std::size_t i = static_cast<std::size_t>(oc) * taps.size();
      for (int ic = 0; ic < kernel.d1; ++ic)
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx)
            if (ky < centre || (ky == centre && kx < centre)) (*weights)[i++] = kernel.at(oc, ic, ky, kx);
    }
  }
  return taps;
}

void check_masked(const Tensor& input, const KernelView& kernel, std::span<const float> bias) {
  check_kernel(kernel, "masked_conv2d");
  if (kernel.kh != kernel.kw || kernel.kh % 2 == 0) {
    throw ConfigError("masked_conv2d: kernel must be square with odd size, got " +
                      std::to_string(kernel.kh) + "x" + std::to_string(kernel.kw));
  }
  if (kernel.d1 != input.channels()) {
    throw ShapeError("masked_conv2d: kernel expects " + std::to_string(kernel.d1) +
                     " input channels, input is " + dims(input.shape()));
  }
  check_bias(bias, kernel.d0, "masked_conv2d");
}

}  // namespace

Tensor conv2d(const Tensor& input, const KernelView& kernel, std::span<const float> bias,
              int stride, int pad) {
  check_kernel(kernel, "conv2d");
  if (stride < 1 || pad < 0) throw ShapeError("conv2d: stride must be >= 1 and pad >= 0");
  if (kernel.d1 != input.channels()) {
    throw ShapeError("conv2d: kernel expects " + std::to_string(kernel.d1) +
                     " input channels, input is " + dims(input.shape()));
  }
  check_bias(bias, kernel.d0, "conv2d");
  const int oh = (input.height() + 2 * pad - kernel.kh) / stride + 1;
  const int ow = (input.width() + 2 * pad - kernel.kw) / stride + 1;
  if (input.height() + 2 * pad < kernel.kh || input.width() + 2 * pad < kernel.kw) {
    throw ShapeError("conv2d: kernel larger than padded input " + dims(input.shape()));
  }
  std::vector<Tap> taps;
  taps.reserve(kernel.size() / kernel.d0);
  for (int ic = 0; ic < kernel.d1; ++ic)
    for (int ky = 0; ky < kernel.kh; ++ky)
      for (int kx = 0; kx < kernel.kw; ++kx) taps.push_back({ic, ky - pad, kx - pad});
  Tensor out({kernel.d0, oh, ow});
  conv_core(input, taps, kernel.data.data(), bias, kernel.d0, {oh, ow, stride, 1, 0, 0}, out);
  return out;
}

Tensor tconv2d(const Tensor& input, const KernelView& kernel, std::span<const float> bias,
               int stride, int pad, int output_padding) {
  check_kernel(kernel, "tconv2d");
  if (stride < 1 || pad < 0 || output_padding < 0 || output_padding >= stride) {
    throw ShapeError("tconv2d: need stride >= 1, pad >= 0, 0 <= output_padding < stride");
  }
  if (kernel.d0 != input.channels()) {
    throw ShapeError("tconv2d: kernel expects " + std::to_string(kernel.d0) +
                     " input channels, input is " + dims(input.shape()));
  }
  const int out_ch = kernel.d1;
  check_bias(bias, out_ch, "tconv2d");
  const int oh = (input.height() - 1) * stride - 2 * pad + kernel.kh + output_padding;
  const int ow = (input.width() - 1) * stride - 2 * pad + kernel.kw + output_padding;
  if (oh <= 0 || ow <= 0) throw ShapeError("tconv2d: empty output for " + dims(input.shape()));
  Tensor out({out_ch, oh, ow});

  // Each output phase (oy mod s, ox mod s) is an ordinary stride-1 correlation
  // over the input with the kernel taps of matching residue.
  std::vector<Tap> taps;
  std::vector<float> weights;
  for (int ry = 0; ry < std::min(stride, oh); ++ry) {
    for (int rx = 0; rx < std::min(stride, ow); ++rx) {
      taps.clear();
      for (int ic = 0; ic < kernel.d0; ++ic)
        for (int ky = 0; ky < kernel.kh; ++ky) {
          if ((ry + pad - ky) % stride != 0) continue;
          for (int kx = 0; kx < kernel.kw; ++kx) {
            if ((rx + pad - kx) % stride != 0) continue;
            taps.push_back({ic, floor_div(ry + pad - ky, stride), floor_div(rx + pad - kx, stride)});
          }
        }
      const std::size_t K = taps.size();
      weights.assign(static_cast<std::size_t>(out_ch) * K, 0.0f);
      for (int oc = 0; oc < out_ch; ++oc) {
        std::size_t i = static_cast<std::size_t>(oc) * K;
        for (int ic = 0; ic < kernel.d0; ++ic)
          for (int ky = 0; ky < kernel.kh; ++ky) {
            if ((ry + pad - ky) % stride != 0) continue;
            for (int kx = 0; kx < kernel.kw; ++kx) {
              if ((rx + pad - kx) % stride != 0) continue;
              weights[i++] = kernel.at(ic, oc, ky, kx);
            }
          }
      }
      const int gh = (oh - ry + stride - 1) / stride;
      const int gw = (ow - rx + stride - 1) / stride;
      conv_core(input, taps, weights.data(), bias, out_ch, {gh, gw, 1, stride, ry, rx}, out);
    }
  }
  return out;
}

Tensor masked_conv2d(const Tensor& input, const KernelView& kernel, std::span<const float> bias) {
  check_masked(input, kernel, bias);
  std::vector<float> weights;
  const std::vector<Tap> taps = masked_taps(kernel, &weights);
  Tensor out({kernel.d0, input.height(), input.width()});
  conv_core(input, taps, weights.data(), bias, kernel.d0,
            {input.height(), input.width(), 1, 1, 0, 0}, out);
  return out;
}

// out[o] = bias[o] + sum_k row_o[offset(k)] * column[k], accumulated in k order
// in double for each o. Eight rows advance together so the sums are independent chains.
template <class Offset>
void dot_rows(const float* w, std::size_t row_stride, Offset offset, std::size_t K, const float* column,
              std::span<const float> bias, float* out, int rows) {
  constexpr int kRows = 8;
  int o = 0;
  for (; o + kRows <= rows; o += kRows) {
    double acc[kRows];
    const float* r[kRows];
    for (int j = 0; j < kRows; ++j) {
      acc[j] = bias[o + j];
      r[j] = w + static_cast<std::size_t>(o + j) * row_stride;
    }
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t at = offset(k);
      const double v = column[k];
      for (int j = 0; j < kRows; ++j) acc[j] += static_cast<double>(r[j][at]) * v;
    }
    for (int j = 0; j < kRows; ++j) out[o + j] = static_cast<float>(acc[j]);
  }
  for (; o < rows; ++o) {
    const float* r = w + static_cast<std::size_t>(o) * row_stride;
    double acc = bias[o];
    for (std::size_t k = 0; k < K; ++k) acc += static_cast<double>(r[offset(k)]) * column[k];
    out[o] = static_cast<float>(acc);
  }
}

std::vector<float> masked_conv2d_at(const Tensor& input, const KernelView& kernel,
                                    std::span<const float> bias, int y, int x) {
  check_masked(input, kernel, bias);
  if (y < 0 || y >= input.height() || x < 0 || x >= input.width()) {
    throw ShapeError("masked_conv2d_at: position outside " + dims(input.shape()));
  }
  const std::vector<Tap> taps = masked_taps(kernel, nullptr);
  const std::size_t K = taps.size();
  const int pad = kernel.kh / 2;
  std::vector<float> column(K);
  std::vector<std::size_t> offsets(K);
  for (std::size_t k = 0; k < K; ++k) {
    const int iy = y + taps[k].dy;
    const int ix = x + taps[k].dx;
    column[k] = (iy >= 0 && iy < input.height() && ix >= 0 && ix < input.width())
                    ? input.at(taps[k].ic, iy, ix)
                    : 0.0f;
    offsets[k] = (static_cast<std::size_t>(taps[k].ic) * kernel.kh + (taps[k].dy + pad)) * kernel.kw +
                 (taps[k].dx + pad);
  }
  std::vector<float> out(kernel.d0);
  const std::size_t row_stride = static_cast<std::size_t>(kernel.d1) * kernel.kh * kernel.kw;
  dot_rows(kernel.data.data(), row_stride, [&](std::size_t k) { return offsets[k]; }, K, column.data(), bias,
           out.data(), kernel.d0);
  return out;
}

std::vector<float> pointwise(std::span<const float> input, const KernelView& kernel,
                             std::span<const float> bias) {
  check_kernel(kernel, "pointwise");
  if (kernel.kh != 1 || kernel.kw != 1 || kernel.d1 != static_cast<int>(input.size())) {
    throw ShapeError("pointwise: kernel does not match a 1x1 map over " +
                     std::to_string(input.size()) + " channels");
  }
  check_bias(bias, kernel.d0, "pointwise");
  std::vector<float> out(kernel.d0);
  const std::size_t K = input.size();
  dot_rows(kernel.data.data(), K, [](std::size_t k) { return k; }, K, input.data(), bias, out.data(),
           kernel.d0);
  return out;
}

void activate_inplace(std::span<float> values, Activation kind) {
  switch (kind) {
    case Activation::none:
      return;
    case Activation::leaky_relu:
      for (float& v : values) v = v < 0.0f ? v * kLeakySlope : v;
      return;
    case Activation::sigmoid:
      for (float& v : values) v = 1.0f / (1.0f + std::exp(-v));
      return;
  }
}

void activate_inplace(Tensor& t, Activation kind) { activate_inplace(t.data(), kind); }

Tensor activation(const Tensor& t, Activation kind) {
  Tensor out = t;
  activate_inplace(out, kind);
  return out;
}

Tensor strip_pool(const Tensor& input, PoolDirection direction) {
  if (input.empty() || input.height() < 1 || input.width() < 1) {
    throw ShapeError("strip_pool: empty tensor " + dims(input.shape()));
  }
  const int C = input.channels();
  const int H = input.height();
  const int W = input.width();
  if (direction == PoolDirection::vertical) {
    Tensor out({C, 1, W});
    for (int c = 0; c < C; ++c)
      for (int x = 0; x < W; ++x) {
        double sum = 0.0;
        for (int y = 0; y < H; ++y) sum += input.at(c, y, x);
        out.at(c, 0, x) = static_cast<float>(sum / H);
      }
    return out;
  }
  Tensor out({C, H, 1});
  for (int c = 0; c < C; ++c)
    for (int y = 0; y < H; ++y) {
      double sum = 0.0;
      for (int x = 0; x < W; ++x) sum += input.at(c, y, x);
      out.at(c, y, 0) = static_cast<float>(sum / W);
    }
  return out;
}

Tensor broadcast_expand(const Tensor& input, int target_h, int target_w) {
  const int H = input.height();
  const int W = input.width();
  if ((H != 1 && H != target_h) || (W != 1 && W != target_w) || target_h < 1 || target_w < 1) {
    throw ShapeError("broadcast_expand: cannot expand " + dims(input.shape()) + " to (" +
                     std::to_string(target_h) + "," + std::to_string(target_w) + ")");
  }
  Tensor out({input.channels(), target_h, target_w});
  for (int c = 0; c < input.channels(); ++c)
    for (int y = 0; y < target_h; ++y)
      for (int x = 0; x < target_w; ++x)
        out.at(c, y, x) = input.at(c, H == 1 ? 0 : y, W == 1 ? 0 : x);
  return out;
}

Tensor avg_pool(const Tensor& input, int factor) {
  if (factor < 1) throw ShapeError("avg_pool: factor must be >= 1");
  if (factor == 1) return input;
  const int oh = (input.height() + factor - 1) / factor;
  const int ow = (input.width() + factor - 1) / factor;
  Tensor out({input.channels(), oh, ow});
  for (int c = 0; c < input.channels(); ++c)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        float sum = 0.0f;
        int n = 0;
        for (int dy = 0; dy < factor && y * factor + dy < input.height(); ++dy)
          for (int dx = 0; dx < factor && x * factor + dx < input.width(); ++dx, ++n)
            sum += input.at(c, y * factor + dy, x * factor + dx);
        out.at(c, y, x) = sum / static_cast<float>(n);
      }
  return out;
}

Tensor upsample_nearest(const Tensor& input, int factor, int h, int w) {
  if (factor < 1 || (h + factor - 1) / factor > input.height() ||
      (w + factor - 1) / factor > input.width()) {
    throw ShapeError("upsample_nearest: " + dims(input.shape()) + " cannot cover (" +
                     std::to_string(h) + "," + std::to_string(w) + ")");
  }
  Tensor out({input.channels(), h, w});
  for (int c = 0; c < input.channels(); ++c)
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) out.at(c, y, x) = input.at(c, y / factor, x / factor);
  return out;
}

Tensor nonlocal_block(const Tensor& input, const NonlocalWeights& wts, int kv_pool) {
  const int C = input.channels();
  if (C < 2) throw ConfigError("nonlocal_block: needs at least 2 channels, got " + std::to_string(C));
  const Tensor theta = conv2d(input, wts.theta, wts.theta_bias, 1, 0);
  const Tensor phi = avg_pool(conv2d(input, wts.phi, wts.phi_bias, 1, 0), kv_pool);
  const Tensor g = avg_pool(conv2d(input, wts.g, wts.g_bias, 1, 0), kv_pool);
  if (theta.channels() != phi.channels() || g.channels() != wts.out.d1) {
    throw ShapeError("nonlocal_block: embedding widths disagree");
  }
  const int inner = theta.channels();
  const int inner_g = g.channels();
  const int queries = static_cast<int>(theta.shape().plane());
  const int keys = static_cast<int>(phi.shape().plane());

  // Attention output y, laid out (inner_g, H, W).
  Tensor y({inner_g, input.height(), input.width()});
#pragma omp parallel if (!omp_in_parallel())
  {
    std::vector<float> logits(keys);
    std::vector<float> q(inner);
#pragma omp for schedule(static)
    for (int i = 0; i < queries; ++i) {
      for (int c = 0; c < inner; ++c) q[c] = theta.channel(c)[i];
      float peak = -INFINITY;
      for (int j = 0; j < keys; ++j) {
        float dot = 0.0f;
        for (int c = 0; c < inner; ++c) dot += q[c] * phi.channel(c)[j];
        logits[j] = dot;
        peak = std::max(peak, dot);
      }
      float total = 0.0f;
      for (int j = 0; j < keys; ++j) {
        logits[j] = std::exp(logits[j] - peak);
        total += logits[j];
      }
      for (int c = 0; c < inner_g; ++c) {
        const float* gc = g.channel(c).data();
        float acc = 0.0f;
        for (int j = 0; j < keys; ++j) acc += logits[j] * gc[j];
        y.channel(c)[i] = acc / total;
      }
    }
  }
  return add(conv2d(y, wts.out, wts.out_bias, 1, 0), input);
}

}  // namespace lbhic
