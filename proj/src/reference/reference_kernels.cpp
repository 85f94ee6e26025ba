#include "lbhic/reference.hpp"

#include <cmath>

namespace lbhic::reference {

namespace {

float sample(const Tensor& t, int c, int y, int x) {
  return (y >= 0 && y < t.height() && x >= 0 && x < t.width()) ? t.at(c, y, x) : 0.0f;
}

}  // namespace

Tensor conv2d(const Tensor& input, const KernelView& kernel, std::span<const float> bias,
              int stride, int pad) {
  if (kernel.d1 != input.channels() || static_cast<int>(bias.size()) != kernel.d0) {
    throw ShapeError("reference::conv2d: shape mismatch");
  }
  const int oh = (input.height() + 2 * pad - kernel.kh) / stride + 1;
  const int ow = (input.width() + 2 * pad - kernel.kw) / stride + 1;
  Tensor out({kernel.d0, oh, ow});
  for (int oc = 0; oc < kernel.d0; ++oc)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bias[oc];
        for (int ic = 0; ic < kernel.d1; ++ic)
          for (int ky = 0; ky < kernel.kh; ++ky)
            for (int kx = 0; kx < kernel.kw; ++kx)
              acc += static_cast<double>(kernel.at(oc, ic, ky, kx)) *
                     sample(input, ic, oy * stride - pad + ky, ox * stride - pad + kx);
        out.at(oc, oy, ox) = static_cast<float>(acc);
      }
  return out;
}

Tensor tconv2d(const Tensor& input, const KernelView& kernel, std::span<const float> bias,
               int stride, int pad, int output_padding) {
  if (kernel.d0 != input.channels() || static_cast<int>(bias.size()) != kernel.d1) {
    throw ShapeError("reference::tconv2d: shape mismatch");
  }
  const int oh = (input.height() - 1) * stride - 2 * pad + kernel.kh + output_padding;
  const int ow = (input.width() - 1) * stride - 2 * pad + kernel.kw + output_padding;
  Tensor out({kernel.d1, oh, ow});
  for (int oc = 0; oc < kernel.d1; ++oc)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double acc = bias[oc];
        for (int ic = 0; ic < kernel.d0; ++ic)
          for (int ky = 0; ky < kernel.kh; ++ky) {
            const int ny = oy + pad - ky;
            if (ny % stride != 0) continue;
            for (int kx = 0; kx < kernel.kw; ++kx) {
              const int nx = ox + pad - kx;
              if (nx % stride != 0) continue;
              const int iy = ny >= 0 ? ny / stride : -((-ny) / stride);
              const int ix = nx >= 0 ? nx / stride : -((-nx) / stride);
              acc += static_cast<double>(kernel.at(ic, oc, ky, kx)) * sample(input, ic, iy, ix);
            }
          }
        out.at(oc, oy, ox) = static_cast<float>(acc);
      }
  return out;
}

Tensor masked_conv2d(const Tensor& input, const KernelView& kernel, std::span<const float> bias) {
  if (kernel.kh % 2 == 0 || kernel.kh != kernel.kw) {
    throw ConfigError("reference::masked_conv2d: kernel must be square with odd size");
  }
  const int k = kernel.kh;
  const int centre = k / 2;
  Tensor out({kernel.d0, input.height(), input.width()});
  for (int oc = 0; oc < kernel.d0; ++oc)
    for (int y = 0; y < input.height(); ++y)
      for (int x = 0; x < input.width(); ++x) {
        double acc = bias[oc];
        for (int ic = 0; ic < kernel.d1; ++ic)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              if (ky > centre || (ky == centre && kx >= centre)) continue;
              acc += static_cast<double>(kernel.at(oc, ic, ky, kx)) *
                     sample(input, ic, y + ky - centre, x + kx - centre);
            }
        out.at(oc, y, x) = static_cast<float>(acc);
      }
  return out;
}

Tensor nonlocal_block(const Tensor& input, const NonlocalWeights& wts, int kv_pool) {
  if (input.channels() < 2) throw ConfigError("reference::nonlocal_block: needs >= 2 channels");
  const Tensor theta = reference::conv2d(input, wts.theta, wts.theta_bias, 1, 0);
  const Tensor phi = avg_pool(reference::conv2d(input, wts.phi, wts.phi_bias, 1, 0), kv_pool);
  const Tensor g = avg_pool(reference::conv2d(input, wts.g, wts.g_bias, 1, 0), kv_pool);
  const int queries = static_cast<int>(theta.shape().plane());
  const int keys = static_cast<int>(phi.shape().plane());
  Tensor y({g.channels(), input.height(), input.width()});
  std::vector<float> weight(keys);
  for (int i = 0; i < queries; ++i) {
    float peak = -INFINITY;
    for (int j = 0; j < keys; ++j) {
      float dot = 0.0f;
      for (int c = 0; c < theta.channels(); ++c) dot += theta.channel(c)[i] * phi.channel(c)[j];
      weight[j] = dot;
      if (dot > peak) peak = dot;
    }
    float total = 0.0f;
    for (int j = 0; j < keys; ++j) {
      weight[j] = std::exp(weight[j] - peak);
      total += weight[j];
    }
    for (int c = 0; c < g.channels(); ++c) {
      float acc = 0.0f;
      for (int j = 0; j < keys; ++j) acc += weight[j] * g.channel(c)[j];
      y.channel(c)[i] = acc / total;
    }
  }
  return add(reference::conv2d(y, wts.out, wts.out_bias, 1, 0), input);
}

}  // namespace lbhic::reference
