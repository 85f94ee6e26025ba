#include "lbhic/neural_codec.hpp"

#include <algorithm>
#include <cmath>

#include "layers.hpp"

namespace lbhic {

using layers::conv;
using layers::tconv;

namespace {

void require_divisible(const Tensor& t, int factor, const char* op) {
  if (t.height() % factor != 0 || t.width() % factor != 0 || t.height() == 0 || t.width() == 0) {
    throw ShapeError(std::string(op) + ": spatial dims must be non-zero multiples of " +
                     std::to_string(factor));
  }
}

}  // namespace

Tensor analysis(const Tensor& residual, const WeightStore& w) {
  require_divisible(residual, 16, "analysis");
  Tensor y = conv(residual, w, "codec.analysis.0", 2, 2, Activation::leaky_relu);
  y = conv(y, w, "codec.analysis.1", 2, 2, Activation::leaky_relu);
  y = conv(y, w, "codec.analysis.2", 2, 2, Activation::leaky_relu);
  return conv(y, w, "codec.analysis.3", 2, 2);
}

Tensor synthesis(const Tensor& latent, const WeightStore& w) {
  Tensor x = tconv(latent, w, "codec.synthesis.0", 2, 2, 1, Activation::leaky_relu);
  x = tconv(x, w, "codec.synthesis.1", 2, 2, 1, Activation::leaky_relu);
  x = tconv(x, w, "codec.synthesis.2", 2, 2, 1, Activation::leaky_relu);
  return tconv(x, w, "codec.synthesis.3", 2, 2, 1);
}

Tensor hyper_analysis(const Tensor& latent, const WeightStore& w) {
  require_divisible(latent, 4, "hyper_analysis");
  const Tensor z = conv(abs(latent), w, "codec.hyper_analysis.0", 2, 2, Activation::leaky_relu);
  return conv(z, w, "codec.hyper_analysis.1", 2, 2);
}

Tensor hyper_synthesis(const Tensor& hyper_latent, const WeightStore& w) {
  const Tensor h = tconv(hyper_latent, w, "codec.hyper_synthesis.0", 2, 2, 1, Activation::leaky_relu);
  return tconv(h, w, "codec.hyper_synthesis.1", 2, 2, 1);
}

Tensor context_features(const Tensor& decoded_latent, const WeightStore& w) {
  return masked_conv2d(decoded_latent, w.kernel("codec.context.weight"), w.vector("codec.context.bias"));
}

std::vector<float> context_features_at(const Tensor& decoded_latent, const WeightStore& w, int y, int x) {
  return masked_conv2d_at(decoded_latent, w.kernel("codec.context.weight"),
                          w.vector("codec.context.bias"), y, x);
}

std::vector<GmmElement> gmm_from_head(std::span<const float> head, int m) {
  if (static_cast<int>(head.size()) != 3 * kMixtures * m) {
    throw ShapeError("gmm_from_head: expected " + std::to_string(3 * kMixtures * m) + " values, got " +
                     std::to_string(head.size()));
  }
  std::vector<GmmElement> out(m);
  for (int c = 0; c < m; ++c) {
    GmmElement& g = out[c];
    float logits[kMixtures];
    float peak = -INFINITY;
    for (int k = 0; k < kMixtures; ++k) {
      logits[k] = head[k * m + c];
      peak = std::max(peak, logits[k]);
    }
    float total = 0.0f;
    for (int k = 0; k < kMixtures; ++k) {
      logits[k] = std::exp(logits[k] - peak);
      total += logits[k];
    }
    for (int k = 0; k < kMixtures; ++k) {
      g.weight[k] = logits[k] / total;
      g.mean[k] = head[(kMixtures + k) * m + c];
      g.scale[k] = std::clamp(std::exp(head[(2 * kMixtures + k) * m + c]), kMinScale, kMaxScale);
    }
  }
  return out;
}

GmmParams entropy_params(const Tensor& hyper_features, const Tensor& context, const WeightStore& w) {
  if (hyper_features.shape() != context.shape()) {
    throw ShapeError("entropy_params: hyper and context features differ in shape");
  }
  Tensor h = conv(concat_channels(hyper_features, context), w, "codec.entropy.0", 1, 0, Activation::leaky_relu);
  h = conv(h, w, "codec.entropy.1", 1, 0, Activation::leaky_relu);
  h = conv(h, w, "codec.entropy.2", 1, 0);
  const int m = h.channels() / (3 * kMixtures);
  GmmParams params{{m, h.height(), h.width()}, std::vector<GmmElement>(static_cast<std::size_t>(m) * h.shape().plane())};
  std::vector<float> column(h.channels());
  for (int y = 0; y < h.height(); ++y)
    for (int x = 0; x < h.width(); ++x) {
      for (int c = 0; c < h.channels(); ++c) column[c] = h.at(c, y, x);
      const auto elems = gmm_from_head(column, m);
      for (int c = 0; c < m; ++c) params.elements[(static_cast<std::size_t>(c) * h.height() + y) * h.width() + x] = elems[c];
    }
  return params;
}

std::vector<GmmElement> entropy_params_at(const Tensor& hyper_features, std::span<const float> context_column,
                                          const WeightStore& w, int y, int x) {
  const int hc = hyper_features.channels();
  if (static_cast<int>(context_column.size()) != hc) {
    throw ShapeError("entropy_params_at: context column length differs from hyper channels");
  }
  std::vector<float> input(static_cast<std::size_t>(2 * hc));
  for (int c = 0; c < hc; ++c) input[c] = hyper_features.at(c, y, x);
  std::copy(context_column.begin(), context_column.end(), input.begin() + hc);
  auto h = pointwise(input, w.kernel("codec.entropy.0.weight"), w.vector("codec.entropy.0.bias"));
  activate_inplace(h, Activation::leaky_relu);
  h = pointwise(h, w.kernel("codec.entropy.1.weight"), w.vector("codec.entropy.1.bias"));
  activate_inplace(h, Activation::leaky_relu);
  h = pointwise(h, w.kernel("codec.entropy.2.weight"), w.vector("codec.entropy.2.bias"));
  return gmm_from_head(h, static_cast<int>(h.size()) / (3 * kMixtures));
}

std::int32_t quantize_symbol(float v) {
  const float r = std::round(v);
  if (!(r >= static_cast<float>(kSymbolMin))) return kSymbolMin;
  if (r > static_cast<float>(kSymbolMax)) return kSymbolMax;
  return static_cast<std::int32_t>(r);
}

IntTensor quantize_round(const Tensor& y) {
  IntTensor q{y.shape(), std::vector<std::int32_t>(y.size())};
  auto src = y.data();
  for (std::size_t i = 0; i < src.size(); ++i) q.values[i] = quantize_symbol(src[i]);
  return q;
}

IntTensor quantize_ste_forward(const Tensor& y) { return quantize_round(y); }

Tensor dequantize(const IntTensor& symbols) {
  Tensor t(symbols.shape);
  auto dst = t.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] = static_cast<float>(symbols.values[i]);
  return t;
}

Tensor quantize_noise(const Tensor& y, Pcg32& rng) {
  Tensor out = y;
  for (float& v : out.data()) v += rng.next_unit() - 0.5f;
  return out;
}

}  // namespace lbhic
