#pragma once

// Residual transforms, hyperprior, autoregressive context model and the GMM
// parameter head, plus the quantizers that sit between them.
//
// Shapes for block size B:
//   analysis        (3,B,B)       -> (M,B/16,B/16)
//   hyper_analysis  (M,B/16,B/16) -> (N,B/64,B/64)
//   hyper_synthesis (N,B/64,B/64) -> (2M,B/16,B/16)
//   context         (M,B/16,B/16) -> (2M,B/16,B/16), causal in raster order
//   entropy head    (4M,...)      -> 9M channels = K logits, K means, K raw scales

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "lbhic/tensor.hpp"
#include "lbhic/weights.hpp"

namespace lbhic {

inline constexpr int kMixtures = 3;
inline constexpr int kEntropyHidden1 = 640;
inline constexpr int kEntropyHidden2 = 512;
inline constexpr int kSymbolMin = -128;
inline constexpr int kSymbolMax = 127;
inline constexpr float kMinScale = 1e-3f;
inline constexpr float kMaxScale = 256.0f;

/// Integer symbols in CHW layout.
struct IntTensor {
  Shape shape;
  std::vector<std::int32_t> values;

  std::int32_t at(int c, int y, int x) const {
    return values[(static_cast<std::size_t>(c) * shape.h + y) * shape.w + x];
  }
  std::int32_t& at(int c, int y, int x) {
    return values[(static_cast<std::size_t>(c) * shape.h + y) * shape.w + x];
  }
  friend bool operator==(const IntTensor&, const IntTensor&) = default;
};

using LatentCode = IntTensor;
using HyperCode = IntTensor;

struct GmmElement {
  std::array<float, kMixtures> weight{};
  std::array<float, kMixtures> mean{};
  std::array<float, kMixtures> scale{};
  friend bool operator==(const GmmElement&, const GmmElement&) = default;
};

/// One GmmElement per latent element, CHW order.
struct GmmParams {
  Shape shape;
  std::vector<GmmElement> elements;
};

Tensor analysis(const Tensor& residual, const WeightStore& weights);
Tensor synthesis(const Tensor& latent, const WeightStore& weights);
Tensor hyper_analysis(const Tensor& latent, const WeightStore& weights);
Tensor hyper_synthesis(const Tensor& hyper_latent, const WeightStore& weights);

/// Mask-A 5x5 context over the (partially) decoded latent.
Tensor context_features(const Tensor& decoded_latent, const WeightStore& weights);
/// Context feature vector (2M) at one latent position; bit-identical to the
/// column of context_features at (y, x).
std::vector<float> context_features_at(const Tensor& decoded_latent, const WeightStore& weights,
                                       int y, int x);

GmmParams entropy_params(const Tensor& hyper_features, const Tensor& context, const WeightStore& weights);
/// GMM parameters of all M channels at one latent position.
std::vector<GmmElement> entropy_params_at(const Tensor& hyper_features,
                                          std::span<const float> context_column,
                                          const WeightStore& weights, int y, int x);
/// Interprets a 9M-channel head output vector; exposed for testing.
std::vector<GmmElement> gmm_from_head(std::span<const float> head, int m_channels);

/// Round half away from zero, then clamp to [-128, 127].
std::int32_t quantize_symbol(float v);
IntTensor quantize_round(const Tensor& y);
/// Forward pass of the straight-through quantizer; identical to quantize_round.
IntTensor quantize_ste_forward(const Tensor& y);
Tensor dequantize(const IntTensor& symbols);
/// Training surrogate: y + u with u uniform in [-1/2, 1/2).
Tensor quantize_noise(const Tensor& y, Pcg32& rng);

}  // namespace lbhic
