#pragma once

// OpenMP-parallel tensor kernels.
//
// Every output element is produced by exactly one thread with a fixed
// accumulation order: bias first, then taps in (input channel, kernel row,
// kernel column) order, summed in double and rounded to float once. Results are therefore bit-identical for any thread
// count and match the serial versions in lbhic/reference.hpp exactly.

#include <span>
#include <vector>

#include "lbhic/tensor.hpp"

namespace lbhic {

inline constexpr float kLeakySlope = 0.2f;

enum class Activation { none, leaky_relu, sigmoid };
enum class PoolDirection { vertical, horizontal };

/// Zero-padded direct convolution; kernel layout (out, in, kh, kw).
Tensor conv2d(const Tensor& input, const KernelView& kernel, std::span<const float> bias,
              int stride, int pad);

/// Transposed (fractionally strided) convolution; kernel layout (in, out, kh, kw).
/// Output extent is (H - 1) * stride - 2 * pad + k + output_padding.
Tensor tconv2d(const Tensor& input, const KernelView& kernel, std::span<const float> bias,
               int stride, int pad, int output_padding = 0);

/// Mask-A causal convolution with "same" padding: the centre tap and every tap
/// after it in raster order are excluded.
Tensor masked_conv2d(const Tensor& input, const KernelView& kernel, std::span<const float> bias);

/// masked_conv2d evaluated at a single output position, all output channels.
/// Bit-identical to the corresponding column of masked_conv2d.
std::vector<float> masked_conv2d_at(const Tensor& input, const KernelView& kernel,
                                    std::span<const float> bias, int y, int x);

/// 1x1 convolution of a single feature vector; same arithmetic as conv2d with k = 1.
std::vector<float> pointwise(std::span<const float> input, const KernelView& kernel,
                             std::span<const float> bias);

void activate_inplace(Tensor& t, Activation kind);
void activate_inplace(std::span<float> values, Activation kind);
Tensor activation(const Tensor& t, Activation kind);

/// Mean over a full spatial axis: vertical gives (C, 1, W), horizontal (C, H, 1).
Tensor strip_pool(const Tensor& input, PoolDirection direction);

/// Replicates a singleton spatial axis up to (target_h, target_w).
Tensor broadcast_expand(const Tensor& input, int target_h, int target_w);

/// Mean over factor x factor windows; partial windows at the edges average what they cover.
Tensor avg_pool(const Tensor& input, int factor);

/// Nearest-neighbour upsampling cropped to (h, w).
Tensor upsample_nearest(const Tensor& input, int factor, int h, int w);

struct NonlocalWeights {
  KernelView theta;
  std::span<const float> theta_bias;
  KernelView phi;
  std::span<const float> phi_bias;
  KernelView g;
  std::span<const float> g_bias;
  KernelView out;
  std::span<const float> out_bias;
};

/// Embedded-Gaussian non-local block with residual connection.
/// kv_pool > 1 average-pools the key/value embeddings before attention.
Tensor nonlocal_block(const Tensor& input, const NonlocalWeights& weights, int kv_pool = 1);

}  // namespace lbhic
