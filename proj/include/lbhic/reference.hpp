#pragma once

// Serial reference kernels. Same arithmetic and accumulation order as the
// OpenMP kernels in lbhic/kernels.hpp, written as plain per-element loops.
// Used by the tests and the benchmark as the baseline.

#include <span>

#include "lbhic/kernels.hpp"

namespace lbhic::reference {

Tensor conv2d(const Tensor& input, const KernelView& kernel, std::span<const float> bias,
              int stride, int pad);
Tensor tconv2d(const Tensor& input, const KernelView& kernel, std::span<const float> bias,
               int stride, int pad, int output_padding = 0);
Tensor masked_conv2d(const Tensor& input, const KernelView& kernel, std::span<const float> bias);
Tensor nonlocal_block(const Tensor& input, const NonlocalWeights& weights, int kv_pool = 1);

}  // namespace lbhic::reference
