#pragma once

// Boundary-aware postprocessing. A binary mask marks bands around interior
// block edges; the network sees [image, mask], gates its stem features with a
// mask-conditioned spatial attention map and restores the image through three
// scales of grouped residual dense blocks.

#include "lbhic/blocking.hpp"
#include "lbhic/tensor.hpp"
#include "lbhic/weights.hpp"

namespace lbhic {

inline constexpr int kBpmFeatures = 16;
inline constexpr int kBpmGrowth = 16;
inline constexpr int kRdbLayers = 8;
inline constexpr int kRdbsPerGroup = 4;
inline constexpr int kBpmScales = 3;
inline constexpr int kBpmNonlocalPool = 8;
inline constexpr int kBoundaryBand = 8;
inline constexpr float kBoundaryWeight = 10.0f;

/// (1, H, W) plane of 0/1 values.
using BoundaryMask = Tensor;

/// band/2 pixels on each side of every interior block edge. band must be even and >= 2.
BoundaryMask boundary_mask(int height, int width, int block_size, int band = kBoundaryBand);

/// Unit-range float image (3,H,W) in, unit-range image out.
Tensor postprocess(const Tensor& image, const BoundaryMask& mask, const WeightStore& weights);
Image postprocess(const Image& image, int block_size, const WeightStore& weights);

/// MSE(X, Y) + alpha * MSE(M * X, M * Y), both means over all elements.
double boundary_loss(const Tensor& original, const Tensor& reconstructed, const BoundaryMask& mask,
                     double alpha = kBoundaryWeight);

}  // namespace lbhic
