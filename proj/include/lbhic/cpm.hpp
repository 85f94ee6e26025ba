#pragma once

// Contextual prediction: a block is predicted from the reconstructions of its
// upper and left neighbours. Each neighbour goes through a shared feature
// extractor; the upper features are averaged down each column and the left
// features along each row, copied back to block size and summed. A small
// U-Net maps [fused features, upper, left] to a 3-channel prediction.

#include "lbhic/tensor.hpp"
#include "lbhic/weights.hpp"

namespace lbhic {

inline constexpr int kCpmFeatures = 64;
inline constexpr int kCpmUnetWidth = 32;

/// Reconstructed neighbours of the block being predicted; nullptr when absent.
struct PredictionContext {
  const Tensor* upper = nullptr;
  const Tensor* left = nullptr;

  bool complete() const { return upper != nullptr && left != nullptr; }
};

/// Shared 3-layer conv + leaky-ReLU extractor, (3,B,B) -> (64,B,B).
Tensor extract_features(const Tensor& block, const WeightStore& weights);

/// Strip-pool and broadcast already-extracted features, then sum.
Tensor fuse_features(const Tensor& upper_features, const Tensor& left_features);

/// Throws ConfigError when either neighbour is missing.
Tensor fuse_context(const PredictionContext& ctx, const WeightStore& weights);

/// Zero prediction for edge blocks (either neighbour missing).
Tensor cpm_predict(const PredictionContext& ctx, const WeightStore& weights, int block_size);

}  // namespace lbhic
