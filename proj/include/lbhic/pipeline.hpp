#pragma once

// Block-based encode/decode.
//
// Encode walks the wavefront: predict from reconstructed neighbours, code the
// residual, reconstruct in closed loop. Decode first recovers every block's
// residual in parallel (the substreams do not depend on each other), then
// walks the wavefront adding predictions, then optionally postprocesses.

#include <vector>

#include "lbhic/blocking.hpp"
#include "lbhic/container.hpp"
#include "lbhic/cpm.hpp"
#include "lbhic/neural_codec.hpp"
#include "lbhic/weights.hpp"

namespace lbhic {

/// Seconds spent per stage, summed over blocks.
struct StageTimings {
  double cpm = 0;
  double transform = 0;
  double encode_entropy = 0;
  double inverse_transform = 0;
  double decode_entropy = 0;
  double bpm = 0;

  double total() const { return cpm + transform + encode_entropy + inverse_transform + decode_entropy + bpm; }
  StageTimings& operator+=(const StageTimings& o);
};

struct EncodedBlock {
  BlockStreams streams;
  Tensor reconstruction;  // closed-loop, clamped to [0,1]
  LatentCode latent;
  HyperCode hyper;
  StageTimings timings;
};

struct DecodedResidual {
  LatentCode latent;
  HyperCode hyper;
  Tensor residual;
  StageTimings timings;
};

EncodedBlock encode_block(const Tensor& block, const PredictionContext& ctx, const WeightStore& weights,
                          const ModelConfig& config);

/// Entropy decoding plus synthesis; independent of neighbouring blocks.
DecodedResidual decode_residual(const BlockStreams& streams, const WeightStore& weights,
                                const ModelConfig& config);

/// Full single-block decode: decode_residual + prediction.
Tensor decode_block(const BlockStreams& streams, const PredictionContext& ctx, const WeightStore& weights,
                    const ModelConfig& config);

struct EncodeOptions {
  int workers = kDefaultWorkers;
  bool postprocess_flag = true;  // recorded in the container for the decoder
};

struct EncodeResult {
  BitstreamContainer container;
  std::vector<Tensor> reconstruction;  // closed-loop blocks, raster order
  std::vector<LatentCode> latents;
  std::vector<HyperCode> hypers;
  StageTimings timings;
};

struct DecodeResult {
  Image image;
  std::vector<Tensor> blocks;  // pre-postprocessing reconstructions, raster order
  std::vector<LatentCode> latents;
  std::vector<HyperCode> hypers;
  StageTimings timings;
};

EncodeResult encode_image(const Image& image, const WeightStore& weights, const ModelConfig& config,
                          const EncodeOptions& options = {});

DecodeResult decode_image(const BitstreamContainer& container, const WeightStore& weights,
                          int workers = kDefaultWorkers, bool apply_bpm = true);

/// Configuration implied by a container header.
ModelConfig config_for(const ContainerMeta& meta);

}  // namespace lbhic
