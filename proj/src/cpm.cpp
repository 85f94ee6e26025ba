#include "lbhic/cpm.hpp"

#include "layers.hpp"

namespace lbhic {

using layers::conv;
using layers::tconv;

Tensor extract_features(const Tensor& block, const WeightStore& w) {
  Tensor f = conv(block, w, "cpm.extract.0", 1, 1, Activation::leaky_relu);
  f = conv(f, w, "cpm.extract.1", 1, 1, Activation::leaky_relu);
  return conv(f, w, "cpm.extract.2", 1, 1, Activation::leaky_relu);
}

Tensor fuse_features(const Tensor& upper_features, const Tensor& left_features) {
  if (upper_features.shape() != left_features.shape()) {
    throw ShapeError("fuse_features: upper and left feature maps differ in shape");
  }
  const int h = upper_features.height();
  const int w = upper_features.width();
  const Tensor columns = broadcast_expand(strip_pool(upper_features, PoolDirection::vertical), h, w);
  const Tensor rows = broadcast_expand(strip_pool(left_features, PoolDirection::horizontal), h, w);
  return add(columns, rows);
}

Tensor fuse_context(const PredictionContext& ctx, const WeightStore& w) {
  if (!ctx.complete()) throw ConfigError("fuse_context: both upper and left neighbours are required");
  return fuse_features(extract_features(*ctx.upper, w), extract_features(*ctx.left, w));
}

Tensor cpm_predict(const PredictionContext& ctx, const WeightStore& w, int block_size) {
  if (!ctx.complete()) return Tensor({3, block_size, block_size});
  const Shape expected{3, block_size, block_size};
  if (ctx.upper->shape() != expected || ctx.left->shape() != expected) {
    throw ShapeError("cpm_predict: neighbour blocks must be 3x" + std::to_string(block_size) + "x" +
                     std::to_string(block_size));
  }
  const Tensor fused = fuse_context(ctx, w);
  const Tensor* inputs[] = {&fused, ctx.upper, ctx.left};
  const Tensor x = concat_channels(inputs);

  const Tensor e1 = conv(x, w, "cpm.predict.enc", 1, 1, Activation::leaky_relu);
  const Tensor d1 = conv(e1, w, "cpm.predict.down1", 2, 1, Activation::leaky_relu);
  const Tensor d2 = conv(d1, w, "cpm.predict.down2", 2, 1, Activation::leaky_relu);
  const Tensor mid = conv(d2, w, "cpm.predict.bottleneck", 1, 1, Activation::leaky_relu);
  const Tensor u1 = tconv(mid, w, "cpm.predict.up1", 2, 1, 0, Activation::leaky_relu);
  const Tensor m1 = conv(concat_channels(u1, d1), w, "cpm.predict.merge1", 1, 1, Activation::leaky_relu);
  const Tensor u2 = tconv(m1, w, "cpm.predict.up2", 2, 1, 0, Activation::leaky_relu);
  const Tensor m2 = conv(concat_channels(u2, e1), w, "cpm.predict.merge2", 1, 1, Activation::leaky_relu);
  return conv(m2, w, "cpm.predict.head", 1, 1);
}

}  // namespace lbhic
