#include "lbhic/bpm.hpp"

#include "layers.hpp"

namespace lbhic {

using layers::conv;

namespace {

Tensor residual_dense_block(const Tensor& x, const WeightStore& w, const std::string& name) {
  Tensor stack = x;
  for (int l = 0; l < kRdbLayers; ++l) {
    const Tensor grown = conv(stack, w, name + ".layer" + std::to_string(l), 1, 1, Activation::leaky_relu);
    stack = concat_channels(stack, grown);
  }
  return add(x, conv(stack, w, name + ".fuse", 1, 0));
}

Tensor grouped_rdb(const Tensor& x, const WeightStore& w, const std::string& name) {
  std::vector<Tensor> outs;
  outs.reserve(kRdbsPerGroup);
  const Tensor* cur = &x;
  for (int r = 0; r < kRdbsPerGroup; ++r) {
    outs.push_back(residual_dense_block(*cur, w, name + ".rdb" + std::to_string(r)));
    cur = &outs.back();
  }
  std::vector<const Tensor*> parts;
  for (const Tensor& t : outs) parts.push_back(&t);
  return add(x, conv(concat_channels(parts), w, name + ".fuse", 1, 0));
}

}  // namespace

BoundaryMask boundary_mask(int height, int width, int block_size, int band) {
  if (band < 2 || band % 2 != 0) {
    throw ConfigError("boundary_mask: band must be even and >= 2, got " + std::to_string(band));
  }
  if (height < 1 || width < 1 || block_size < 1) throw ShapeError("boundary_mask: empty geometry");
  const int half = band / 2;
  BoundaryMask mask({1, height, width});
  for (int edge = block_size; edge < height; edge += block_size)
    for (int y = std::max(0, edge - half); y < std::min(height, edge + half); ++y)
      for (int x = 0; x < width; ++x) mask.at(0, y, x) = 1.0f;
  for (int edge = block_size; edge < width; edge += block_size)
    for (int y = 0; y < height; ++y)
      for (int x = std::max(0, edge - half); x < std::min(width, edge + half); ++x) mask.at(0, y, x) = 1.0f;
  return mask;
}

Tensor postprocess(const Tensor& image, const BoundaryMask& mask, const WeightStore& w) {
  if (image.channels() != 3 || mask.channels() != 1 || image.height() != mask.height() ||
      image.width() != mask.width()) {
    throw ShapeError("postprocess: image must be (3,H,W) and mask (1,H,W) of the same size");
  }
  const int H = image.height();
  const int W = image.width();

  const Tensor stem = conv(concat_channels(image, mask), w, "bpm.stem", 1, 1, Activation::leaky_relu);
  const Tensor gate = conv(concat_channels(stem, mask), w, "bpm.attention", 1, 1, Activation::sigmoid);
  const Tensor s1 = multiply(stem, gate);
  const Tensor s2 = conv(s1, w, "bpm.down2", 2, 1, Activation::leaky_relu);
  const Tensor s4 = conv(s2, w, "bpm.down4", 2, 1, Activation::leaky_relu);

  const Tensor g1 = grouped_rdb(s1, w, "bpm.scale0");
  const Tensor g2 = upsample_nearest(grouped_rdb(s2, w, "bpm.scale1"), 2, H, W);
  const Tensor g4 = upsample_nearest(grouped_rdb(s4, w, "bpm.scale2"), 4, H, W);
  const Tensor* scales[] = {&g1, &g2, &g4};
  const Tensor fused = conv(concat_channels(scales), w, "bpm.fusion", 1, 0, Activation::leaky_relu);
  const Tensor attended = nonlocal_block(fused, layers::nonlocal(w, "bpm.nonlocal"), kBpmNonlocalPool);
  return clamp(add(image, conv(attended, w, "bpm.tail", 1, 1)), 0.0f, 1.0f);
}

Image postprocess(const Image& image, int block_size, const WeightStore& w) {
  return tensor_to_image(
      postprocess(image_to_tensor(image), boundary_mask(image.height, image.width, block_size), w));
}

double boundary_loss(const Tensor& original, const Tensor& reconstructed, const BoundaryMask& mask,
                     double alpha) {
  if (original.shape() != reconstructed.shape() || mask.channels() != 1 ||
      mask.height() != original.height() || mask.width() != original.width()) {
    throw ShapeError("boundary_loss: dims differ");
  }
  double global = 0.0;
  double boundary = 0.0;
  for (int c = 0; c < original.channels(); ++c)
    for (int y = 0; y < original.height(); ++y)
      for (int x = 0; x < original.width(); ++x) {
        const double m = mask.at(0, y, x);
        const double a = original.at(c, y, x);
        const double b = reconstructed.at(c, y, x);
        global += (a - b) * (a - b);
        const double d = m * a - m * b;
        boundary += d * d;
      }
  const double n = static_cast<double>(original.size());
  return global / n + alpha * boundary / n;
}

}  // namespace lbhic
