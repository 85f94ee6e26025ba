#include "lbhic/blocking.hpp"

#include <cmath>

namespace lbhic {

std::string to_string(BlockIndex index) {
  return "(" + std::to_string(index.row) + "," + std::to_string(index.col) + ")";
}

std::uint8_t to_8bit(float v) {
  const float scaled = std::clamp(v, 0.0f, 1.0f) * 255.0f;
  return static_cast<std::uint8_t>(std::floor(scaled + 0.5f));
}

Tensor image_to_tensor(const Image& image) {
  Tensor t({3, image.height, image.width});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < image.height; ++y)
      for (int x = 0; x < image.width; ++x) t.at(c, y, x) = image.at(y, x, c) / 255.0f;
  return t;
}

Image tensor_to_image(const Tensor& t) {
  if (t.channels() != 3) throw ShapeError("tensor_to_image: expected 3 channels");
  Image img(t.width(), t.height());
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < t.height(); ++y)
      for (int x = 0; x < t.width(); ++x) img.at(y, x, c) = to_8bit(t.at(c, y, x));
  return img;
}

BlockGrid::BlockGrid(int h, int w, int b) : height(h), width(w), block_size(b) {
  if (h < 1 || w < 1) throw ShapeError("block grid: empty image");
  if (b < 1) throw ConfigError("block grid: block size must be positive");
  rows = (h + b - 1) / b;
  cols = (w + b - 1) / b;
}

WavefrontPlan wavefront_sets(int rows, int cols) {
  if (rows < 1 || cols < 1) {
    throw ConfigError("wavefront_sets: grid must be at least 1x1, got " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
  WavefrontPlan plan{rows, cols, {}};
  plan.sets.resize(static_cast<std::size_t>(rows + cols - 1));
  for (int L = 0; L <= rows + cols - 2; ++L) {
    for (int i = std::max(0, L - cols + 1); i <= std::min(rows - 1, L); ++i) {
      plan.sets[L].push_back({i, L - i});
    }
  }
  return plan;
}

Partition partition(const Image& image, int block_size) {
  if (image.width < 1 || image.height < 1 || image.rgb.empty()) {
    throw ShapeError("partition: empty image");
  }
  if (block_size < 8) throw ConfigError("partition: block size must be >= 8");
  Partition p{BlockGrid(image.height, image.width, block_size), {}};
  const Tensor full = image_to_tensor(image);
  p.blocks.reserve(p.grid.count());
  for (int i = 0; i < p.grid.rows; ++i) {
    for (int j = 0; j < p.grid.cols; ++j) {
      Tensor block({3, block_size, block_size});
      for (int c = 0; c < 3; ++c)
        for (int y = 0; y < block_size; ++y) {
          const int sy = std::min(i * block_size + y, image.height - 1);
          for (int x = 0; x < block_size; ++x) {
            const int sx = std::min(j * block_size + x, image.width - 1);
            block.at(c, y, x) = full.at(c, sy, sx);
          }
        }
      p.blocks.push_back(std::move(block));
    }
  }
  return p;
}

Tensor assemble_tensor(const std::vector<Tensor>& blocks, const BlockGrid& grid) {
  if (static_cast<int>(blocks.size()) != grid.count()) {
    throw ShapeError("assemble: expected " + std::to_string(grid.count()) + " blocks, got " +
                     std::to_string(blocks.size()));
  }
  const int B = grid.block_size;
  Tensor out({3, grid.height, grid.width});
  for (int r = 0; r < grid.count(); ++r) {
    const BlockIndex b = grid.at(r);
    const Tensor& block = blocks[r];
    if (block.empty()) throw ShapeError("assemble: missing block " + to_string(b));
    if (block.shape() != Shape{3, B, B}) throw ShapeError("assemble: block " + to_string(b) + " has wrong dims");
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < B && b.row * B + y < grid.height; ++y)
        for (int x = 0; x < B && b.col * B + x < grid.width; ++x)
          out.at(c, b.row * B + y, b.col * B + x) = block.at(c, y, x);
  }
  return out;
}

Image assemble(const std::vector<Tensor>& blocks, const BlockGrid& grid) {
  return tensor_to_image(assemble_tensor(blocks, grid));
}

}  // namespace lbhic
