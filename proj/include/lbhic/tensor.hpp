#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "lbhic/errors.hpp"

namespace lbhic {

struct Shape {
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t plane() const { return static_cast<std::size_t>(h) * static_cast<std::size_t>(w); }
  std::size_t size() const { return static_cast<std::size_t>(c) * plane(); }
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Single-precision CHW tensor. Row-major within a channel, channel-major overall.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> data);

  const Shape& shape() const { return shape_; }
  int channels() const { return shape_.c; }
  int height() const { return shape_.h; }
  int width() const { return shape_.w; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float& at(int c, int y, int x) { return data_[index(c, y, x)]; }
  float at(int c, int y, int x) const { return data_[index(c, y, x)]; }

  std::span<float> data() { return data_; }
  std::span<const float> data() const { return data_; }
  std::span<float> channel(int c) { return {data_.data() + c * shape_.plane(), shape_.plane()}; }
  std::span<const float> channel(int c) const {
    return {data_.data() + c * shape_.plane(), shape_.plane()};
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * shape_.h + y) * shape_.w + x;
  }

  Shape shape_;
  std::vector<float> data_;
};

/// Non-owning view of a rank-4 convolution kernel.
///
/// conv2d and masked_conv2d read (out, in, kh, kw); tconv2d reads
/// (in, out, kh, kw), the layout trainers export for transposed convolutions.
struct KernelView {
  int d0 = 0;
  int d1 = 0;
  int kh = 0;
  int kw = 0;
  std::span<const float> data;

  std::size_t size() const { return static_cast<std::size_t>(d0) * d1 * kh * kw; }
  float at(int a, int b, int y, int x) const {
    return data[((static_cast<std::size_t>(a) * d1 + b) * kh + y) * kw + x];
  }
};

Tensor concat_channels(std::span<const Tensor* const> parts);
Tensor concat_channels(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor subtract(const Tensor& a, const Tensor& b);
Tensor multiply(const Tensor& a, const Tensor& b);
Tensor clamp(const Tensor& t, float lo, float hi);
Tensor abs(const Tensor& t);
/// Swaps the spatial axes of every channel.
Tensor transpose_hw(const Tensor& t);
/// Copies out channels [first, first + count).
Tensor slice_channels(const Tensor& t, int first, int count);
/// Top-left (h, w) window of every channel.
Tensor crop(const Tensor& t, int h, int w);

bool all_finite(const Tensor& t);

}  // namespace lbhic
