#include "lbhic/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <string>

namespace lbhic {

namespace {

std::string dims(const Shape& s) {
  return "(" + std::to_string(s.c) + "," + std::to_string(s.h) + "," + std::to_string(s.w) + ")";
}

void require_same(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + dims(a.shape()) + " vs " +
                     dims(b.shape()));
  }
}

template <class F>
Tensor zip(const Tensor& a, const Tensor& b, const char* op, F f) {
  require_same(a, b, op);
  Tensor out(a.shape());
  auto pa = a.data();
  auto pb = b.data();
  auto po = out.data();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = f(pa[i], pb[i]);
  return out;
}

}  // namespace

Tensor::Tensor(Shape shape, float fill) : shape_(shape) {
  if (shape.c < 0 || shape.h < 0 || shape.w < 0) throw ShapeError("negative tensor dimension");
  data_.assign(shape.size(), fill);
}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
  if (shape.c < 0 || shape.h < 0 || shape.w < 0) throw ShapeError("negative tensor dimension");
  if (data_.size() != shape.size()) {
    throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                     " does not match dims " + dims(shape));
  }
}

Tensor concat_channels(std::span<const Tensor* const> parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  Shape s = parts.front()->shape();
  s.c = 0;
  for (const Tensor* t : parts) {
    if (t->height() != s.h || t->width() != s.w) {
      throw ShapeError("concat_channels: spatial mismatch " + dims(t->shape()));
    }
    s.c += t->channels();
  }
  Tensor out(s);
  float* dst = out.data().data();
  for (const Tensor* t : parts) {
    std::memcpy(dst, t->data().data(), t->size() * sizeof(float));
    dst += t->size();
  }
  return out;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const Tensor* parts[] = {&a, &b};
  return concat_channels(parts);
}

Tensor add(const Tensor& a, const Tensor& b) {
  return zip(a, b, "add", [](float x, float y) { return x + y; });
}

Tensor subtract(const Tensor& a, const Tensor& b) {
  return zip(a, b, "subtract", [](float x, float y) { return x - y; });
}

Tensor multiply(const Tensor& a, const Tensor& b) {
  return zip(a, b, "multiply", [](float x, float y) { return x * y; });
}

Tensor clamp(const Tensor& t, float lo, float hi) {
  Tensor out = t;
  for (float& v : out.data()) v = std::clamp(v, lo, hi);
  return out;
}

Tensor abs(const Tensor& t) {
  Tensor out = t;
  for (float& v : out.data()) v = std::fabs(v);
  return out;
}

Tensor transpose_hw(const Tensor& t) {
  Tensor out({t.channels(), t.width(), t.height()});
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < t.height(); ++y)
      for (int x = 0; x < t.width(); ++x) out.at(c, x, y) = t.at(c, y, x);
  return out;
}

Tensor slice_channels(const Tensor& t, int first, int count) {
  if (first < 0 || count < 0 || first + count > t.channels()) {
    throw ShapeError("slice_channels: range out of bounds for " + dims(t.shape()));
  }
  Tensor out({count, t.height(), t.width()});
  std::memcpy(out.data().data(), t.data().data() + first * t.shape().plane(),
              out.size() * sizeof(float));
  return out;
}

Tensor crop(const Tensor& t, int h, int w) {
  if (h > t.height() || w > t.width() || h < 0 || w < 0) {
    throw ShapeError("crop: window larger than " + dims(t.shape()));
  }
  Tensor out({t.channels(), h, w});
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < h; ++y)
      std::memcpy(&out.at(c, y, 0), t.data().data() + (static_cast<std::size_t>(c) * t.height() + y) * t.width(), static_cast<std::size_t>(w) * sizeof(float));
  return out;
}

bool all_finite(const Tensor& t) {
  return std::all_of(t.data().begin(), t.data().end(), [](float v) { return std::isfinite(v); });
}

}  // namespace lbhic
