#pragma once

// Block partition, anti-diagonal (wavefront) coding schedule and the
// executor that walks it.
//
// Block (i, j) depends on (i-1, j) and (i, j-1). All blocks with i + j = L
// form set S_L and can be processed concurrently once S_{L-1} is done.

#include <omp.h>

#include <algorithm>
#include <compare>
#include <cstdint>
#include <exception>
#include <optional>
#include <utility>
#include <string>
#include <vector>

#include "lbhic/tensor.hpp"

namespace lbhic {

inline constexpr int kDefaultWorkers = 8;

/// 8-bit RGB raster, interleaved, row-major.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t& at(int y, int x, int c) { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int y, int x, int c) const {
    return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  friend bool operator==(const Image&, const Image&) = default;
};

/// (3,H,W) tensor with values v / 255.
Tensor image_to_tensor(const Image& image);
/// Clamp to [0,1], scale by 255, round half away from zero.
Image tensor_to_image(const Tensor& t);
std::uint8_t to_8bit(float v);

struct BlockIndex {
  int row = 0;
  int col = 0;
  friend auto operator<=>(const BlockIndex&, const BlockIndex&) = default;
};

std::string to_string(BlockIndex index);

struct BlockGrid {
  int height = 0;
  int width = 0;
  int block_size = 0;
  int rows = 0;
  int cols = 0;

  BlockGrid() = default;
  BlockGrid(int height, int width, int block_size);

  int padded_height() const { return rows * block_size; }
  int padded_width() const { return cols * block_size; }
  int count() const { return rows * cols; }
  int raster(BlockIndex b) const { return b.row * cols + b.col; }
  BlockIndex at(int raster_index) const { return {raster_index / cols, raster_index % cols}; }
  bool contains(BlockIndex b) const { return b.row >= 0 && b.row < rows && b.col >= 0 && b.col < cols; }
};

struct WavefrontPlan {
  int rows = 0;
  int cols = 0;
  std::vector<std::vector<BlockIndex>> sets;  // sets[L] = {(i, L - i)}, i ascending
};

WavefrontPlan wavefront_sets(int rows, int cols);

struct Partition {
  BlockGrid grid;
  std::vector<Tensor> blocks;  // raster order, each (3, B, B)
};

/// Splits into B x B blocks; right and bottom edges are replicate-padded.
Partition partition(const Image& image, int block_size);

/// Inverse of partition: stitch, crop to the grid's image size, clamp, quantize.
/// An empty tensor marks a missing block.
Image assemble(const std::vector<Tensor>& blocks, const BlockGrid& grid);
/// Same, without the 8-bit quantization.
Tensor assemble_tensor(const std::vector<Tensor>& blocks, const BlockGrid& grid);

class WavefrontError : public Error {
 public:
  WavefrontError(BlockIndex index, const std::string& what)
      : Error("block " + to_string(index) + ": " + what), index_(index) {}
  BlockIndex index() const { return index_; }

 private:
  BlockIndex index_;
};

/// Write-once per-block results; tasks read completed neighbours through it.
template <class T>
class BlockResults {
 public:
  BlockResults(int rows, int cols) : rows_(rows), cols_(cols), slots_(static_cast<std::size_t>(rows) * cols) {}

  /// nullptr when the index is outside the grid or not computed yet.
  const T* get(BlockIndex b) const {
    if (b.row < 0 || b.row >= rows_ || b.col < 0 || b.col >= cols_) return nullptr;
    const auto& slot = slots_[static_cast<std::size_t>(b.row) * cols_ + b.col];
    return slot ? &*slot : nullptr;
  }
  const T* upper(BlockIndex b) const { return get({b.row - 1, b.col}); }
  const T* left(BlockIndex b) const { return get({b.row, b.col - 1}); }

  void put(BlockIndex b, T value) { slots_[static_cast<std::size_t>(b.row) * cols_ + b.col].emplace(std::move(value)); }

  std::vector<T> release() && {
    std::vector<T> out;
    out.reserve(slots_.size());
    for (auto& s : slots_) out.push_back(std::move(*s));
    return out;
  }

 private:
  int rows_;
  int cols_;
  std::vector<std::optional<T>> slots_;
};

namespace detail {

// Runs task(items[k]) for every k, using up to `workers` OpenMP threads, and
// rethrows the first failure in item order as a WavefrontError.
template <class Item, class Fn, class IndexOf>
void run_set(const std::vector<Item>& items, int workers, Fn&& fn, IndexOf&& index_of) {
  const int n = static_cast<int>(items.size());
  std::vector<std::exception_ptr> errors(n);
  const int threads = std::max(1, std::min(workers, n));
  if (threads == 1) {
    for (int k = 0; k < n; ++k) {
      try {
        fn(items[k]);
      } catch (...) {
        errors[k] = std::current_exception();
        break;
      }
    }
  } else {
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
    for (int k = 0; k < n; ++k) {
      try {
        fn(items[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  }
  for (int k = 0; k < n; ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const WavefrontError&) {
      throw;
    } catch (const std::exception& e) {
      throw WavefrontError(index_of(items[k]), e.what());
    } catch (...) {
      throw WavefrontError(index_of(items[k]), "unknown failure");
    }
  }
}

}  // namespace detail

/// Executes `task(index, results)` for every block along the wavefront plan.
/// S_L starts only after S_{L-1} completed; blocks inside one set run on up
/// to `worker_count` threads. Results are returned in raster order and do not
/// depend on worker_count as long as the task is a pure function of its
/// index and neighbours.
template <class T, class Task>
std::vector<T> run_wavefront(const WavefrontPlan& plan, int worker_count, Task&& task) {
  if (worker_count < 1) throw ConfigError("worker count must be >= 1");
  BlockResults<T> results(plan.rows, plan.cols);
  for (const auto& set : plan.sets) {
    detail::run_set(
        set, worker_count, [&](BlockIndex b) { results.put(b, task(b, std::as_const(results))); },
        [](BlockIndex b) { return b; });
  }
  return std::move(results).release();
}

/// Independent per-block work with no neighbour dependencies, raster order.
template <class T, class Task>
std::vector<T> run_blocks(const BlockGrid& grid, int worker_count, Task&& task) {
  if (worker_count < 1) throw ConfigError("worker count must be >= 1");
  std::vector<std::optional<T>> slots(grid.count());
  std::vector<int> order(grid.count());
  for (int i = 0; i < grid.count(); ++i) order[i] = i;
  detail::run_set(
      order, worker_count, [&](int i) { slots[i].emplace(task(grid.at(i))); },
      [&](int i) { return grid.at(i); });
  std::vector<T> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

}  // namespace lbhic
