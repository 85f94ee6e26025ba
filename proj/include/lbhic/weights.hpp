#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lbhic/tensor.hpp"

namespace lbhic {

/// PCG32 (XSH-RR, 64-bit state) as published by O'Neill.
class Pcg32 {
 public:
  static constexpr std::uint64_t kMultiplier = 6364136223846793005ULL;

  /// pcg32_srandom: increment = (stream << 1) | 1.
  Pcg32(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next();
  /// Uniform in [0, 1) with 24 bits of resolution.
  float next_unit();

  std::uint64_t state() const { return state_; }
  std::uint64_t increment() const { return inc_; }

 private:
  std::uint64_t state_ = 0;
  std::uint64_t inc_ = 1;
};

/// One raw generator step; `inc` must be odd. Returns (output, next state).
std::pair<std::uint32_t, std::uint64_t> pcg32_next(std::uint64_t state, std::uint64_t inc);

struct ModelConfig {
  int n_channels = 128;
  int m_channels = 192;
  int mixtures = 3;
  int block_size = 128;
  int config_id = 0;

  /// config 0: N=128, M=192 (low rate); config 1: N=256, M=448 (high rate).
  static ModelConfig from_id(int id, int block_size = 128);
  static ModelConfig low(int block_size = 128) { return from_id(0, block_size); }
  static ModelConfig high(int block_size = 128) { return from_id(1, block_size); }

  /// Throws ConfigError unless (N, M) is one of the two published pairs, K = 3,
  /// and the block size is a positive multiple of 64.
  void validate() const;
};

class WeightStore {
 public:
  struct Entry {
    std::string name;
    std::vector<std::uint32_t> dims;
    std::vector<float> data;
    friend bool operator==(const Entry&, const Entry&) = default;
  };

  void add(std::string name, std::vector<std::uint32_t> dims, std::vector<float> data);

  bool contains(std::string_view name) const;
  const Entry& get(std::string_view name) const;
  std::span<float> mutable_data(std::string_view name);

  KernelView kernel(std::string_view name) const;
  std::span<const float> vector(std::string_view name) const;

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  friend bool operator==(const WeightStore& a, const WeightStore& b) {
    return a.entries_ == b.entries_;
  }

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

struct ParamSpec {
  std::string name;
  std::vector<std::uint32_t> dims;
  bool is_bias = false;
};

/// Full parameter table of the codec in canonical order. toy_init draws in
/// exactly this order; the table is also what a trainer must export.
std::vector<ParamSpec> architecture(const ModelConfig& config);

/// Checks that every parameter of `architecture(config)` exists with the right dims.
void validate_weights(const WeightStore& store, const ModelConfig& config);

/// Deterministic toy weights: every non-bias value uniform in [-0.05, 0.05]
/// from Pcg32(seed, kToyStream), biases zero.
inline constexpr std::uint64_t kToyStream = 0x4c42484943ULL;
WeightStore toy_init(const ModelConfig& config, std::uint64_t seed);

std::vector<std::uint8_t> serialize_weights(const WeightStore& store);
WeightStore parse_weights(std::span<const std::uint8_t> bytes);
void save_weights(const WeightStore& store, const std::filesystem::path& path);
WeightStore load_weights(const std::filesystem::path& path);

std::uint32_t crc32(std::span<const std::uint8_t> bytes);

}  // namespace lbhic
