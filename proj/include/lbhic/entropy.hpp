#pragma once

// Discretized Gaussian-mixture probabilities, 16-bit frequency tables and a
// carry-propagating range coder over the symbol alphabet [-128, 127].

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lbhic/neural_codec.hpp"

namespace lbhic {

inline constexpr int kAlphabetSize = kSymbolMax - kSymbolMin + 1;  // 256
inline constexpr int kProbBits = 16;
inline constexpr std::uint32_t kProbTotal = 1u << kProbBits;

/// Cumulative frequencies: cum[0] = 0, cum[256] = 65536, strictly increasing.
struct CdfTable {
  std::array<std::uint32_t, kAlphabetSize + 1> cum{};

  static int index(int symbol) { return symbol - kSymbolMin; }
  std::uint32_t low(int symbol) const { return cum[index(symbol)]; }
  std::uint32_t freq(int symbol) const { return cum[index(symbol) + 1] - cum[index(symbol)]; }
  friend bool operator==(const CdfTable&, const CdfTable&) = default;
};

/// Abramowitz-Stegun 7.1.26 erf, |error| <= 1.5e-7, odd-extended to x < 0.
double erf_approx(double x);
/// Standard normal CDF via erf_approx.
double normal_cdf(double x);

/// Probability mass of `symbol` under the mixture, integrated over
/// [s - 1/2, s + 1/2]; the end symbols absorb the tails.
double gmm_pmf(const GmmElement& params, int symbol);

/// Scale the pmf to 65536 and floor every bin at 1. Missing counts go to the
/// largest fractional parts (lowest symbol first on ties); an overshoot caused
/// by the floor is taken back from bins above 1, smallest fraction first.
CdfTable build_cdf(const GmmElement& params);

/// Single Gaussian as a GmmElement (other components carry zero weight).
GmmElement gaussian_element(float mean, float scale);

class RangeEncoder {
 public:
  void encode(const CdfTable& cdf, int symbol);
  /// Flushes the 4-byte state and returns the stream; the encoder is spent afterwards.
  std::vector<std::uint8_t> finish();

 private:
  void propagate_carry();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  /// Throws DecodeError when the stream is shorter than the 4-byte preamble.
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);
  /// Throws DecodeError on truncated or inconsistent data.
  int decode(const CdfTable& cdf);
  std::size_t consumed() const { return pos_; }

 private:
  std::uint8_t next_byte();

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
  std::uint32_t code_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
};

using CdfProvider = std::function<CdfTable(std::size_t index)>;

std::vector<std::uint8_t> rc_encode(std::span<const int> symbols, const CdfProvider& cdfs);
std::vector<int> rc_decode(std::span<const std::uint8_t> bytes, const CdfProvider& cdfs, std::size_t count);

/// -log2 of the coded probability of `symbol` under `cdf`.
double symbol_bits(const CdfTable& cdf, int symbol);
/// Cross-entropy of `symbols` under their tables, in bits.
double estimate_rate(std::span<const GmmElement> params, std::span<const int> symbols);

}  // namespace lbhic
