#include "lbhic/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lbhic {

namespace {

constexpr std::uint32_t kTop = 1u << 24;

void check_symbol(int symbol) {
  if (symbol < kSymbolMin || symbol > kSymbolMax) {
    throw Error("symbol " + std::to_string(symbol) + " outside the coder alphabet [-128, 127]");
  }
}

// P(Z > z) for z >= 0, from the same polynomial as erf_approx but without
// forming 1 - erf, so small tail masses keep their relative precision.
double upper_tail(double z) {
  constexpr double p = 0.3275911;
  constexpr double a1 = 0.254829592;
  constexpr double a2 = -0.284496736;
  constexpr double a3 = 1.421413741;
  constexpr double a4 = -1.453152027;
  constexpr double a5 = 1.061405429;
  const double x = z * 0.70710678118654752440;
  if (x >= 6.5) return 0.0;
  const double t = 1.0 / (1.0 + p * x);
  const double poly = ((((a5 * t + a4) * t + a3) * t + a2) * t + a1) * t;
  return 0.5 * poly * std::exp(-x * x);
}

// Standard normal mass between standardized edges lo < hi; either edge may be
// infinite. Every case is built from tails of |z|, so mirrored bins around
// the mean get bit-identical masses.
double bin_mass(double lo, double hi) {
  const double t_lo = std::isinf(lo) ? 0.0 : upper_tail(std::fabs(lo));
  const double t_hi = std::isinf(hi) ? 0.0 : upper_tail(std::fabs(hi));
  if (lo >= 0) return t_lo - t_hi;
  if (hi <= 0) return t_hi - t_lo;
  return 1.0 - t_lo - t_hi;
}

double component_mass(double mu, double sigma, int symbol) {
  const double lo = symbol == kSymbolMin ? -INFINITY : (symbol - 0.5 - mu) / sigma;
  const double hi = symbol == kSymbolMax ? INFINITY : (symbol + 0.5 - mu) / sigma;
  return bin_mass(lo, hi);
}

}  // namespace

double erf_approx(double x) {
  constexpr double p = 0.3275911;
  constexpr double a1 = 0.254829592;
  constexpr double a2 = -0.284496736;
  constexpr double a3 = 1.421413741;
  constexpr double a4 = -1.453152027;
  constexpr double a5 = 1.061405429;
  const double ax = std::fabs(x);
  // Beyond 6.5 the correction term is below 1e-19 and 1 - term rounds to 1.
  if (ax >= 6.5) return x < 0 ? -1.0 : 1.0;
  const double t = 1.0 / (1.0 + p * ax);
  const double poly = ((((a5 * t + a4) * t + a3) * t + a2) * t + a1) * t;
  const double y = 1.0 - poly * std::exp(-ax * ax);
  return x < 0 ? -y : y;
}

double normal_cdf(double x) { return 0.5 * (1.0 + erf_approx(x * 0.70710678118654752440)); }

double gmm_pmf(const GmmElement& g, int symbol) {
  check_symbol(symbol);
  double p = 0.0;
  for (int k = 0; k < kMixtures; ++k) {
    if (g.weight[k] == 0.0f) continue;
    p += static_cast<double>(g.weight[k]) * component_mass(g.mean[k], g.scale[k], symbol);
  }
  return p;
}

GmmElement gaussian_element(float mean, float scale) {
  GmmElement g;
  g.weight = {1.0f, 0.0f, 0.0f};
  g.mean = {mean, 0.0f, 0.0f};
  g.scale = {scale, 1.0f, 1.0f};
  return g;
}

CdfTable build_cdf(const GmmElement& g) {
  std::array<double, kAlphabetSize> pmf{};
  for (int k = 0; k < kMixtures; ++k) {
    if (g.weight[k] == 0.0f) continue;
    const double w = g.weight[k];
    for (int i = 0; i < kAlphabetSize; ++i) pmf[i] += w * component_mass(g.mean[k], g.scale[k], kSymbolMin + i);
  }
  double total = 0.0;
  for (double p : pmf) total += p;

  std::array<std::int64_t, kAlphabetSize> freq{};
  std::array<double, kAlphabetSize> remainder{};
  std::int64_t assigned = 0;
  for (int i = 0; i < kAlphabetSize; ++i) {
    const double share = total > 0.0 ? std::max(pmf[i], 0.0) / total * kProbTotal : 0.0;
    const double whole = std::floor(share);
    freq[i] = std::max<std::int64_t>(1, static_cast<std::int64_t>(whole));
    remainder[i] = share - whole;
    assigned += freq[i];
  }
  std::array<int, kAlphabetSize> order{};
  std::iota(order.begin(), order.end(), 0);
  if (assigned < kProbTotal) {
    // Missing counts go to the largest remainders, lowest symbol first on ties.
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainder[a] > remainder[b]; });
    for (std::int64_t k = 0; k < kProbTotal - assigned; ++k) ++freq[order[k % kAlphabetSize]];
  } else if (assigned > kProbTotal) {
    // The floor at 1 overshot: take one count at a time from bins above 1,
    // smallest remainder first.
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainder[a] < remainder[b]; });
    std::int64_t excess = assigned - kProbTotal;
    while (excess > 0) {
      for (int i : order) {
        if (excess == 0) break;
        if (freq[i] > 1) {
          --freq[i];
          --excess;
        }
      }
    }
  }

  CdfTable cdf;
  cdf.cum[0] = 0;
  for (int i = 0; i < kAlphabetSize; ++i) cdf.cum[i + 1] = cdf.cum[i] + static_cast<std::uint32_t>(freq[i]);
  return cdf;
}

void RangeEncoder::propagate_carry() {
  for (std::size_t i = out_.size(); i-- > 0;) {
    if (++out_[i] != 0) return;
  }
}

void RangeEncoder::encode(const CdfTable& cdf, int symbol) {
  check_symbol(symbol);
  const std::uint32_t r = range_ >> kProbBits;
  low_ += static_cast<std::uint64_t>(r) * cdf.low(symbol);
  range_ = r * cdf.freq(symbol);
  if (low_ >> 32) {
    propagate_carry();
    low_ &= 0xFFFFFFFFu;
  }
  while (range_ < kTop) {
    out_.push_back(static_cast<std::uint8_t>(low_ >> 24));
    low_ = (low_ << 8) & 0xFFFFFFFFu;
    range_ <<= 8;
  }
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(low_ >> shift));
  low_ = 0;
  range_ = 0xFFFFFFFFu;
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : bytes_(bytes) {
  if (bytes.size() < 4) throw DecodeError("range stream shorter than its 4-byte preamble");
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ >= bytes_.size()) throw DecodeError("range stream truncated at byte " + std::to_string(pos_));
  return bytes_[pos_++];
}

int RangeDecoder::decode(const CdfTable& cdf) {
  const std::uint32_t r = range_ >> kProbBits;
  const std::uint32_t target = code_ / r;
  if (target >= kProbTotal) throw DecodeError("range stream inconsistent with its probability model");
  // Largest i with cum[i] <= target.
  const auto it = std::upper_bound(cdf.cum.begin(), cdf.cum.end(), target);
  const int i = static_cast<int>(it - cdf.cum.begin()) - 1;
  const int symbol = i + kSymbolMin;
  code_ -= r * cdf.cum[i];
  range_ = r * (cdf.cum[i + 1] - cdf.cum[i]);
  while (range_ < kTop) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
  return symbol;
}

std::vector<std::uint8_t> rc_encode(std::span<const int> symbols, const CdfProvider& cdfs) {
  RangeEncoder enc;
  for (std::size_t i = 0; i < symbols.size(); ++i) enc.encode(cdfs(i), symbols[i]);
  return enc.finish();
}

std::vector<int> rc_decode(std::span<const std::uint8_t> bytes, const CdfProvider& cdfs, std::size_t count) {
  RangeDecoder dec(bytes);
  std::vector<int> out(count);
  for (std::size_t i = 0; i < count; ++i) out[i] = dec.decode(cdfs(i));
  return out;
}

double symbol_bits(const CdfTable& cdf, int symbol) {
  check_symbol(symbol);
  return kProbBits - std::log2(static_cast<double>(cdf.freq(symbol)));
}

double estimate_rate(std::span<const GmmElement> params, std::span<const int> symbols) {
  if (params.size() != symbols.size()) throw ShapeError("estimate_rate: params and symbols differ in length");
  double bits = 0.0;
  for (std::size_t i = 0; i < symbols.size(); ++i) bits += symbol_bits(build_cdf(params[i]), symbols[i]);
  return bits;
}

}  // namespace lbhic
