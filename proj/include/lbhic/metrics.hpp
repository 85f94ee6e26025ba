#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lbhic/blocking.hpp"
#include "lbhic/tensor.hpp"

namespace lbhic {

inline constexpr double kPsnrCap = 99.0;
inline constexpr int kMsSsimScales = 5;
inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kMsSsimWeights[kMsSsimScales] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};

double mse(const Image& a, const Image& b);
/// 10 log10(255^2 / MSE) over all samples; identical images report kPsnrCap.
double psnr(const Image& a, const Image& b);

/// Multi-scale SSIM averaged over the RGB channels. Each scale needs at least
/// an 11x11 window, so min(H, W) >= 11 * 2^(scales-1). With fewer than five
/// scales the first `scales` weights are renormalized.
double ms_ssim(const Image& a, const Image& b, int scales = kMsSsimScales);

/// Sum of absolute 8x8 Hadamard coefficients over all tiles and channels;
/// partial edge tiles are zero-padded.
double satd(const Tensor& signal, int block = 8);

/// 8 * bytes / (H * W).
double bpp(std::size_t bytes, int height, int width);

struct RdPoint {
  double bpp = 0;
  double quality = 0;
};

/// Bjontegaard delta rate of `test` against `anchor` in percent; negative means savings.
double bd_rate(std::span<const RdPoint> anchor, std::span<const RdPoint> test);

std::vector<RdPoint> read_rd_csv(std::istream& in, const std::string& quality_column);

double pixel_distance(int y0, int x0, int y1, int x1);

struct CorrelationOptions {
  int target_samples = 16;
  int reference_stride = 8;
  std::uint64_t seed = 1;
};

enum class ReferenceBlock { upper, left };

struct CorrelationRow {
  int target_y = 0;
  int target_x = 0;
  ReferenceBlock reference = ReferenceBlock::upper;
  int ref_y = 0;  // inside the reference block
  int ref_x = 0;
  double distance = 0;
  double normalized_distance = 0;
  double correlation = 0;
  int samples = 0;
};

struct CorrelationTable {
  std::vector<CorrelationRow> rows;
  int skipped = 0;  // pairs with zero intensity variance
};

/// Pearson correlation between target pixels of a block and pixels of its
/// upper/left neighbours, pooled over every block with both neighbours in
/// every image. Distances are Euclidean in image coordinates, divided by
/// their mean over all reference positions of the same target.
CorrelationTable correlation_study(std::span<const Image> images, int block_size,
                                   const CorrelationOptions& options = {});
void write_correlation_csv(std::ostream& out, const CorrelationTable& table);

}  // namespace lbhic
