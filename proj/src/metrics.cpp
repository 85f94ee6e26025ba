#include "lbhic/metrics.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "lbhic/weights.hpp"

namespace lbhic {

namespace {

void require_same_dims(const Image& a, const Image& b, const char* op) {
  if (a.width != b.width || a.height != b.height) {
    throw ShapeError(std::string(op) + ": images differ in size (" + std::to_string(a.width) + "x" +
                     std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" + std::to_string(b.height) +
                     ")");
  }
}

// Single channel plane in double precision.
struct Plane {
  int h = 0;
  int w = 0;
  std::vector<double> v;
  double& at(int y, int x) { return v[static_cast<std::size_t>(y) * w + x]; }
  double at(int y, int x) const { return v[static_cast<std::size_t>(y) * w + x]; }
};

Plane channel_plane(const Image& img, int c) {
  Plane p{img.height, img.width, std::vector<double>(static_cast<std::size_t>(img.width) * img.height)};
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) p.at(y, x) = img.at(y, x, c);
  return p;
}

std::vector<double> gaussian_window() {
  std::vector<double> g(kSsimWindow);
  const int half = kSsimWindow / 2;
  double sum = 0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - half;
    g[i] = std::exp(-d * d / (2 * kSsimSigma * kSsimSigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Separable "valid" Gaussian filter.
Plane filter_valid(const Plane& p, const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  Plane rows{p.h, p.w - k + 1, std::vector<double>(static_cast<std::size_t>(p.h) * (p.w - k + 1))};
  for (int y = 0; y < rows.h; ++y)
    for (int x = 0; x < rows.w; ++x) {
      double s = 0;
      for (int i = 0; i < k; ++i) s += g[i] * p.at(y, x + i);
      rows.at(y, x) = s;
    }
  Plane out{p.h - k + 1, rows.w, std::vector<double>(static_cast<std::size_t>(p.h - k + 1) * rows.w)};
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x) {
      double s = 0;
      for (int i = 0; i < k; ++i) s += g[i] * rows.at(y + i, x);
      out.at(y, x) = s;
    }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out = a;
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = a.v[i] * b.v[i];
  return out;
}

// 2x2 average pooling; an odd trailing row/column is dropped.
Plane downsample(const Plane& p) {
  Plane out{p.h / 2, p.w / 2, std::vector<double>(static_cast<std::size_t>(p.h / 2) * (p.w / 2))};
  for (int y = 0; y < out.h; ++y)
    for (int x = 0; x < out.w; ++x)
      out.at(y, x) = 0.25 * (p.at(2 * y, 2 * x) + p.at(2 * y, 2 * x + 1) + p.at(2 * y + 1, 2 * x) +
                             p.at(2 * y + 1, 2 * x + 1));
  return out;
}

// Mean SSIM and mean contrast-structure term at one scale.
std::pair<double, double> ssim_terms(const Plane& a, const Plane& b, const std::vector<double>& g) {
  constexpr double c1 = (0.01 * 255) * (0.01 * 255);
  constexpr double c2 = (0.03 * 255) * (0.03 * 255);
  const Plane mu_a = filter_valid(a, g);
  const Plane mu_b = filter_valid(b, g);
  const Plane aa = filter_valid(product(a, a), g);
  const Plane bb = filter_valid(product(b, b), g);
  const Plane ab = filter_valid(product(a, b), g);
  double ssim_sum = 0;
  double cs_sum = 0;
  for (std::size_t i = 0; i < mu_a.v.size(); ++i) {
    const double ma = mu_a.v[i];
    const double mb = mu_b.v[i];
    const double var_a = aa.v[i] - ma * ma;
    const double var_b = bb.v[i] - mb * mb;
    const double cov = ab.v[i] - ma * mb;
    const double cs = (2 * cov + c2) / (var_a + var_b + c2);
    cs_sum += cs;
    ssim_sum += (2 * ma * mb + c1) / (ma * ma + mb * mb + c1) * cs;
  }
  const double n = static_cast<double>(mu_a.v.size());
  return {ssim_sum / n, cs_sum / n};
}

// In-place unnormalized 8-point Walsh-Hadamard (Sylvester order).
void hadamard8(double* v, int stride) {
  for (int len = 1; len < 8; len <<= 1)
    for (int i = 0; i < 8; i += 2 * len)
      for (int j = i; j < i + len; ++j) {
        const double a = v[j * stride];
        const double b = v[(j + len) * stride];
        v[j * stride] = a + b;
        v[(j + len) * stride] = a - b;
      }
}

struct Cubic {
  double centre = 0;
  double scale = 1;
  Eigen::Vector4d coef;

  double integral(double lo, double hi) const {
    const double a = (lo - centre) / scale;
    const double b = (hi - centre) / scale;
    double s = 0;
    for (int k = 0; k < 4; ++k) s += coef[k] * (std::pow(b, k + 1) - std::pow(a, k + 1)) / (k + 1);
    return s * scale;
  }
};

// Least-squares cubic of ln(rate) against quality.
Cubic fit_log_rate(std::span<const RdPoint> pts) {
  Cubic c;
  double lo = INFINITY, hi = -INFINITY, sum = 0;
  for (const auto& p : pts) {
    if (!(p.bpp > 0)) throw Error("bd_rate: every bpp must be positive");
    lo = std::min(lo, p.quality);
    hi = std::max(hi, p.quality);
    sum += p.quality;
  }
  c.centre = sum / static_cast<double>(pts.size());
  c.scale = hi > lo ? (hi - lo) / 2 : 1.0;
  Eigen::MatrixXd A(pts.size(), 4);
  Eigen::VectorXd rhs(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double q = (pts[i].quality - c.centre) / c.scale;
    A(i, 0) = 1;
    A(i, 1) = q;
    A(i, 2) = q * q;
    A(i, 3) = q * q * q;
    rhs[i] = std::log(pts[i].bpp);
  }
  c.coef = A.colPivHouseholderQr().solve(rhs);
  return c;
}

}  // namespace

double mse(const Image& a, const Image& b) {
  require_same_dims(a, b, "mse");
  double sum = 0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) {
    const double d = static_cast<double>(a.rgb[i]) - b.rgb[i];
    sum += d * d;
  }
  return a.rgb.empty() ? 0.0 : sum / static_cast<double>(a.rgb.size());
}

double psnr(const Image& a, const Image& b) {
  const double e = mse(a, b);
  if (e == 0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(255.0 * 255.0 / e));
}

double ms_ssim(const Image& a, const Image& b, int scales) {
  require_same_dims(a, b, "ms_ssim");
  if (scales < 1 || scales > kMsSsimScales) throw ConfigError("ms_ssim: scales must be in [1, 5]");
  const int need = kSsimWindow << (scales - 1);
  if (std::min(a.width, a.height) < need) {
    int fit = 0;
    while (fit < kMsSsimScales && std::min(a.width, a.height) >= (kSsimWindow << fit)) ++fit;
    throw ShapeError("ms_ssim: " + std::to_string(scales) + " scales need min(H, W) >= " + std::to_string(need) +
                     "; this image supports " + std::to_string(fit) + " scale(s)");
  }
  double weight_sum = 0;
  for (int s = 0; s < scales; ++s) weight_sum += kMsSsimWeights[s];
  const auto g = gaussian_window();

  double total = 0;
  for (int c = 0; c < 3; ++c) {
    Plane pa = channel_plane(a, c);
    Plane pb = channel_plane(b, c);
    double score = 1.0;
    for (int s = 0; s < scales; ++s) {
      const auto [ssim, cs] = ssim_terms(pa, pb, g);
      const double w = kMsSsimWeights[s] / weight_sum;
      if (s + 1 == scales) {
        score *= std::pow(std::max(ssim, 0.0), w);
      } else {
        score *= std::pow(std::max(cs, 0.0), w);
        pa = downsample(pa);
        pb = downsample(pb);
      }
    }
    total += score;
  }
  return total / 3.0;
}

double satd(const Tensor& signal, int block) {
  if (block != 8) throw ConfigError("satd: only 8x8 Hadamard tiles are supported");
  double sum = 0;
  double tile[64];
  for (int c = 0; c < signal.channels(); ++c)
    for (int ty = 0; ty < signal.height(); ty += 8)
      for (int tx = 0; tx < signal.width(); tx += 8) {
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x) {
            const int sy = ty + y;
            const int sx = tx + x;
            tile[y * 8 + x] = (sy < signal.height() && sx < signal.width()) ? signal.at(c, sy, sx) : 0.0;
          }
        for (int y = 0; y < 8; ++y) hadamard8(tile + y * 8, 1);
        for (int x = 0; x < 8; ++x) hadamard8(tile + x, 8);
        for (double v : tile) sum += std::fabs(v);
      }
  return sum;
}

double bpp(std::size_t bytes, int height, int width) {
  if (height < 1 || width < 1) throw ShapeError("bpp: empty image");
  return 8.0 * static_cast<double>(bytes) / (static_cast<double>(height) * width);
}

double bd_rate(std::span<const RdPoint> anchor, std::span<const RdPoint> test) {
  if (anchor.size() < 4 || test.size() < 4) throw Error("bd_rate: need at least 4 points per curve");
  auto range = [](std::span<const RdPoint> pts) {
    auto [lo, hi] = std::minmax_element(pts.begin(), pts.end(),
                                        [](const RdPoint& a, const RdPoint& b) { return a.quality < b.quality; });
    return std::pair{lo->quality, hi->quality};
  };
  const auto [alo, ahi] = range(anchor);
  const auto [tlo, thi] = range(test);
  const double lo = std::max(alo, tlo);
  const double hi = std::min(ahi, thi);
  if (!(hi > lo)) throw Error("bd_rate: the curves' quality ranges do not overlap");
  const Cubic fa = fit_log_rate(anchor);
  const Cubic ft = fit_log_rate(test);
  const double avg = (ft.integral(lo, hi) - fa.integral(lo, hi)) / (hi - lo);
  return (std::exp(avg) - 1.0) * 100.0;
}

std::vector<RdPoint> read_rd_csv(std::istream& in, const std::string& quality_column) {
  std::string line;
  if (!std::getline(in, line)) throw Error("rd csv: empty input");
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell.erase(0, cell.find_first_not_of(" \t\r"));
      cell.erase(cell.find_last_not_of(" \t\r") + 1);
      cells.push_back(cell);
    }
    return cells;
  };
  const auto header = split(line);
  const auto find = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw Error("rd csv: missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t rate_col = find("bpp");
  const std::size_t quality_col = find(quality_column);
  std::vector<RdPoint> points;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    if (cells.size() <= std::max(rate_col, quality_col)) throw Error("rd csv: short row '" + line + "'");
    points.push_back({std::stod(cells[rate_col]), std::stod(cells[quality_col])});
  }
  return points;
}

double pixel_distance(int y0, int x0, int y1, int x1) {
  const double dy = y1 - y0;
  const double dx = x1 - x0;
  return std::sqrt(dy * dy + dx * dx);
}

CorrelationTable correlation_study(std::span<const Image> images, int B, const CorrelationOptions& opt) {
  if (images.size() < 2) throw Error("correlation_study: need at least 2 images");
  if (B < 2 || opt.reference_stride < 1 || opt.target_samples < 1) throw ConfigError("correlation_study: bad options");

  // Block origins (image, y, x) with complete upper and left neighbours.
  struct Origin {
    std::size_t image;
    int y;
    int x;
  };
  std::vector<Origin> origins;
  std::vector<Plane> luma;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Image& img = images[i];
    Plane p{img.height, img.width, std::vector<double>(static_cast<std::size_t>(img.width) * img.height)};
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        p.at(y, x) = (img.at(y, x, 0) + img.at(y, x, 1) + img.at(y, x, 2)) / 3.0;
    luma.push_back(std::move(p));
    for (int r = 1; (r + 1) * B <= img.height; ++r)
      for (int c = 1; (c + 1) * B <= img.width; ++c) origins.push_back({i, r * B, c * B});
  }
  if (origins.size() < 2) throw Error("correlation_study: fewer than 2 blocks with both neighbours");

  Pcg32 rng(opt.seed, kToyStream);
  std::vector<std::pair<int, int>> targets;
  for (int t = 0; t < opt.target_samples; ++t) {
    targets.emplace_back(static_cast<int>(rng.next() % static_cast<std::uint32_t>(B)),
                         static_cast<int>(rng.next() % static_cast<std::uint32_t>(B)));
  }

  CorrelationTable table;
  const std::size_t n = origins.size();
  std::vector<double> tv(n), rv(n);
  for (const auto& [ty, tx] : targets) {
    const std::size_t first = table.rows.size();
    for (ReferenceBlock ref : {ReferenceBlock::upper, ReferenceBlock::left}) {
      const int oy = ref == ReferenceBlock::upper ? -B : 0;
      const int ox = ref == ReferenceBlock::left ? -B : 0;
      for (int ry = 0; ry < B; ry += opt.reference_stride)
        for (int rx = 0; rx < B; rx += opt.reference_stride) {
          for (std::size_t k = 0; k < n; ++k) {
            const Plane& p = luma[origins[k].image];
            tv[k] = p.at(origins[k].y + ty, origins[k].x + tx);
            rv[k] = p.at(origins[k].y + oy + ry, origins[k].x + ox + rx);
          }
          const double mt = std::accumulate(tv.begin(), tv.end(), 0.0) / n;
          const double mr = std::accumulate(rv.begin(), rv.end(), 0.0) / n;
          double stt = 0, srr = 0, str = 0;
          for (std::size_t k = 0; k < n; ++k) {
            stt += (tv[k] - mt) * (tv[k] - mt);
            srr += (rv[k] - mr) * (rv[k] - mr);
            str += (tv[k] - mt) * (rv[k] - mr);
          }
          if (stt == 0 || srr == 0) {
            ++table.skipped;
            continue;
          }
          CorrelationRow row;
          row.target_y = ty;
          row.target_x = tx;
          row.reference = ref;
          row.ref_y = ry;
          row.ref_x = rx;
          row.distance = pixel_distance(ty, tx, oy + ry, ox + rx);
          row.correlation = str / std::sqrt(stt * srr);
          row.samples = static_cast<int>(n);
          table.rows.push_back(row);
        }
    }
    double mean = 0;
    for (std::size_t i = first; i < table.rows.size(); ++i) mean += table.rows[i].distance;
    if (table.rows.size() > first) mean /= static_cast<double>(table.rows.size() - first);
    for (std::size_t i = first; i < table.rows.size(); ++i)
      table.rows[i].normalized_distance = mean > 0 ? table.rows[i].distance / mean : 0.0;
  }
  return table;
}

void write_correlation_csv(std::ostream& out, const CorrelationTable& table) {
  out << "target_y,target_x,reference,ref_y,ref_x,distance,normalized_distance,correlation,samples\n";
  for (const auto& r : table.rows) {
    out << r.target_y << ',' << r.target_x << ',' << (r.reference == ReferenceBlock::upper ? "upper" : "left")
        << ',' << r.ref_y << ',' << r.ref_x << ',' << r.distance << ',' << r.normalized_distance << ','
        << r.correlation << ',' << r.samples << '\n';
  }
}

}  // namespace lbhic
