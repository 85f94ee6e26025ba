#pragma once

// Brute-force double-precision references. They follow the textbook
// definitions directly (scatter for transposed conv, explicit masks, dense
// matrices, numeric integration) and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "lbhic/blocking.hpp"
#include "lbhic/tensor.hpp"

namespace oracle {

struct DTensor {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;
  DTensor() = default;
  DTensor(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, 0.0) {}
  double& at(int ci, int y, int x) { return v[(static_cast<std::size_t>(ci) * h + y) * w + x]; }
  double at(int ci, int y, int x) const { return v[(static_cast<std::size_t>(ci) * h + y) * w + x]; }
};

inline DTensor from(const lbhic::Tensor& t) {
  DTensor d(t.channels(), t.height(), t.width());
  for (int c = 0; c < t.channels(); ++c)
    for (int y = 0; y < t.height(); ++y)
      for (int x = 0; x < t.width(); ++x) d.at(c, y, x) = t.at(c, y, x);
  return d;
}

inline double max_abs_diff(const lbhic::Tensor& t, const DTensor& d) {
  if (t.channels() != d.c || t.height() != d.h || t.width() != d.w) return INFINITY;
  double m = 0;
  for (int c = 0; c < d.c; ++c)
    for (int y = 0; y < d.h; ++y)
      for (int x = 0; x < d.w; ++x) m = std::max(m, std::fabs(t.at(c, y, x) - d.at(c, y, x)));
  return m;
}

// kernel[(o, i, ky, kx)] with dims (cout, cin, k, k)
inline DTensor conv(const DTensor& in, const std::vector<float>& kernel, const std::vector<float>& bias, int cout,
                    int k, int stride, int pad,
                    const std::function<bool(int, int)>& keep_tap = [](int, int) { return true; }) {
  const int oh = (in.h + 2 * pad - k) / stride + 1;
  const int ow = (in.w + 2 * pad - k) / stride + 1;
  DTensor out(cout, oh, ow);
  for (int o = 0; o < cout; ++o)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) {
        double s = bias[o];
        for (int i = 0; i < in.c; ++i)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              if (!keep_tap(ky, kx)) continue;
              const int iy = y * stride - pad + ky;
              const int ix = x * stride - pad + kx;
              if (iy < 0 || iy >= in.h || ix < 0 || ix >= in.w) continue;
              s += static_cast<double>(kernel[((static_cast<std::size_t>(o) * in.c + i) * k + ky) * k + kx]) *
                   in.at(i, iy, ix);
            }
        out.at(o, y, x) = s;
      }
  return out;
}

// Scatter form; kernel dims (cin, cout, k, k).
inline DTensor tconv(const DTensor& in, const std::vector<float>& kernel, const std::vector<float>& bias, int cout,
                     int k, int stride, int pad, int output_padding) {
  const int oh = (in.h - 1) * stride - 2 * pad + k + output_padding;
  const int ow = (in.w - 1) * stride - 2 * pad + k + output_padding;
  DTensor out(cout, oh, ow);
  for (int o = 0; o < cout; ++o)
    for (int y = 0; y < oh; ++y)
      for (int x = 0; x < ow; ++x) out.at(o, y, x) = bias[o];
  for (int i = 0; i < in.c; ++i)
    for (int iy = 0; iy < in.h; ++iy)
      for (int ix = 0; ix < in.w; ++ix)
        for (int o = 0; o < cout; ++o)
          for (int ky = 0; ky < k; ++ky)
            for (int kx = 0; kx < k; ++kx) {
              const int y = iy * stride - pad + ky;
              const int x = ix * stride - pad + kx;
              if (y < 0 || y >= oh || x < 0 || x >= ow) continue;
              out.at(o, y, x) +=
                  static_cast<double>(kernel[((static_cast<std::size_t>(i) * cout + o) * k + ky) * k + kx]) *
                  in.at(i, iy, ix);
            }
  return out;
}

inline DTensor masked_conv(const DTensor& in, const std::vector<float>& kernel, const std::vector<float>& bias,
                           int cout, int k) {
  const int c = k / 2;
  return conv(in, kernel, bias, cout, k, 1, c, [c](int ky, int kx) { return ky < c || (ky == c && kx < c); });
}

inline DTensor strip_mean(const DTensor& in, bool vertical) {
  DTensor out(in.c, vertical ? 1 : in.h, vertical ? in.w : 1);
  for (int c = 0; c < in.c; ++c)
    for (int y = 0; y < in.h; ++y)
      for (int x = 0; x < in.w; ++x) {
        if (vertical)
          out.at(c, 0, x) += in.at(c, y, x) / in.h;
        else
          out.at(c, y, 0) += in.at(c, y, x) / in.w;
      }
  return out;
}

inline DTensor mean_pool(const DTensor& in, int f) {
  DTensor out(in.c, (in.h + f - 1) / f, (in.w + f - 1) / f);
  for (int c = 0; c < in.c; ++c)
    for (int y = 0; y < out.h; ++y)
      for (int x = 0; x < out.w; ++x) {
        double s = 0;
        int n = 0;
        for (int iy = y * f; iy < std::min(in.h, y * f + f); ++iy)
          for (int ix = x * f; ix < std::min(in.w, x * f + f); ++ix, ++n) s += in.at(c, iy, ix);
        out.at(c, y, x) = s / n;
      }
  return out;
}

struct NonlocalParams {
  std::vector<float> theta, theta_b, phi, phi_b, g, g_b, out, out_b;
  int inner = 0;
};

inline DTensor nonlocal(const DTensor& in, const NonlocalParams& p, int pool) {
  const DTensor th = conv(in, p.theta, p.theta_b, p.inner, 1, 1, 0);
  const DTensor ph = mean_pool(conv(in, p.phi, p.phi_b, p.inner, 1, 1, 0), pool);
  const DTensor g = mean_pool(conv(in, p.g, p.g_b, p.inner, 1, 1, 0), pool);
  DTensor y(p.inner, in.h, in.w);
  const int keys = ph.h * ph.w;
  std::vector<double> e(keys);
  for (int qy = 0; qy < in.h; ++qy)
    for (int qx = 0; qx < in.w; ++qx) {
      double z = 0;
      for (int j = 0; j < keys; ++j) {
        double d = 0;
        for (int c = 0; c < p.inner; ++c) d += th.at(c, qy, qx) * ph.at(c, j / ph.w, j % ph.w);
        e[j] = std::exp(d);
        z += e[j];
      }
      for (int c = 0; c < p.inner; ++c) {
        double s = 0;
        for (int j = 0; j < keys; ++j) s += e[j] / z * g.at(c, j / g.w, j % g.w);
        y.at(c, qy, qx) = s;
      }
    }
  DTensor out = conv(y, p.out, p.out_b, in.c, 1, 1, 0);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] += in.v[i];
  return out;
}

// Composite Simpson integral of the mixture density over [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, int n = 2000) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4 : 2);
  return s * h / 3;
}

inline double normal_pdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(2 * M_PI));
}

// Sylvester Hadamard matrix of order 8 as a dense matrix, then H X H^T.
inline double satd_matrix(const lbhic::Tensor& t) {
  int H[8][8];
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) H[i][j] = (__builtin_popcount(i & j) % 2) ? -1 : 1;
  double total = 0;
  for (int c = 0; c < t.channels(); ++c)
    for (int ty = 0; ty < t.height(); ty += 8)
      for (int tx = 0; tx < t.width(); tx += 8) {
        double X[8][8] = {};
        for (int y = 0; y < 8; ++y)
          for (int x = 0; x < 8; ++x)
            if (ty + y < t.height() && tx + x < t.width()) X[y][x] = t.at(c, ty + y, tx + x);
        for (int i = 0; i < 8; ++i)
          for (int j = 0; j < 8; ++j) {
            double s = 0;
            for (int a = 0; a < 8; ++a)
              for (int b = 0; b < 8; ++b) s += H[i][a] * X[a][b] * H[j][b];
            total += std::fabs(s);
          }
      }
  return total;
}

inline double psnr(const lbhic::Image& a, const lbhic::Image& b) {
  long double se = 0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) {
    const long double d = static_cast<long double>(a.rgb[i]) - b.rgb[i];
    se += d * d;
  }
  if (se == 0) return 99.0;
  const long double mse = se / a.rgb.size();
  return std::min(99.0, static_cast<double>(10 * std::log10(255.0L * 255.0L / mse)));
}

// MS-SSIM with a dense 11x11 window; means and (co)variances taken directly
// as weighted moments around the local mean.
inline double ms_ssim(const lbhic::Image& a, const lbhic::Image& b, int scales = 5) {
  const double weights[5] = {0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
  double wsum = 0;
  for (int s = 0; s < scales; ++s) wsum += weights[s];
  double win[11][11];
  double tot = 0;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      win[i][j] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
      tot += win[i][j];
    }
  for (auto& row : win)
    for (double& v : row) v /= tot;
  const double C1 = std::pow(0.01 * 255, 2), C2 = std::pow(0.03 * 255, 2);
  double result = 0;
  for (int ch = 0; ch < 3; ++ch) {
    int h = a.height, w = a.width;
    std::vector<double> pa(h * w), pb(h * w);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        pa[y * w + x] = a.at(y, x, ch);
        pb[y * w + x] = b.at(y, x, ch);
      }
    double score = 1;
    for (int s = 0; s < scales; ++s) {
      double ssim_sum = 0, cs_sum = 0;
      int n = 0;
      for (int y = 0; y + 11 <= h; ++y)
        for (int x = 0; x + 11 <= w; ++x, ++n) {
          double ma = 0, mb = 0;
          for (int i = 0; i < 11; ++i)
            for (int j = 0; j < 11; ++j) {
              ma += win[i][j] * pa[(y + i) * w + x + j];
              mb += win[i][j] * pb[(y + i) * w + x + j];
            }
          double va = 0, vb = 0, cov = 0;
          for (int i = 0; i < 11; ++i)
            for (int j = 0; j < 11; ++j) {
              const double da = pa[(y + i) * w + x + j] - ma;
              const double db = pb[(y + i) * w + x + j] - mb;
              va += win[i][j] * da * da;
              vb += win[i][j] * db * db;
              cov += win[i][j] * da * db;
            }
          const double cs = (2 * cov + C2) / (va + vb + C2);
          cs_sum += cs;
          ssim_sum += cs * (2 * ma * mb + C1) / (ma * ma + mb * mb + C1);
        }
      const double wt = weights[s] / wsum;
      if (s == scales - 1) {
        score *= std::pow(std::max(0.0, ssim_sum / n), wt);
      } else {
        score *= std::pow(std::max(0.0, cs_sum / n), wt);
        const int nh = h / 2, nw = w / 2;
        std::vector<double> da(nh * nw), db(nh * nw);
        for (int y = 0; y < nh; ++y)
          for (int x = 0; x < nw; ++x) {
            da[y * nw + x] = (pa[2 * y * w + 2 * x] + pa[2 * y * w + 2 * x + 1] + pa[(2 * y + 1) * w + 2 * x] +
                              pa[(2 * y + 1) * w + 2 * x + 1]) / 4;
            db[y * nw + x] = (pb[2 * y * w + 2 * x] + pb[2 * y * w + 2 * x + 1] + pb[(2 * y + 1) * w + 2 * x] +
                              pb[(2 * y + 1) * w + 2 * x + 1]) / 4;
          }
        pa.swap(da);
        pb.swap(db);
        h = nh;
        w = nw;
      }
    }
    result += score;
  }
  return result / 3;
}

// Exact cubic through four (quality, ln rate) points, Lagrange form.
inline double lagrange4(const double* q, const double* r, double x) {
  double s = 0;
  for (int i = 0; i < 4; ++i) {
    double l = 1;
    for (int j = 0; j < 4; ++j)
      if (j != i) l *= (x - q[j]) / (q[i] - q[j]);
    s += r[i] * l;
  }
  return s;
}

inline lbhic::Image random_image(int w, int h, std::mt19937& rng) {
  lbhic::Image img(w, h);
  std::uniform_int_distribution<int> d(0, 255);
  for (auto& v : img.rgb) v = static_cast<std::uint8_t>(d(rng));
  return img;
}

// Smooth random image: sum of a few random low-frequency cosines plus noise.
inline lbhic::Image smooth_image(int w, int h, std::mt19937& rng) {
  lbhic::Image img(w, h);
  std::uniform_real_distribution<double> u(0, 1);
  double fx[3][3], fy[3][3], ph[3][3];
  for (int c = 0; c < 3; ++c)
    for (int k = 0; k < 3; ++k) {
      fx[c][k] = u(rng) * 0.05;
      fy[c][k] = u(rng) * 0.05;
      ph[c][k] = u(rng) * 6.28;
    }
  std::normal_distribution<double> n(0, 4);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = 128;
        for (int k = 0; k < 3; ++k) v += 35 * std::cos(fx[c][k] * x + fy[c][k] * y + ph[c][k]);
        v += n(rng);
        img.at(y, x, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
  return img;
}

}  // namespace oracle
