#include <doctest.h>

#include <random>
#include <sstream>

#include "lbhic/bpm.hpp"
#include "lbhic/metrics.hpp"
#include "oracles.hpp"

using namespace lbhic;

namespace {

int marked(const BoundaryMask& m) {
  int n = 0;
  for (float v : m.data()) n += v != 0.0f;
  return n;
}

Image shifted(const Image& src, int delta) {
  Image out = src;
  for (auto& v : out.rgb) v = static_cast<std::uint8_t>(std::clamp(v + delta, 0, 255));
  return out;
}

}  // namespace

TEST_CASE("boundary mask bands") {
  const BoundaryMask m = boundary_mask(256, 256, 128, 8);
  CHECK(marked(m) == 4032);
  CHECK(m.at(0, 124, 0) == 1.0f);
  CHECK(m.at(0, 131, 0) == 1.0f);
  CHECK(m.at(0, 123, 0) == 0.0f);
  CHECK(m.at(0, 132, 10) == 0.0f);
  CHECK(marked(boundary_mask(128, 128, 128)) == 0);
  CHECK(marked(boundary_mask(100, 90, 128)) == 0);
  CHECK(marked(boundary_mask(128, 256, 128, 2)) == 128 * 2);
  CHECK_THROWS_AS(boundary_mask(256, 256, 128, 3), ConfigError);
}

TEST_CASE("boundary loss closed form") {
  std::mt19937 rng(1);
  std::uniform_real_distribution<float> u(0, 1);
  Tensor x({3, 16, 16}), y({3, 16, 16});
  for (float& v : x.data()) v = u(rng);
  for (float& v : y.data()) v = u(rng);
  const BoundaryMask m = boundary_mask(16, 16, 8, 4);
  CHECK(boundary_loss(x, x, m) == 0.0);
  double g = 0, b = 0;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) {
        const double d = static_cast<double>(x.at(c, i, j)) - y.at(c, i, j);
        g += d * d;
        if (m.at(0, i, j) != 0) b += d * d;
      }
  CHECK(boundary_loss(x, y, m, 10.0) == doctest::Approx((g + 10 * b) / 768).epsilon(1e-12));
  CHECK(boundary_loss(x, y, m, 0.0) == doctest::Approx(g / 768).epsilon(1e-12));
}

TEST_CASE("postprocess keeps shape and range") {
  const WeightStore w = toy_init(ModelConfig::low(), 3);
  std::mt19937 rng(2);
  const Image img = oracle::random_image(40, 24, rng);
  const Image out = postprocess(img, 16, w);
  CHECK(out.width == 40);
  CHECK(out.height == 24);
  CHECK_THROWS_AS(postprocess(Tensor({3, 8, 8}), Tensor({1, 8, 9}), w), ShapeError);
}

TEST_CASE("psnr against oracle") {
  std::mt19937 rng(3);
  for (int i = 0; i < 10; ++i) {
    const Image a = oracle::random_image(33, 17, rng);
    const Image b = oracle::random_image(33, 17, rng);
    CHECK(std::fabs(psnr(a, b) - oracle::psnr(a, b)) < 1e-6);
  }
  const Image a = oracle::random_image(8, 8, rng);
  CHECK(psnr(a, a) == 99.0);
  CHECK(psnr(a, shifted(a, 0)) == 99.0);
  CHECK_THROWS_AS(psnr(a, Image(8, 9)), ShapeError);
}

TEST_CASE("ms-ssim against dense-window oracle") {
  std::mt19937 rng(4);
  const Image a = oracle::smooth_image(180, 176, rng);
  const Image b = shifted(a, 7);
  CHECK(std::fabs(ms_ssim(a, b) - oracle::ms_ssim(a, b)) < 1e-4);
  const Image c = oracle::random_image(180, 176, rng);
  CHECK(std::fabs(ms_ssim(a, c) - oracle::ms_ssim(a, c)) < 1e-4);
  CHECK(ms_ssim(a, a) == 1.0);
  CHECK(std::fabs(ms_ssim(a, c, 3) - oracle::ms_ssim(a, c, 3)) < 1e-4);
  try {
    ms_ssim(Image(100, 100), Image(100, 100));
    FAIL("small image accepted");
  } catch (const ShapeError& e) {
    CHECK(std::string(e.what()).find("supports 4 scale") != std::string::npos);
  }
}

TEST_CASE("satd equals the dense Hadamard product") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<float> u(-1, 1);
  Tensor t({2, 19, 13});
  for (float& v : t.data()) v = u(rng);
  CHECK(std::fabs(satd(t) - oracle::satd_matrix(t)) < 1e-9);
  Tensor dc({1, 8, 8}, 1.0f);
  CHECK(satd(dc) == 64.0);
  CHECK_THROWS_AS(satd(t, 4), ConfigError);
}

TEST_CASE("bpp") {
  CHECK(bpp(1000, 100, 80) == 1.0);
  CHECK_THROWS(bpp(10, 0, 5));
}

TEST_CASE("bd-rate") {
  const std::vector<RdPoint> anchor = {{0.1, 30}, {0.2, 33}, {0.4, 36}, {0.8, 39}};
  CHECK(std::fabs(bd_rate(anchor, anchor)) < 1e-9);
  std::vector<RdPoint> doubled = anchor;
  for (auto& p : doubled) p.bpp *= 2;
  CHECK(bd_rate(anchor, doubled) == doctest::Approx(100.0).epsilon(1e-6));
  CHECK(bd_rate(doubled, anchor) == doctest::Approx(-50.0).epsilon(1e-6));

  const std::vector<RdPoint> test = {{0.09, 29.5}, {0.21, 33.4}, {0.37, 35.8}, {0.85, 39.6}};
  // Oracle: exact interpolating cubics, Simpson over the overlap.
  double qa[4], ra[4], qt[4], rt[4];
  for (int i = 0; i < 4; ++i) {
    qa[i] = anchor[i].quality;
    ra[i] = std::log(anchor[i].bpp);
    qt[i] = test[i].quality;
    rt[i] = std::log(test[i].bpp);
  }
  const double lo = 30, hi = 39;
  const double diff = oracle::simpson([&](double q) { return oracle::lagrange4(qt, rt, q) - oracle::lagrange4(qa, ra, q); },
                                      lo, hi) / (hi - lo);
  const double expect = (std::exp(diff) - 1) * 100;
  CHECK(std::fabs(bd_rate(anchor, test) - expect) <= 1e-3 * std::fabs(expect));

  const std::vector<RdPoint> far = {{1, 50}, {2, 52}, {3, 54}, {4, 56}};
  CHECK_THROWS(bd_rate(anchor, far));
  CHECK_THROWS(bd_rate(std::vector<RdPoint>(anchor.begin(), anchor.begin() + 3), anchor));
}

TEST_CASE("rd csv parsing") {
  std::istringstream in("name,bpp,psnr,ms_ssim\na,0.1,30,0.9\nb, 0.2 ,33,0.95\n\n");
  const auto pts = read_rd_csv(in, "psnr");
  REQUIRE(pts.size() == 2);
  CHECK(pts[1].bpp == 0.2);
  CHECK(pts[1].quality == 33);
  std::istringstream bad("bpp,psnr\n");
  CHECK_THROWS(read_rd_csv(bad, "ms_ssim"));
}

TEST_CASE("correlation study: periodic content correlates perfectly at the matching offset") {
  const int B = 8;
  std::mt19937 rng(6);
  std::vector<Image> images;
  for (int n = 0; n < 3; ++n) {
    // Each column pattern repeats every B rows, so pixel (y, x) equals (y - B, x).
    Image img(5 * B, 5 * B);
    std::vector<std::uint8_t> pattern(static_cast<std::size_t>(B) * img.width);
    for (auto& v : pattern) v = static_cast<std::uint8_t>(rng() % 256);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = pattern[(y % B) * img.width + x];
    images.push_back(img);
  }
  const CorrelationTable t = correlation_study(images, B, {4, 1, 11});
  int matched = 0;
  for (const auto& r : t.rows) {
    if (r.reference == ReferenceBlock::upper && r.ref_y == r.target_y && r.ref_x == r.target_x) {
      CHECK(r.correlation == doctest::Approx(1.0));
      CHECK(r.distance == B);
      ++matched;
    }
  }
  CHECK(matched == 4);
  std::ostringstream csv;
  write_correlation_csv(csv, t);
  CHECK(csv.str().rfind("target_y,target_x,reference,", 0) == 0);
}

TEST_CASE("correlation study: independent noise is uncorrelated") {
  std::mt19937 rng(7);
  std::vector<Image> images;
  for (int n = 0; n < 2; ++n) images.push_back(oracle::random_image(88, 88, rng));
  const CorrelationTable t = correlation_study(images, 8, {8, 2, 3});
  REQUIRE(!t.rows.empty());
  double mean_abs = 0;
  double mean_norm = 0;
  for (const auto& r : t.rows) {
    mean_abs += std::fabs(r.correlation);
    mean_norm += r.normalized_distance;
    CHECK(r.samples == 200);
  }
  CHECK(mean_abs / t.rows.size() < 0.1);
  CHECK(mean_norm / t.rows.size() == doctest::Approx(1.0));
  CHECK_THROWS(correlation_study(std::span(images).first(1), 8));
}
