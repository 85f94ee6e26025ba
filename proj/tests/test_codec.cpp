#include <doctest.h>

#include <cmath>
#include <random>

#include "lbhic/cpm.hpp"
#include "lbhic/kernels.hpp"
#include "lbhic/neural_codec.hpp"
#include "oracles.hpp"

using namespace lbhic;

namespace {

const WeightStore& toy() {
  static const WeightStore w = toy_init(ModelConfig::low(), 42);
  return w;
}

Tensor random_tensor(Shape s, std::mt19937& rng, float lo = 0.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  Tensor t(s);
  for (float& v : t.data()) v = u(rng);
  return t;
}

}  // namespace

TEST_CASE("transform shapes for a 128 block") {
  std::mt19937 rng(1);
  const Tensor block = random_tensor({3, 128, 128}, rng, -0.5f, 0.5f);
  const Tensor y = analysis(block, toy());
  CHECK(y.shape() == Shape{192, 8, 8});
  const Tensor z = hyper_analysis(y, toy());
  CHECK(z.shape() == Shape{128, 2, 2});
  CHECK(hyper_synthesis(z, toy()).shape() == Shape{384, 8, 8});
  CHECK(synthesis(y, toy()).shape() == Shape{3, 128, 128});
  CHECK(context_features(y, toy()).shape() == Shape{384, 8, 8});
  CHECK_THROWS_AS(analysis(Tensor({4, 64, 64}), toy()), ShapeError);
}

TEST_CASE("single-position context and entropy head match the full maps") {
  std::mt19937 rng(2);
  const Tensor latent = random_tensor({192, 4, 4}, rng, -3.0f, 3.0f);
  const Tensor hyper = random_tensor({384, 4, 4}, rng, -1.0f, 1.0f);
  const Tensor ctx = context_features(latent, toy());
  const GmmParams full = entropy_params(hyper, ctx, toy());
  CHECK(full.elements.size() == 192u * 16);
  for (auto [y, x] : {std::pair{0, 0}, {1, 3}, {3, 2}}) {
    const auto col = context_features_at(latent, toy(), y, x);
    for (int c = 0; c < 384; ++c) REQUIRE(col[c] == ctx.at(c, y, x));
    const auto at = entropy_params_at(hyper, col, toy(), y, x);
    for (int c = 0; c < 192; ++c) REQUIRE(at[c] == full.elements[(static_cast<std::size_t>(c) * 4 + y) * 4 + x]);
  }
}

TEST_CASE("context at a position ignores the current and later latents") {
  std::mt19937 rng(3);
  Tensor latent = random_tensor({192, 4, 4}, rng, -3.0f, 3.0f);
  const auto before = context_features_at(latent, toy(), 2, 1);
  for (int c = 0; c < 192; ++c)
    for (int i = 2 * 4 + 1; i < 16; ++i) latent.at(c, i / 4, i % 4) = 50.0f;
  CHECK(context_features_at(latent, toy(), 2, 1) == before);
}

TEST_CASE("gmm head: softmax weights, clamped scales") {
  const int M = 2;
  std::vector<float> head(9 * M, 0.0f);
  head[0 * M + 1] = 1.0f;        // logit k=0 for c=1
  head[3 * M + 0] = 2.5f;        // mean k=0 for c=0
  head[6 * M + 0] = -50.0f;      // raw scale -> clamped low
  head[8 * M + 1] = 50.0f;       // raw scale -> clamped high
  const auto g = gmm_from_head(head, M);
  REQUIRE(g.size() == 2);
  CHECK(g[0].weight[0] == doctest::Approx(1.0 / 3));
  const double e = std::exp(1.0);
  CHECK(g[1].weight[0] == doctest::Approx(e / (e + 2)));
  CHECK(g[0].mean[0] == 2.5f);
  CHECK(g[0].scale[0] == kMinScale);
  CHECK(g[1].scale[2] == kMaxScale);
  CHECK(g[0].scale[1] == 1.0f);
  CHECK_THROWS(gmm_from_head(std::vector<float>(10), 2));
}

TEST_CASE("quantizers") {
  CHECK(quantize_symbol(2.4f) == 2);
  CHECK(quantize_symbol(2.5f) == 3);
  CHECK(quantize_symbol(-2.5f) == -3);
  CHECK(quantize_symbol(500.0f) == 127);
  CHECK(quantize_symbol(-500.0f) == -128);
  Tensor t({1, 1, 4});
  t.at(0, 0, 0) = 2.4f;
  t.at(0, 0, 1) = -0.6f;
  const IntTensor q = quantize_round(t);
  CHECK(q.at(0, 0, 0) == 2);
  CHECK(q.at(0, 0, 1) == -1);
  CHECK(quantize_ste_forward(t) == q);
  CHECK(dequantize(q).at(0, 0, 1) == -1.0f);
  Pcg32 rng(9, 9);
  Tensor big({1, 64, 64}, 1.25f);
  const Tensor n = quantize_noise(big, rng);
  double mean = 0;
  for (float v : n.data()) {
    CHECK(std::fabs(v - 1.25f) <= 0.5f);
    mean += v;
  }
  CHECK(mean / n.size() == doctest::Approx(1.25).epsilon(0.02));
}

TEST_CASE("cpm: zero prediction without full context") {
  std::mt19937 rng(4);
  const Tensor up = random_tensor({3, 64, 64}, rng);
  const Tensor none = cpm_predict({}, toy(), 64);
  CHECK(none.shape() == Shape{3, 64, 64});
  for (float v : none.data()) REQUIRE(v == 0.0f);
  CHECK(cpm_predict({&up, nullptr}, toy(), 64) == none);
  CHECK_THROWS_AS(fuse_context({&up, nullptr}, toy()), ConfigError);
}

TEST_CASE("cpm: feature fusion is strip-pool plus broadcast") {
  std::mt19937 rng(5);
  const Tensor fu = random_tensor({4, 6, 6}, rng);
  const Tensor fl = random_tensor({4, 6, 6}, rng);
  const Tensor fused = fuse_features(fu, fl);
  const auto cols = oracle::strip_mean(oracle::from(fu), true);
  const auto rows = oracle::strip_mean(oracle::from(fl), false);
  for (int c = 0; c < 4; ++c)
    for (int y = 0; y < 6; ++y)
      for (int x = 0; x < 6; ++x) CHECK(fused.at(c, y, x) == doctest::Approx(cols.at(c, 0, x) + rows.at(c, y, 0)));
}

TEST_CASE("cpm: prediction with context is deterministic and sized") {
  std::mt19937 rng(6);
  const Tensor up = random_tensor({3, 64, 64}, rng);
  const Tensor left = random_tensor({3, 64, 64}, rng);
  const Tensor p = cpm_predict({&up, &left}, toy(), 64);
  CHECK(p.shape() == Shape{3, 64, 64});
  CHECK(all_finite(p));
  CHECK(cpm_predict({&up, &left}, toy(), 64) == p);
  CHECK(extract_features(up, toy()).shape() == Shape{64, 64, 64});
}
