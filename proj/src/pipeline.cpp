#include "lbhic/pipeline.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "lbhic/bpm.hpp"
#include "lbhic/entropy.hpp"

namespace lbhic {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// Kernel-level OpenMP width for the duration of an encode/decode call.
class KernelThreads {
 public:
  explicit KernelThreads(int n) : saved_(omp_get_max_threads()) { omp_set_num_threads(std::max(1, n)); }
  ~KernelThreads() { omp_set_num_threads(saved_); }
  KernelThreads(const KernelThreads&) = delete;
  KernelThreads& operator=(const KernelThreads&) = delete;

 private:
  int saved_;
};

std::vector<CdfTable> hyper_prior_tables(const WeightStore& w) {
  const auto mean = w.vector("codec.hyper_prior.mean");
  const auto log_scale = w.vector("codec.hyper_prior.log_scale");
  if (mean.size() != log_scale.size()) throw ConfigError("hyper prior mean/log_scale lengths differ");
  std::vector<CdfTable> tables;
  tables.reserve(mean.size());
  for (std::size_t c = 0; c < mean.size(); ++c) {
    const float scale = std::clamp(std::exp(log_scale[c]), kMinScale, kMaxScale);
    tables.push_back(build_cdf(gaussian_element(mean[c], scale)));
  }
  return tables;
}

// Visits latent positions in raster order. At each position the GMM
// parameters of all channels are computed from the hyper features and the
// causal context of `latent`, then visit(c, y, x, cdf) runs for c = 0..M-1.
// The decoder writes decoded symbols into `latent` from inside visit; the
// context never reads the current or later positions.
template <class Visit>
void walk_latent(const Tensor& hyper_features, Tensor& latent, const WeightStore& w, Visit&& visit) {
  const int M = latent.channels();
  for (int y = 0; y < latent.height(); ++y) {
    for (int x = 0; x < latent.width(); ++x) {
      const auto context = context_features_at(latent, w, y, x);
      const auto params = entropy_params_at(hyper_features, context, w, y, x);
      for (int c = 0; c < M; ++c) visit(c, y, x, build_cdf(params[c]));
    }
  }
}

Shape latent_shape(const ModelConfig& cfg) { return {cfg.m_channels, cfg.block_size / 16, cfg.block_size / 16}; }
Shape hyper_shape(const ModelConfig& cfg) { return {cfg.n_channels, cfg.block_size / 64, cfg.block_size / 64}; }

void check_config(const WeightStore& weights, const ModelConfig& config) {
  config.validate();
  validate_weights(weights, config);
}

}  // namespace

StageTimings& StageTimings::operator+=(const StageTimings& o) {
  cpm += o.cpm;
  transform += o.transform;
  encode_entropy += o.encode_entropy;
  inverse_transform += o.inverse_transform;
  decode_entropy += o.decode_entropy;
  bpm += o.bpm;
  return *this;
}

ModelConfig config_for(const ContainerMeta& meta) { return ModelConfig::from_id(meta.config_id, meta.block_size); }

EncodedBlock encode_block(const Tensor& block, const PredictionContext& ctx, const WeightStore& w,
                          const ModelConfig& cfg) {
  const int B = cfg.block_size;
  if (block.shape() != Shape{3, B, B}) throw ShapeError("encode_block: block must be 3xBxB");
  EncodedBlock out;

  auto t = Clock::now();
  const Tensor prediction = cpm_predict(ctx, w, B);
  out.timings.cpm = seconds_since(t);

  t = Clock::now();
  const Tensor y = analysis(subtract(block, prediction), w);
  out.latent = quantize_round(y);
  out.hyper = quantize_round(hyper_analysis(y, w));
  out.timings.transform = seconds_since(t);

  t = Clock::now();
  {
    const auto tables = hyper_prior_tables(w);
    if (static_cast<int>(tables.size()) != out.hyper.shape.c) throw ConfigError("hyper prior width mismatch");
    RangeEncoder enc;
    const std::size_t plane = out.hyper.shape.plane();
    for (std::size_t i = 0; i < out.hyper.values.size(); ++i) enc.encode(tables[i / plane], out.hyper.values[i]);
    out.streams.hyper = enc.finish();
  }
  {
    const Tensor hyper_features = hyper_synthesis(dequantize(out.hyper), w);
    Tensor latent = dequantize(out.latent);
    RangeEncoder enc;
    walk_latent(hyper_features, latent, w,
                [&](int c, int y, int x, const CdfTable& cdf) { enc.encode(cdf, out.latent.at(c, y, x)); });
    out.streams.main = enc.finish();
  }
  out.timings.encode_entropy = seconds_since(t);

  t = Clock::now();
  out.reconstruction = clamp(add(synthesis(dequantize(out.latent), w), prediction), 0.0f, 1.0f);
  out.timings.inverse_transform = seconds_since(t);
  return out;
}

DecodedResidual decode_residual(const BlockStreams& streams, const WeightStore& w, const ModelConfig& cfg) {
  DecodedResidual out;
  auto t = Clock::now();
  {
    const auto tables = hyper_prior_tables(w);
    const Shape hs = hyper_shape(cfg);
    if (static_cast<int>(tables.size()) != hs.c) throw ConfigError("hyper prior width mismatch");
    out.hyper = {hs, std::vector<std::int32_t>(hs.size())};
    RangeDecoder dec(streams.hyper);
    for (std::size_t i = 0; i < out.hyper.values.size(); ++i) out.hyper.values[i] = dec.decode(tables[i / hs.plane()]);
    if (dec.consumed() != streams.hyper.size()) throw DecodeError("hyper substream has trailing bytes");
  }
  {
    const Tensor hyper_features = hyper_synthesis(dequantize(out.hyper), w);
    const Shape ls = latent_shape(cfg);
    if (hyper_features.shape() != Shape{2 * ls.c, ls.h, ls.w}) throw ConfigError("hyper synthesis output has wrong dims");
    Tensor latent(ls);
    out.latent = {ls, std::vector<std::int32_t>(ls.size())};
    RangeDecoder dec(streams.main);
    walk_latent(hyper_features, latent, w, [&](int c, int y, int x, const CdfTable& cdf) {
      const int s = dec.decode(cdf);
      out.latent.at(c, y, x) = s;
      latent.at(c, y, x) = static_cast<float>(s);
    });
    if (dec.consumed() != streams.main.size()) throw DecodeError("main substream has trailing bytes");
  }
  out.timings.decode_entropy = seconds_since(t);

  t = Clock::now();
  out.residual = synthesis(dequantize(out.latent), w);
  out.timings.inverse_transform = seconds_since(t);
  return out;
}

Tensor decode_block(const BlockStreams& streams, const PredictionContext& ctx, const WeightStore& w,
                    const ModelConfig& cfg) {
  const DecodedResidual r = decode_residual(streams, w, cfg);
  return clamp(add(r.residual, cpm_predict(ctx, w, cfg.block_size)), 0.0f, 1.0f);
}

EncodeResult encode_image(const Image& image, const WeightStore& w, const ModelConfig& cfg,
                          const EncodeOptions& options) {
  check_config(w, cfg);
  if (options.workers < 1) throw ConfigError("worker count must be >= 1");
  const Partition parts = partition(image, cfg.block_size);
  const WavefrontPlan plan = wavefront_sets(parts.grid.rows, parts.grid.cols);
  KernelThreads threads(options.workers);

  auto blocks = run_wavefront<EncodedBlock>(plan, options.workers, [&](BlockIndex b, const BlockResults<EncodedBlock>& done) {
    const EncodedBlock* up = done.upper(b);
    const EncodedBlock* left = done.left(b);
    const PredictionContext ctx{up ? &up->reconstruction : nullptr, left ? &left->reconstruction : nullptr};
    return encode_block(parts.blocks[parts.grid.raster(b)], ctx, w, cfg);
  });

  EncodeResult result;
  result.container.meta = {static_cast<std::uint32_t>(image.width), static_cast<std::uint32_t>(image.height),
                           static_cast<std::uint16_t>(cfg.block_size), static_cast<std::uint8_t>(cfg.config_id),
                           static_cast<std::uint8_t>(options.postprocess_flag ? kFlagPostprocess : 0)};
  for (EncodedBlock& b : blocks) {
    result.timings += b.timings;
    result.container.blocks.push_back(std::move(b.streams));
    result.reconstruction.push_back(std::move(b.reconstruction));
    result.latents.push_back(std::move(b.latent));
    result.hypers.push_back(std::move(b.hyper));
  }
  return result;
}

DecodeResult decode_image(const BitstreamContainer& container, const WeightStore& w, int workers, bool apply_bpm) {
  const ModelConfig cfg = config_for(container.meta);
  check_config(w, cfg);
  if (workers < 1) throw ConfigError("worker count must be >= 1");
  const BlockGrid grid(static_cast<int>(container.meta.height), static_cast<int>(container.meta.width), cfg.block_size);
  if (static_cast<int>(container.blocks.size()) != grid.count()) {
    throw DecodeError("container holds " + std::to_string(container.blocks.size()) + " blocks, grid needs " +
                      std::to_string(grid.count()));
  }
  KernelThreads threads(workers);
  DecodeResult result;

  std::vector<DecodedResidual> residuals;
  try {
    residuals = run_blocks<DecodedResidual>(grid, workers, [&](BlockIndex b) {
      return decode_residual(container.blocks[grid.raster(b)], w, cfg);
    });
  } catch (const WavefrontError& e) {
    throw DecodeError(e.what());
  }

  struct Reconstructed {
    Tensor pixels;
    double cpm_seconds = 0;
  };
  const WavefrontPlan plan = wavefront_sets(grid.rows, grid.cols);
  auto recon = run_wavefront<Reconstructed>(plan, workers, [&](BlockIndex b, const BlockResults<Reconstructed>& done) {
    const Reconstructed* up = done.upper(b);
    const Reconstructed* left = done.left(b);
    const PredictionContext ctx{up ? &up->pixels : nullptr, left ? &left->pixels : nullptr};
    const auto t = Clock::now();
    const Tensor prediction = cpm_predict(ctx, w, cfg.block_size);
    const double cpm = seconds_since(t);
    return Reconstructed{clamp(add(residuals[grid.raster(b)].residual, prediction), 0.0f, 1.0f), cpm};
  });

  for (std::size_t i = 0; i < residuals.size(); ++i) {
    result.timings += residuals[i].timings;
    result.timings.cpm += recon[i].cpm_seconds;
    result.latents.push_back(std::move(residuals[i].latent));
    result.hypers.push_back(std::move(residuals[i].hyper));
    result.blocks.push_back(std::move(recon[i].pixels));
  }
  result.image = assemble(result.blocks, grid);
  if (apply_bpm && (container.meta.flags & kFlagPostprocess)) {
    const auto t = Clock::now();
    result.image = postprocess(result.image, cfg.block_size, w);
    result.timings.bpm = seconds_since(t);
  }
  return result;
}

}  // namespace lbhic
