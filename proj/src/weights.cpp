#include "lbhic/weights.hpp"

#include <zlib.h>

#include <fstream>
#include <iterator>
#include <numeric>

#include "lbhic/bpm.hpp"
#include "lbhic/byte_io.hpp"
#include "lbhic/cpm.hpp"
#include "lbhic/neural_codec.hpp"

namespace lbhic {

namespace {

constexpr char kMagic[4] = {'L', 'B', 'H', 'W'};
constexpr std::uint16_t kVersion = 1;

std::size_t element_count(const std::vector<std::uint32_t>& dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         [](std::size_t a, std::uint32_t b) { return a * b; });
}

std::string dims_string(const std::vector<std::uint32_t>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s + "]";
}

class TableBuilder {
 public:
  using u32 = std::uint32_t;

  void conv(const std::string& name, int out, int in, int k) {
    params_.push_back({name + ".weight", {u32(out), u32(in), u32(k), u32(k)}, false});
    params_.push_back({name + ".bias", {u32(out)}, true});
  }
  // Transposed-conv kernels are stored (in, out, k, k).
  void tconv(const std::string& name, int in, int out, int k) {
    params_.push_back({name + ".weight", {u32(in), u32(out), u32(k), u32(k)}, false});
    params_.push_back({name + ".bias", {u32(out)}, true});
  }
  void vec(const std::string& name, int n) { params_.push_back({name, {u32(n)}, false}); }

  std::vector<ParamSpec> take() { return std::move(params_); }

 private:
  std::vector<ParamSpec> params_;
};

}  // namespace

Pcg32::Pcg32(std::uint64_t seed, std::uint64_t stream) : state_(0), inc_((stream << 1u) | 1u) {
  next();
  state_ += seed;
  next();
}

std::uint32_t Pcg32::next() {
  auto [value, state] = pcg32_next(state_, inc_);
  state_ = state;
  return value;
}

float Pcg32::next_unit() { return static_cast<float>(next() >> 8) * 0x1p-24f; }

std::pair<std::uint32_t, std::uint64_t> pcg32_next(std::uint64_t state, std::uint64_t inc) {
  const std::uint64_t next_state = state * Pcg32::kMultiplier + inc;
  const auto xorshifted = static_cast<std::uint32_t>(((state >> 18u) ^ state) >> 27u);
  const auto rot = static_cast<std::uint32_t>(state >> 59u);
  const std::uint32_t value = (xorshifted >> rot) | (xorshifted << ((32u - rot) & 31u));
  return {value, next_state};
}

ModelConfig ModelConfig::from_id(int id, int block_size) {
  ModelConfig cfg;
  cfg.config_id = id;
  cfg.block_size = block_size;
  if (id == 0) {
    cfg.n_channels = 128;
    cfg.m_channels = 192;
  } else if (id == 1) {
    cfg.n_channels = 256;
    cfg.m_channels = 448;
  } else {
    throw ConfigError("unknown model config id " + std::to_string(id) + " (expected 0 or 1)");
  }
  return cfg;
}

void ModelConfig::validate() const {
  const bool low = n_channels == 128 && m_channels == 192 && config_id == 0;
  const bool high = n_channels == 256 && m_channels == 448 && config_id == 1;
  if (!low && !high) {
    throw ConfigError("unsupported (N, M) = (" + std::to_string(n_channels) + ", " +
                      std::to_string(m_channels) + ") for config id " + std::to_string(config_id));
  }
  if (mixtures != kMixtures) throw ConfigError("mixture count must be 3");
  if (block_size < 64 || block_size % 64 != 0) {
    throw ConfigError("block size must be a positive multiple of 64, got " +
                      std::to_string(block_size));
  }
}

void WeightStore::add(std::string name, std::vector<std::uint32_t> dims, std::vector<float> data) {
  if (index_.contains(name)) throw ConfigError("duplicate weight '" + name + "'");
  if (element_count(dims) != data.size()) {
    throw ShapeError("weight '" + name + "': dims " + dims_string(dims) + " need " +
                     std::to_string(element_count(dims)) + " values, got " +
                     std::to_string(data.size()));
  }
  index_.emplace(name, entries_.size());
  entries_.push_back({std::move(name), std::move(dims), std::move(data)});
}

bool WeightStore::contains(std::string_view name) const { return index_.find(name) != index_.end(); }

const WeightStore::Entry& WeightStore::get(std::string_view name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("missing weight '" + std::string(name) + "'");
  return entries_[it->second];
}

std::span<float> WeightStore::mutable_data(std::string_view name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw ConfigError("missing weight '" + std::string(name) + "'");
  return entries_[it->second].data;
}

KernelView WeightStore::kernel(std::string_view name) const {
  const Entry& e = get(name);
  if (e.dims.size() != 4) {
    throw ShapeError("weight '" + e.name + "' is not rank 4: " + dims_string(e.dims));
  }
  return {static_cast<int>(e.dims[0]), static_cast<int>(e.dims[1]), static_cast<int>(e.dims[2]),
          static_cast<int>(e.dims[3]), e.data};
}

std::span<const float> WeightStore::vector(std::string_view name) const {
  const Entry& e = get(name);
  if (e.dims.size() != 1) {
    throw ShapeError("weight '" + e.name + "' is not rank 1: " + dims_string(e.dims));
  }
  return e.data;
}

std::vector<ParamSpec> architecture(const ModelConfig& config) {
  const int N = config.n_channels;
  const int M = config.m_channels;
  TableBuilder t;

  t.conv("codec.analysis.0", N, 3, 5);
  t.conv("codec.analysis.1", N, N, 5);
  t.conv("codec.analysis.2", N, N, 5);
  t.conv("codec.analysis.3", M, N, 5);
  t.tconv("codec.synthesis.0", M, N, 5);
  t.tconv("codec.synthesis.1", N, N, 5);
  t.tconv("codec.synthesis.2", N, N, 5);
  t.tconv("codec.synthesis.3", N, 3, 5);
  t.conv("codec.hyper_analysis.0", N, M, 5);
  t.conv("codec.hyper_analysis.1", N, N, 5);
  t.tconv("codec.hyper_synthesis.0", N, N, 5);
  t.tconv("codec.hyper_synthesis.1", N, 2 * M, 5);
  t.conv("codec.context", 2 * M, M, 5);
  t.conv("codec.entropy.0", kEntropyHidden1, 4 * M, 1);
  t.conv("codec.entropy.1", kEntropyHidden2, kEntropyHidden1, 1);
  t.conv("codec.entropy.2", 3 * kMixtures * M, kEntropyHidden2, 1);
  t.vec("codec.hyper_prior.mean", N);
  t.vec("codec.hyper_prior.log_scale", N);

  const int F = kCpmFeatures;
  const int U = kCpmUnetWidth;
  t.conv("cpm.extract.0", F, 3, 3);
  t.conv("cpm.extract.1", F, F, 3);
  t.conv("cpm.extract.2", F, F, 3);
  t.conv("cpm.predict.enc", U, F + 6, 3);
  t.conv("cpm.predict.down1", 2 * U, U, 3);
  t.conv("cpm.predict.down2", 4 * U, 2 * U, 3);
  t.conv("cpm.predict.bottleneck", 4 * U, 4 * U, 3);
  t.tconv("cpm.predict.up1", 4 * U, 2 * U, 4);
  t.conv("cpm.predict.merge1", 2 * U, 4 * U, 3);
  t.tconv("cpm.predict.up2", 2 * U, U, 4);
  t.conv("cpm.predict.merge2", U, 2 * U, 3);
  t.conv("cpm.predict.head", 3, U, 3);

  const int B = kBpmFeatures;
  t.conv("bpm.stem", B, 4, 3);
  t.conv("bpm.attention", B, B + 1, 3);
  t.conv("bpm.down2", B, B, 3);
  t.conv("bpm.down4", B, B, 3);
  for (int s = 0; s < kBpmScales; ++s) {
    const std::string grdb = "bpm.scale" + std::to_string(s);
    for (int r = 0; r < kRdbsPerGroup; ++r) {
      const std::string rdb = grdb + ".rdb" + std::to_string(r);
      for (int l = 0; l < kRdbLayers; ++l) {
        t.conv(rdb + ".layer" + std::to_string(l), kBpmGrowth, B + l * kBpmGrowth, 3);
      }
      t.conv(rdb + ".fuse", B, B + kRdbLayers * kBpmGrowth, 1);
    }
    t.conv(grdb + ".fuse", B, kRdbsPerGroup * B, 1);
  }
  t.conv("bpm.fusion", B, kBpmScales * B, 1);
  t.conv("bpm.nonlocal.theta", B / 2, B, 1);
  t.conv("bpm.nonlocal.phi", B / 2, B, 1);
  t.conv("bpm.nonlocal.g", B / 2, B, 1);
  t.conv("bpm.nonlocal.out", B, B / 2, 1);
  t.conv("bpm.tail", 3, B, 3);
  return t.take();
}

void validate_weights(const WeightStore& store, const ModelConfig& config) {
  for (const ParamSpec& p : architecture(config)) {
    const auto& e = store.get(p.name);
    if (e.dims != p.dims) {
      throw ConfigError("weight '" + p.name + "' has dims " + dims_string(e.dims) + ", expected " +
                        dims_string(p.dims) + " for config " + std::to_string(config.config_id));
    }
  }
}

WeightStore toy_init(const ModelConfig& config, std::uint64_t seed) {
  Pcg32 rng(seed, kToyStream);
  WeightStore store;
  for (ParamSpec& p : architecture(config)) {
    std::vector<float> data(element_count(p.dims), 0.0f);
    if (!p.is_bias) {
      for (float& v : data) v = -0.05f + 0.1f * rng.next_unit();
    }
    store.add(std::move(p.name), std::move(p.dims), std::move(data));
  }
  return store;
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t n = std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = ::crc32(crc, bytes.data() + pos, static_cast<uInt>(n));
    pos += n;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> serialize_weights(const WeightStore& store) {
  ByteWriter w;
  w.raw(std::string_view(kMagic, 4));
  w.u16(kVersion);
  w.u32(static_cast<std::uint32_t>(store.size()));
  for (const auto& e : store.entries()) {
    if (e.name.size() > 0xFFFF) throw ConfigError("weight name too long: " + e.name.substr(0, 32));
    if (e.dims.size() > 0xFF) throw ConfigError("weight rank too large: " + e.name);
    w.u16(static_cast<std::uint16_t>(e.name.size()));
    w.raw(e.name);
    w.u8(static_cast<std::uint8_t>(e.dims.size()));
    for (std::uint32_t d : e.dims) w.u32(d);
    for (float v : e.data) w.f32(v);
  }
  w.u32(crc32(w.bytes()));
  return w.take();
}

WeightStore parse_weights(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes);
  const auto magic = r.raw(4);
  if (!std::equal(magic.begin(), magic.end(), kMagic)) throw FormatError("bad magic, expected LBHW", 0);
  const std::uint16_t version = r.u16();
  if (version != kVersion) {
    throw FormatError("unsupported weight file version " + std::to_string(version), 4);
  }
  const std::uint32_t count = r.u32();
  WeightStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t entry_offset = r.offset();
    const std::uint16_t name_len = r.u16();
    const auto name_bytes = r.raw(name_len);
    std::string name(name_bytes.begin(), name_bytes.end());
    const std::uint8_t rank = r.u8();
    std::vector<std::uint32_t> dims(rank);
    for (auto& d : dims) d = r.u32();
    const std::size_t n = element_count(dims);
    if (n > r.remaining() / 4) {
      throw FormatError("truncated payload for '" + name + "'", r.offset());
    }
    std::vector<float> data(n);
    for (auto& v : data) v = r.f32();
    try {
      store.add(std::move(name), std::move(dims), std::move(data));
    } catch (const Error& e) {
      throw FormatError(e.what(), entry_offset);
    }
  }
  const std::size_t crc_offset = r.offset();
  const std::uint32_t stored = r.u32();
  if (r.remaining() != 0) throw FormatError("trailing bytes after CRC", r.offset());
  if (stored != crc32(bytes.first(crc_offset))) throw FormatError("CRC mismatch", crc_offset);
  return store;
}

void save_weights(const WeightStore& store, const std::filesystem::path& path) {
  const auto bytes = serialize_weights(store);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

WeightStore load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open weight file '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_weights(bytes);
}

}  // namespace lbhic
