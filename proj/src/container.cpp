#include "lbhic/container.hpp"

#include <fstream>
#include <iterator>

#include "lbhic/byte_io.hpp"
#include "lbhic/weights.hpp"

namespace lbhic {

namespace {

constexpr char kMagic[4] = {'L', 'B', 'H', 'C'};
constexpr std::uint16_t kVersion = 1;

}  // namespace

std::uint32_t ContainerMeta::block_count() const {
  if (block_size == 0) return 0;
  const std::uint32_t rows = (height + block_size - 1) / block_size;
  const std::uint32_t cols = (width + block_size - 1) / block_size;
  return rows * cols;
}

std::vector<std::uint8_t> write_container(const BitstreamContainer& c) {
  if (c.blocks.size() != c.meta.block_count() || c.meta.width == 0 || c.meta.height == 0) {
    throw ContainerError(ContainerErrc::inconsistent,
                         "container has " + std::to_string(c.blocks.size()) + " blocks, header implies " +
                             std::to_string(c.meta.block_count()));
  }
  ByteWriter w;
  w.raw(std::string_view(kMagic, 4));
  w.u16(kVersion);
  w.u32(c.meta.width);
  w.u32(c.meta.height);
  w.u16(c.meta.block_size);
  w.u8(c.meta.config_id);
  w.u8(c.meta.flags);
  w.u32(static_cast<std::uint32_t>(c.blocks.size()));
  for (const BlockStreams& b : c.blocks) {
    w.u32(static_cast<std::uint32_t>(b.hyper.size()));
    w.raw(b.hyper);
    w.u32(static_cast<std::uint32_t>(b.main.size()));
    w.raw(b.main);
  }
  w.u32(crc32(w.bytes()));
  return w.take();
}

BitstreamContainer read_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) {
    throw ContainerError(ContainerErrc::truncated,
                         "bitstream truncated: " + std::to_string(bytes.size()) + " bytes");
  }
  if (!std::equal(kMagic, kMagic + 4, bytes.begin())) {
    throw ContainerError(ContainerErrc::bad_magic, "not an LBHC bitstream (bad magic)");
  }
  if (bytes.size() < kContainerHeaderSize + 4) {
    throw ContainerError(ContainerErrc::truncated,
                         "bitstream truncated: " + std::to_string(bytes.size()) + " bytes");
  }
  BitstreamContainer c;
  try {
    ByteReader r(bytes);
    r.raw(4);
    const std::uint16_t version = r.u16();
    if (version != kVersion) {
      throw ContainerError(ContainerErrc::version_mismatch,
                           "unsupported bitstream version " + std::to_string(version));
    }
    c.meta.width = r.u32();
    c.meta.height = r.u32();
    c.meta.block_size = r.u16();
    c.meta.config_id = r.u8();
    c.meta.flags = r.u8();
    const std::uint32_t count = r.u32();
    if (count != c.meta.block_count()) {
      throw ContainerError(ContainerErrc::inconsistent,
                           "block count " + std::to_string(count) + " does not match " +
                               std::to_string(c.meta.width) + "x" + std::to_string(c.meta.height) +
                               " at block size " + std::to_string(c.meta.block_size));
    }
    c.blocks.resize(count);
    for (auto& b : c.blocks) {
      auto hyper = r.raw(r.u32());
      b.hyper.assign(hyper.begin(), hyper.end());
      auto main = r.raw(r.u32());
      b.main.assign(main.begin(), main.end());
    }
    const std::size_t crc_offset = r.offset();
    const std::uint32_t stored = r.u32();
    if (r.remaining() != 0) {
      throw ContainerError(ContainerErrc::inconsistent, "trailing bytes after CRC");
    }
    if (stored != crc32(bytes.first(crc_offset))) {
      throw ContainerError(ContainerErrc::crc_mismatch, "bitstream CRC mismatch");
    }
  } catch (const FormatError& e) {
    throw ContainerError(ContainerErrc::truncated, std::string("bitstream ") + e.what());
  }
  return c;
}

void save_container(const BitstreamContainer& container, const std::filesystem::path& path) {
  const auto bytes = write_container(container);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

BitstreamContainer load_container(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open bitstream '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return read_container(bytes);
}

}  // namespace lbhic
