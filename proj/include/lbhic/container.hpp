#pragma once

// .lbhc bitstream layout, little-endian:
//
//   offset  size  field
//   0       4     magic "LBHC"
//   4       2     version (1)
//   6       4     width
//   10      4     height
//   14      2     block size
//   16      1     config id (0: N=128/M=192, 1: N=256/M=448)
//   17      1     flags (bit 0: apply boundary postprocessing at decode)
//   18      4     block count = ceil(H/B) * ceil(W/B)
//   22      ...   per block, raster order: u32 hyper length, hyper bytes,
//                 u32 main length, main bytes
//   end-4   4     CRC-32 of every preceding byte

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "lbhic/errors.hpp"

namespace lbhic {

inline constexpr std::size_t kContainerHeaderSize = 22;
inline constexpr std::uint8_t kFlagPostprocess = 0x01;

struct ContainerMeta {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::uint16_t block_size = 0;
  std::uint8_t config_id = 0;
  std::uint8_t flags = 0;

  std::uint32_t block_count() const;
  friend bool operator==(const ContainerMeta&, const ContainerMeta&) = default;
};

struct BlockStreams {
  std::vector<std::uint8_t> hyper;
  std::vector<std::uint8_t> main;
  friend bool operator==(const BlockStreams&, const BlockStreams&) = default;
};

struct BitstreamContainer {
  ContainerMeta meta;
  std::vector<BlockStreams> blocks;  // raster order
  friend bool operator==(const BitstreamContainer&, const BitstreamContainer&) = default;
};

enum class ContainerErrc { bad_magic, version_mismatch, crc_mismatch, truncated, inconsistent };

class ContainerError : public Error {
 public:
  ContainerError(ContainerErrc kind, const std::string& what) : Error(what), kind_(kind) {}
  ContainerErrc kind() const { return kind_; }

 private:
  ContainerErrc kind_;
};

std::vector<std::uint8_t> write_container(const BitstreamContainer& container);
BitstreamContainer read_container(std::span<const std::uint8_t> bytes);

void save_container(const BitstreamContainer& container, const std::filesystem::path& path);
BitstreamContainer load_container(const std::filesystem::path& path);

}  // namespace lbhic
