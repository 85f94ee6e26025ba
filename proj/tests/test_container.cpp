#include <doctest.h>

#include <filesystem>

#include "lbhic/container.hpp"
#include "lbhic/weights.hpp"

using namespace lbhic;

namespace {

BitstreamContainer sample() {
  BitstreamContainer c;
  c.meta = {300, 200, 128, 1, kFlagPostprocess};
  for (std::uint32_t i = 0; i < c.meta.block_count(); ++i) {
    c.blocks.push_back({std::vector<std::uint8_t>(4 + i, static_cast<std::uint8_t>(i)),
                        std::vector<std::uint8_t>(10 + 2 * i, static_cast<std::uint8_t>(0xA0 + i))});
  }
  return c;
}

ContainerErrc kind_of(const std::vector<std::uint8_t>& bytes) {
  try {
    read_container(bytes);
  } catch (const ContainerError& e) {
    return e.kind();
  }
  FAIL("container accepted");
  return ContainerErrc::inconsistent;
}

void refresh_crc(std::vector<std::uint8_t>& bytes) {
  const std::uint32_t crc = crc32(std::span(bytes).first(bytes.size() - 4));
  for (int i = 0; i < 4; ++i) bytes[bytes.size() - 4 + i] = static_cast<std::uint8_t>(crc >> (8 * i));
}

}  // namespace

TEST_CASE("container layout and round trip") {
  const BitstreamContainer c = sample();
  CHECK(c.meta.block_count() == 6);
  const auto bytes = write_container(c);
  std::size_t payload = 0;
  for (const auto& b : c.blocks) payload += 8 + b.hyper.size() + b.main.size();
  CHECK(bytes.size() == kContainerHeaderSize + payload + 4);
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "LBHC");
  CHECK(bytes[4] == 1);
  CHECK(bytes[6] == (300 & 0xFF));
  CHECK(bytes[17] == kFlagPostprocess);
  CHECK(bytes[18] == 6);
  CHECK(read_container(bytes) == c);
  CHECK(write_container(read_container(bytes)) == bytes);
}

TEST_CASE("container errors are classified") {
  const auto good = write_container(sample());
  auto bad = good;
  bad[1] = 'X';
  CHECK(kind_of(bad) == ContainerErrc::bad_magic);
  bad = good;
  bad[4] = 9;
  CHECK(kind_of(bad) == ContainerErrc::version_mismatch);
  bad = good;
  bad[40] ^= 1;
  CHECK(kind_of(bad) == ContainerErrc::crc_mismatch);
  bad = good;
  bad.resize(30);
  CHECK(kind_of(bad) == ContainerErrc::truncated);
  bad = good;
  bad[18] = 5;  // block count disagrees with the geometry
  refresh_crc(bad);
  CHECK(kind_of(bad) == ContainerErrc::inconsistent);
  bad = good;
  bad[14] = 0;
  bad[15] = 0;  // block size 0
  refresh_crc(bad);
  CHECK(kind_of(bad) == ContainerErrc::inconsistent);
  CHECK(kind_of({}) == ContainerErrc::truncated);
}

TEST_CASE("container files") {
  const auto path = std::filesystem::temp_directory_path() / "lbhic_container_test.lbhc";
  save_container(sample(), path);
  CHECK(load_container(path) == sample());
  std::filesystem::remove(path);
  CHECK_THROWS(load_container(path));
}
