#pragma once

#include <filesystem>

#include "lbhic/blocking.hpp"

namespace lbhic {

/// Reads any PNG and converts it to 8-bit RGB (alpha dropped, 16-bit stripped,
/// gray and palette expanded).
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

}  // namespace lbhic
