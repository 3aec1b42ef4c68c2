#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace skinseg {

/// Raw 8-bit raster, row-major, interleaved channels (1 = gray, 3 = rgb).
struct PnmImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> data;
};

/// Reads a binary PPM (P6) or PGM (P5) file with maxval <= 255.
/// Throws DataError on unsupported magic, malformed header, or short payload.
PnmImage read_pnm(const std::filesystem::path& path);

/// Writes P6 when channels == 3, P5 when channels == 1.
void write_pnm(const std::filesystem::path& path, const PnmImage& img);

}  // namespace skinseg
