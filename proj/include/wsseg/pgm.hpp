#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "wsseg/grid.hpp"

namespace wsseg {

/// Raw grayscale raster as stored in a binary (P5) PGM file.
struct PgmImage {
    int width = 0;
    int height = 0;
    int maxval = 255;
    std::vector<std::uint16_t> pixels;  // row-major
};

/// Reads P5 with maxval 1..65535 (two bytes big-endian above 255). Comments in the header are skipped.
/// Throws IoError if the file cannot be opened and MalformedFile on any format violation.
PgmImage read_pgm(const std::filesystem::path& path);
/// Throws IoError.
void write_pgm(const std::filesystem::path& path, const PgmImage& pgm);

/// Intensities divided by maxval.
Image image_from_pgm(const PgmImage& pgm);
/// 1 where value >= maxval / 2.
Mask mask_from_pgm(const PgmImage& pgm);

/// Quantizes to maxval 255 with round-to-nearest.
PgmImage to_pgm(const Image& image);
PgmImage to_pgm(const SoftMask& mask);
/// 0 / 255.
PgmImage to_pgm(const Mask& mask);

}  // namespace wsseg
