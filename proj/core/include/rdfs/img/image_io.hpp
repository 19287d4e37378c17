#pragma once

#include <filesystem>

#include "rdfs/img/gray_image.hpp"

namespace rdfs::img {

/// Reads binary (P5) or ASCII (P2) PGM with maxval <= 255.
GrayImage read_pgm(const std::filesystem::path& path);

/// Writes binary PGM; pixels are rounded to 8 bits.
void write_pgm(const std::filesystem::path& path, const GrayImage& image);

/// Reads an 8-bit PNG; colour images are converted with to_grayscale.
GrayImage read_png(const std::filesystem::path& path);

/// Dispatches on extension (.png, .pgm).
GrayImage read_image(const std::filesystem::path& path);

}  // namespace rdfs::img
