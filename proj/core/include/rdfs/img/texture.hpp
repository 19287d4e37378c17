#pragma once

#include <cstdint>

#include "rdfs/img/gray_image.hpp"

namespace rdfs::img {

/// Procedural 8-bit test image: illumination gradient, multi-octave value
/// noise, a few soft-edged shapes and sensor-like grain. Integer valued and
/// fully determined by the seed.
GrayImage generate_texture(std::size_t width, std::size_t height, std::uint64_t seed);

}  // namespace rdfs::img
