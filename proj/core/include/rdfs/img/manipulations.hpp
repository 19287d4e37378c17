#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>

#include "rdfs/img/gray_image.hpp"

namespace rdfs::img {

/// ITU-R BT.601 luma of interleaved 8-bit RGB, rounded to the nearest level.
GrayImage to_grayscale(std::span<const std::uint8_t> rgb, std::size_t width, std::size_t height);

/// Bilinear resampling to floor(factor * dim) with pixel-centre alignment and
/// edge-clamped taps. factor must lie in (0, 1].
GrayImage resize_bilinear(const GrayImage& image, double factor);

/// Median over an odd window, borders reflected without repeating the edge
/// pixel (d c b | a b c d | c b a).
GrayImage median_filter(const GrayImage& image, std::size_t window);

struct ClaheParams {
  std::size_t tiles_x = 8;
  std::size_t tiles_y = 8;
  /// Histogram clip as a multiple of the mean bin height; infinity disables clipping.
  double clip = 2.0;
};

/// Contrast-limited adaptive histogram equalization with bilinear blending of
/// the per-tile mappings. Tiles whose histogram holds a single value map
/// identically.
GrayImage clahe(const GrayImage& image, const ClaheParams& params = {});

/// 10*log10(255^2 / MSE); +infinity for identical images.
double psnr(const GrayImage& a, const GrayImage& b);

/// PSNR of two equally sized buffers whose dynamic range is `peak`.
double psnr(std::span<const float> a, std::span<const float> b, double peak);

inline constexpr double kInfinitePsnr = std::numeric_limits<double>::infinity();

}  // namespace rdfs::img
