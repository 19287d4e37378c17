#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rdfs::img {

/// Single-channel image with real-valued pixels in [0,255], row-major.
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t width, std::size_t height, float fill = 0.0f);
  /// Throws if the pixel count mismatches or any value lies outside [0,255].
  GrayImage(std::size_t width, std::size_t height, std::vector<float> pixels);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  float at(std::size_t x, std::size_t y) const { return pixels_[y * width_ + x]; }
  /// Assigns a pixel, clamping to [0,255].
  void set(std::size_t x, std::size_t y, float value);

  std::span<const float> pixels() const { return pixels_; }

  /// Copy of the w x h window at (x, y).
  GrayImage crop(std::size_t x, std::size_t y, std::size_t w, std::size_t h) const;

  /// Rounds every pixel to the nearest integer, as when saving an 8-bit file.
  GrayImage quantized() const;

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<float> pixels_;
};

float clamp_pixel(double value);

}  // namespace rdfs::img
