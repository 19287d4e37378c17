#include "rdfs/img/gray_image.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace rdfs::img {

float clamp_pixel(double value) {
  if (std::isnan(value)) throw std::domain_error("clamp_pixel: NaN pixel value");
  return static_cast<float>(std::clamp(value, 0.0, 255.0));
}

GrayImage::GrayImage(std::size_t width, std::size_t height, float fill)
    : width_(width), height_(height), pixels_(width * height, clamp_pixel(fill)) {
  if (width == 0 || height == 0) throw std::invalid_argument("GrayImage: dimensions must be positive");
}

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<float> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width == 0 || height == 0) throw std::invalid_argument("GrayImage: dimensions must be positive");
  if (pixels_.size() != width * height) {
    throw std::invalid_argument("GrayImage: " + std::to_string(pixels_.size()) + " pixels for " +
                                std::to_string(width) + "x" + std::to_string(height));
  }
  for (std::size_t i = 0; i < pixels_.size(); ++i) {
    if (!(pixels_[i] >= 0.0f && pixels_[i] <= 255.0f)) {
      throw std::invalid_argument("GrayImage: pixel " + std::to_string(i) + " = " +
                                  std::to_string(pixels_[i]) + " outside [0,255]");
    }
  }
}

void GrayImage::set(std::size_t x, std::size_t y, float value) { pixels_[y * width_ + x] = clamp_pixel(value); }

GrayImage GrayImage::crop(std::size_t x, std::size_t y, std::size_t w, std::size_t h) const {
  if (x + w > width_ || y + h > height_) throw std::out_of_range("GrayImage::crop: window outside image");
  std::vector<float> out(w * h);
  for (std::size_t r = 0; r < h; ++r) {
    std::copy_n(pixels_.begin() + static_cast<std::ptrdiff_t>((y + r) * width_ + x), w,
                out.begin() + static_cast<std::ptrdiff_t>(r * w));
  }
  return GrayImage(w, h, std::move(out));
}

GrayImage GrayImage::quantized() const {
  GrayImage out = *this;
  for (float& p : out.pixels_) p = std::nearbyint(p);
  return out;
}

}  // namespace rdfs::img
