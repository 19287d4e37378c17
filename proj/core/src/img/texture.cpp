#include "rdfs/img/texture.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rdfs/common/rng.hpp"

namespace rdfs::img {

namespace {

// Bilinearly upsampled lattice of uniform noise with the given cell size.
void add_value_noise(std::vector<double>& field, std::size_t w, std::size_t h, double cell, double amplitude,
                     SplitMix64& rng) {
  const auto gw = static_cast<std::size_t>(std::ceil(static_cast<double>(w) / cell)) + 2;
  const auto gh = static_cast<std::size_t>(std::ceil(static_cast<double>(h) / cell)) + 2;
  std::vector<double> lattice(gw * gh);
  for (double& v : lattice) v = rng.uniform() * 2.0 - 1.0;
  for (std::size_t y = 0; y < h; ++y) {
    const double fy = static_cast<double>(y) / cell;
    const auto y0 = static_cast<std::size_t>(fy);
    const double ty = fy - static_cast<double>(y0);
    const double sy = ty * ty * (3 - 2 * ty);
    for (std::size_t x = 0; x < w; ++x) {
      const double fx = static_cast<double>(x) / cell;
      const auto x0 = static_cast<std::size_t>(fx);
      const double tx = fx - static_cast<double>(x0);
      const double sx = tx * tx * (3 - 2 * tx);
      const double a = lattice[y0 * gw + x0], b = lattice[y0 * gw + x0 + 1];
      const double c = lattice[(y0 + 1) * gw + x0], d = lattice[(y0 + 1) * gw + x0 + 1];
      field[y * w + x] += amplitude * ((1 - sy) * ((1 - sx) * a + sx * b) + sy * ((1 - sx) * c + sx * d));
    }
  }
}

}  // namespace

GrayImage generate_texture(std::size_t width, std::size_t height, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<double> field(width * height, 0.0);

  const double base = 60.0 + 130.0 * rng.uniform();
  const double gx = (rng.uniform() - 0.5) * 80.0 / static_cast<double>(width);
  const double gy = (rng.uniform() - 0.5) * 80.0 / static_cast<double>(height);
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      field[y * width + x] = base + gx * static_cast<double>(x) + gy * static_cast<double>(y);

  for (double cell : {48.0, 20.0, 8.0, 3.0}) {
    add_value_noise(field, width, height, cell, (0.3 + rng.uniform()) * (cell > 10 ? 30.0 : 12.0), rng);
  }

  const auto shapes = 2 + rng.bounded(5);
  for (std::uint64_t s = 0; s < shapes; ++s) {
    const double cx = rng.uniform() * static_cast<double>(width);
    const double cy = rng.uniform() * static_cast<double>(height);
    const double rx = 6.0 + rng.uniform() * static_cast<double>(width) / 4.0;
    const double ry = 6.0 + rng.uniform() * static_cast<double>(height) / 4.0;
    const double delta = (rng.uniform() - 0.5) * 120.0;
    const bool ellipse = rng.uniform() < 0.5;
    const double softness = 0.5 + 2.0 * rng.uniform();
    for (std::size_t y = 0; y < height; ++y) {
      for (std::size_t x = 0; x < width; ++x) {
        const double dx = (static_cast<double>(x) - cx) / rx;
        const double dy = (static_cast<double>(y) - cy) / ry;
        // Signed distance in pixels (approximate), negative inside.
        const double d = ellipse ? (std::sqrt(dx * dx + dy * dy) - 1.0) * std::min(rx, ry)
                                 : std::max(std::abs(dx) - 1.0, std::abs(dy) - 1.0) * std::min(rx, ry);
        const double alpha = 1.0 / (1.0 + std::exp(d / softness));
        field[y * width + x] += alpha * delta;
      }
    }
  }

  const double grain = 1.0 + 5.0 * rng.uniform();
  std::vector<float> pixels(width * height);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = static_cast<float>(std::clamp(std::nearbyint(field[i] + grain * rng.normal()), 0.0, 255.0));
  }
  return GrayImage(width, height, std::move(pixels));
}

}  // namespace rdfs::img
