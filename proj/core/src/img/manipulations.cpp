#include "rdfs/img/manipulations.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdfs::img {

GrayImage to_grayscale(std::span<const std::uint8_t> rgb, std::size_t width, std::size_t height) {
  if (rgb.size() != width * height * 3) {
    throw std::invalid_argument("to_grayscale: expected " + std::to_string(width * height * 3) +
                                " RGB bytes, got " + std::to_string(rgb.size()));
  }
  std::vector<float> out(width * height);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double luma = 0.299 * rgb[3 * i] + 0.587 * rgb[3 * i + 1] + 0.114 * rgb[3 * i + 2];
    out[i] = clamp_pixel(std::nearbyint(luma));
  }
  return GrayImage(width, height, std::move(out));
}

GrayImage resize_bilinear(const GrayImage& image, double factor) {
  if (!(factor > 0.0 && factor <= 1.0)) {
    throw std::invalid_argument("resize_bilinear: factor must be in (0,1], got " + std::to_string(factor));
  }
  const auto out_w = static_cast<std::size_t>(std::floor(factor * static_cast<double>(image.width())));
  const auto out_h = static_cast<std::size_t>(std::floor(factor * static_cast<double>(image.height())));
  if (out_w < 1 || out_h < 1) {
    throw std::invalid_argument("resize_bilinear: output size " + std::to_string(out_w) + "x" +
                                std::to_string(out_h) + " is degenerate");
  }
  const double sx = static_cast<double>(image.width()) / static_cast<double>(out_w);
  const double sy = static_cast<double>(image.height()) / static_cast<double>(out_h);
  const double max_x = static_cast<double>(image.width() - 1);
  const double max_y = static_cast<double>(image.height() - 1);
  std::vector<float> out(out_w * out_h);
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    const double fy = std::clamp((static_cast<double>(oy) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(std::floor(fy));
    const std::size_t y1 = std::min(y0 + 1, image.height() - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const double fx = std::clamp((static_cast<double>(ox) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(std::floor(fx));
      const std::size_t x1 = std::min(x0 + 1, image.width() - 1);
      const double wx = fx - static_cast<double>(x0);
      const double top = (1.0 - wx) * image.at(x0, y0) + wx * image.at(x1, y0);
      const double bottom = (1.0 - wx) * image.at(x0, y1) + wx * image.at(x1, y1);
      out[oy * out_w + ox] = clamp_pixel((1.0 - wy) * top + wy * bottom);
    }
  }
  return GrayImage(out_w, out_h, std::move(out));
}

namespace {

std::size_t reflect101(std::ptrdiff_t i, std::size_t n) {
  const auto last = static_cast<std::ptrdiff_t>(n) - 1;
  if (i < 0) i = -i;
  if (i > last) i = 2 * last - i;
  return static_cast<std::size_t>(i);
}

}  // namespace

GrayImage median_filter(const GrayImage& image, std::size_t window) {
  if (window < 3 || window % 2 == 0) {
    throw std::invalid_argument("median_filter: window must be odd and >= 3, got " + std::to_string(window));
  }
  const std::size_t min_dim = std::min(image.width(), image.height());
  if (window > 2 * min_dim || (window / 2) >= min_dim) {
    throw std::invalid_argument("median_filter: window " + std::to_string(window) + " too large for " +
                                std::to_string(image.width()) + "x" + std::to_string(image.height()));
  }
  const auto r = static_cast<std::ptrdiff_t>(window / 2);
  const std::size_t w = image.width(), h = image.height();
  std::vector<std::size_t> col_index(w + 2 * window), row_index(h + 2 * window);
  for (std::ptrdiff_t i = -r; i < static_cast<std::ptrdiff_t>(w) + r; ++i) col_index[i + r] = reflect101(i, w);
  for (std::ptrdiff_t i = -r; i < static_cast<std::ptrdiff_t>(h) + r; ++i) row_index[i + r] = reflect101(i, h);

  const auto px = image.pixels();
  std::vector<float> values(window * window);
  std::vector<float> out(w * h);
  const std::size_t mid = values.size() / 2;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      std::size_t n = 0;
      for (std::size_t dy = 0; dy < window; ++dy) {
        const std::size_t row = row_index[y + dy] * w;
        for (std::size_t dx = 0; dx < window; ++dx) values[n++] = px[row + col_index[x + dx]];
      }
      std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
      out[y * w + x] = values[mid];
    }
  }
  return GrayImage(w, h, std::move(out));
}

GrayImage clahe(const GrayImage& image, const ClaheParams& params) {
  const std::size_t w = image.width(), h = image.height();
  const std::size_t tx = params.tiles_x, ty = params.tiles_y;
  if (tx == 0 || ty == 0 || tx > w || ty > h) {
    throw std::invalid_argument("clahe: tile grid " + std::to_string(tx) + "x" + std::to_string(ty) +
                                " needs at least one pixel per tile on " + std::to_string(w) + "x" +
                                std::to_string(h));
  }
  if (!(params.clip >= 1.0)) throw std::invalid_argument("clahe: clip must be >= 1");

  auto tile_begin_x = [&](std::size_t i) { return i * w / tx; };
  auto tile_begin_y = [&](std::size_t j) { return j * h / ty; };
  auto level = [](float v) { return static_cast<std::size_t>(std::clamp(std::lround(v), 0L, 255L)); };

  // Per-tile lookup tables over the 256 integer levels.
  std::vector<std::array<double, 256>> luts(tx * ty);
  for (std::size_t j = 0; j < ty; ++j) {
    for (std::size_t i = 0; i < tx; ++i) {
      std::array<double, 256> hist{};
      const std::size_t x0 = tile_begin_x(i), x1 = tile_begin_x(i + 1);
      const std::size_t y0 = tile_begin_y(j), y1 = tile_begin_y(j + 1);
      for (std::size_t y = y0; y < y1; ++y)
        for (std::size_t x = x0; x < x1; ++x) hist[level(image.at(x, y))] += 1.0;
      const double total = static_cast<double>((x1 - x0) * (y1 - y0));
      auto& lut = luts[j * tx + i];
      const auto occupied = std::count_if(hist.begin(), hist.end(), [](double c) { return c > 0; });
      if (occupied <= 1) {
        for (std::size_t v = 0; v < 256; ++v) lut[v] = static_cast<double>(v);
        continue;
      }
      if (std::isfinite(params.clip)) {
        const double limit = params.clip * total / 256.0;
        double excess = 0;
        for (double& c : hist) {
          if (c > limit) {
            excess += c - limit;
            c = limit;
          }
        }
        const double share = excess / 256.0;
        for (double& c : hist) c += share;
      }
      double cdf = 0;
      for (std::size_t v = 0; v < 256; ++v) {
        cdf += hist[v];
        lut[v] = 255.0 * cdf / total;
      }
    }
  }

  std::vector<float> out(w * h);
  const double tile_w = static_cast<double>(w) / static_cast<double>(tx);
  const double tile_h = static_cast<double>(h) / static_cast<double>(ty);
  for (std::size_t y = 0; y < h; ++y) {
    const double gy = (static_cast<double>(y) + 0.5) / tile_h - 0.5;
    const auto j0 = static_cast<std::size_t>(std::clamp(std::floor(gy), 0.0, static_cast<double>(ty - 1)));
    const std::size_t j1 = std::min(j0 + 1, ty - 1);
    const double wy = std::clamp(gy - static_cast<double>(j0), 0.0, 1.0);
    for (std::size_t x = 0; x < w; ++x) {
      const double gx = (static_cast<double>(x) + 0.5) / tile_w - 0.5;
      const auto i0 = static_cast<std::size_t>(std::clamp(std::floor(gx), 0.0, static_cast<double>(tx - 1)));
      const std::size_t i1 = std::min(i0 + 1, tx - 1);
      const double wx = std::clamp(gx - static_cast<double>(i0), 0.0, 1.0);
      const std::size_t v = level(image.at(x, y));
      const double top = (1 - wx) * luts[j0 * tx + i0][v] + wx * luts[j0 * tx + i1][v];
      const double bottom = (1 - wx) * luts[j1 * tx + i0][v] + wx * luts[j1 * tx + i1][v];
      out[y * w + x] = clamp_pixel((1 - wy) * top + wy * bottom);
    }
  }
  return GrayImage(w, h, std::move(out));
}

double psnr(std::span<const float> a, std::span<const float> b, double peak) {
  if (a.size() != b.size() || a.empty()) {
    throw std::invalid_argument("psnr: size mismatch " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
  double mse = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    mse += d * d;
  }
  mse /= static_cast<double>(a.size());
  if (mse == 0.0) return kInfinitePsnr;
  return 10.0 * std::log10(peak * peak / mse);
}

double psnr(const GrayImage& a, const GrayImage& b) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw std::invalid_argument("psnr: dimension mismatch " + std::to_string(a.width()) + "x" +
                                std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                                std::to_string(b.height()));
  }
  return psnr(a.pixels(), b.pixels(), 255.0);
}

}  // namespace rdfs::img
