#pragma once

// Brute-force reference implementations, written independently of the
// library so they can serve as oracles.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

// input [B,C,H,W], kernels [F,C,kH,kW], zero padding.
inline std::vector<double> conv2d(const std::vector<double>& in, std::size_t b, std::size_t c, std::size_t h,
                                  std::size_t w, const std::vector<double>& k, std::size_t f, std::size_t kh,
                                  std::size_t kw, std::size_t stride, std::size_t pad, std::size_t& oh,
                                  std::size_t& ow) {
  oh = (h + 2 * pad - kh) / stride + 1;
  ow = (w + 2 * pad - kw) / stride + 1;
  std::vector<double> out(b * f * oh * ow, 0.0);
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t o = 0; o < f; ++o)
      for (std::size_t y = 0; y < oh; ++y)
        for (std::size_t x = 0; x < ow; ++x) {
          double acc = 0;
          for (std::size_t ch = 0; ch < c; ++ch)
            for (std::size_t i = 0; i < kh; ++i)
              for (std::size_t j = 0; j < kw; ++j) {
                const long yy = static_cast<long>(y * stride + i) - static_cast<long>(pad);
                const long xx = static_cast<long>(x * stride + j) - static_cast<long>(pad);
                if (yy < 0 || xx < 0 || yy >= static_cast<long>(h) || xx >= static_cast<long>(w)) continue;
                acc += in[((n * c + ch) * h + static_cast<std::size_t>(yy)) * w + static_cast<std::size_t>(xx)] *
                       k[((o * c + ch) * kh + i) * kw + j];
              }
          out[((n * f + o) * oh + y) * ow + x] = acc;
        }
  return out;
}

inline std::vector<double> maxpool2d(const std::vector<double>& in, std::size_t b, std::size_t c, std::size_t h,
                                     std::size_t w, std::size_t window, std::size_t stride, std::size_t& oh,
                                     std::size_t& ow) {
  oh = (h - window) / stride + 1;
  ow = (w - window) / stride + 1;
  std::vector<double> out(b * c * oh * ow);
  for (std::size_t n = 0; n < b * c; ++n)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        double m = -INFINITY;
        for (std::size_t i = 0; i < window; ++i)
          for (std::size_t j = 0; j < window; ++j) m = std::max(m, in[(n * h + y * stride + i) * w + x * stride + j]);
        out[(n * oh + y) * ow + x] = m;
      }
  return out;
}

// x [B,D], weights [D,M], bias [M].
inline std::vector<double> dense(const std::vector<double>& x, std::size_t b, std::size_t d,
                                 const std::vector<double>& wts, const std::vector<double>& bias, std::size_t m) {
  std::vector<double> out(b * m);
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t o = 0; o < m; ++o) {
      double acc = bias[o];
      for (std::size_t i = 0; i < d; ++i) acc += x[n * d + i] * wts[i * m + o];
      out[n * m + o] = acc;
    }
  return out;
}

// Mirror index without repeating the edge sample: -1 -> 1, n -> n-2.
inline std::size_t reflect101(long i, std::size_t n) {
  const long len = static_cast<long>(n);
  if (len == 1) return 0;
  while (i < 0 || i >= len) i = i < 0 ? -i : 2 * len - 2 - i;
  return static_cast<std::size_t>(i);
}

inline std::vector<float> median(const std::vector<float>& px, std::size_t w, std::size_t h, std::size_t window) {
  const long r = static_cast<long>(window / 2);
  std::vector<float> out(px.size());
  std::vector<float> buf;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      buf.clear();
      for (long dy = -r; dy <= r; ++dy)
        for (long dx = -r; dx <= r; ++dx)
          buf.push_back(px[reflect101(static_cast<long>(y) + dy, h) * w + reflect101(static_cast<long>(x) + dx, w)]);
      std::sort(buf.begin(), buf.end());
      out[y * w + x] = buf[buf.size() / 2];
    }
  return out;
}

// Euclidean distance from p to the hyperplane w.x + b = 0.
inline double hyperplane_distance(const std::vector<double>& w, double b, const std::vector<double>& p) {
  double dot = b, norm = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    dot += w[i] * p[i];
    norm += w[i] * w[i];
  }
  return std::abs(dot) / std::sqrt(norm);
}

}  // namespace oracle
