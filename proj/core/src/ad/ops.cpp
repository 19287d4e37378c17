#include "rdfs/ad/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace rdfs::ad {

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "," : "") << shape[i];
  out << ']';
  return out.str();
}

namespace {

void require_rank(const Shape& shape, std::size_t rank, const char* op, const char* what) {
  if (shape.size() != rank) {
    std::ostringstream msg;
    msg << op << ": " << what << " must have rank " << rank << ", got " << shape_string(shape);
    throw std::invalid_argument(msg.str());
  }
}

// Output positions o in [lo, hi) whose input coordinate o*stride + tap - pad is in [0, extent).
struct Span {
  std::ptrdiff_t lo;
  std::ptrdiff_t hi;
};

Span valid_outputs(std::ptrdiff_t extent, std::ptrdiff_t out_extent, std::ptrdiff_t tap,
                   std::ptrdiff_t pad, std::ptrdiff_t stride) {
  const std::ptrdiff_t shift = pad - tap;
  std::ptrdiff_t lo = 0;
  if (shift > 0) lo = (shift + stride - 1) / stride;
  const std::ptrdiff_t top = extent - 1 + shift;
  std::ptrdiff_t hi = top < 0 ? 0 : top / stride + 1;
  hi = std::min(hi, out_extent);
  return {lo, std::max(lo, hi)};
}

}  // namespace

template <typename Real>
Tensor<Real> conv2d(Tape<Real>& tape, const Tensor<Real>& input, const Tensor<Real>& kernels,
                    std::size_t stride, std::size_t pad) {
  require_rank(input.shape(), 4, "conv2d", "input");
  require_rank(kernels.shape(), 4, "conv2d", "kernels");
  if (stride == 0) throw std::invalid_argument("conv2d: stride must be positive");
  const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t F = kernels.dim(0), KH = kernels.dim(2), KW = kernels.dim(3);
  if (kernels.dim(1) != C) {
    std::ostringstream msg;
    msg << "conv2d: input has " << C << " channels " << shape_string(input.shape())
        << " but kernels expect " << kernels.dim(1) << " " << shape_string(kernels.shape());
    throw std::invalid_argument(msg.str());
  }
  if (KH > H + 2 * pad || KW > W + 2 * pad) {
    std::ostringstream msg;
    msg << "conv2d: kernel " << KH << "x" << KW << " exceeds padded input " << (H + 2 * pad) << "x"
        << (W + 2 * pad);
    throw std::invalid_argument(msg.str());
  }
  const std::size_t OH = (H + 2 * pad - KH) / stride + 1;
  const std::size_t OW = (W + 2 * pad - KW) / stride + 1;
  const bool track = tape.tracks(input, kernels);
  Tensor<Real> out({B, F, OH, OW}, track);

  const auto s = static_cast<std::ptrdiff_t>(stride);
  const auto p = static_cast<std::ptrdiff_t>(pad);
  std::vector<Span> rows(KH), cols(KW);
  for (std::size_t kh = 0; kh < KH; ++kh)
    rows[kh] = valid_outputs(static_cast<std::ptrdiff_t>(H), static_cast<std::ptrdiff_t>(OH),
                             static_cast<std::ptrdiff_t>(kh), p, s);
  for (std::size_t kw = 0; kw < KW; ++kw)
    cols[kw] = valid_outputs(static_cast<std::ptrdiff_t>(W), static_cast<std::ptrdiff_t>(OW),
                             static_cast<std::ptrdiff_t>(kw), p, s);

  const Real* x = input.raw();
  const Real* k = kernels.raw();
  Real* y = out.raw();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t f = 0; f < F; ++f) {
      Real* yo = y + (b * F + f) * OH * OW;
      for (std::size_t c = 0; c < C; ++c) {
        const Real* xi = x + (b * C + c) * H * W;
        const Real* kk = k + (f * C + c) * KH * KW;
        for (std::size_t kh = 0; kh < KH; ++kh) {
          for (std::size_t kw = 0; kw < KW; ++kw) {
            const Real wv = kk[kh * KW + kw];
            const auto [clo, chi] = cols[kw];
            for (std::ptrdiff_t oh = rows[kh].lo; oh < rows[kh].hi; ++oh) {
              const std::ptrdiff_t ih = oh * s + static_cast<std::ptrdiff_t>(kh) - p;
              const Real* xr = xi + ih * static_cast<std::ptrdiff_t>(W) + static_cast<std::ptrdiff_t>(kw) - p;
              Real* yr = yo + oh * static_cast<std::ptrdiff_t>(OW);
              if (s == 1) {
                for (std::ptrdiff_t ow = clo; ow < chi; ++ow) yr[ow] += wv * xr[ow];
              } else {
                for (std::ptrdiff_t ow = clo; ow < chi; ++ow) yr[ow] += wv * xr[ow * s];
              }
            }
          }
        }
      }
    }
  }
  tape.check_finite(out, "conv2d");

  if (track) {
    tape.record(out, [input = input, kernels = kernels, out, rows, cols, B, C, H, W, F, KH, KW, OH, OW, s, p]() mutable {
      const Real* gy = out.grad().data();
      const Real* xv = input.raw();
      const Real* kv = kernels.raw();
      Real* gx = input.requires_grad() ? input.mutable_grad().data() : nullptr;
      Real* gk = kernels.requires_grad() ? kernels.mutable_grad().data() : nullptr;
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t f = 0; f < F; ++f) {
          const Real* go = gy + (b * F + f) * OH * OW;
          for (std::size_t c = 0; c < C; ++c) {
            const Real* xi = xv + (b * C + c) * H * W;
            Real* gxi = gx ? gx + (b * C + c) * H * W : nullptr;
            const Real* kk = kv + (f * C + c) * KH * KW;
            Real* gkk = gk ? gk + (f * C + c) * KH * KW : nullptr;
            for (std::size_t kh = 0; kh < KH; ++kh) {
              for (std::size_t kw = 0; kw < KW; ++kw) {
                const Real wv = kk[kh * KW + kw];
                const auto [clo, chi] = cols[kw];
                Real acc = 0;
                for (std::ptrdiff_t oh = rows[kh].lo; oh < rows[kh].hi; ++oh) {
                  const std::ptrdiff_t offset = (oh * s + static_cast<std::ptrdiff_t>(kh) - p) *
                                                    static_cast<std::ptrdiff_t>(W) +
                                                static_cast<std::ptrdiff_t>(kw) - p;
                  const Real* gr = go + oh * static_cast<std::ptrdiff_t>(OW);
                  if (gkk) {
                    const Real* xr = xi + offset;
                    for (std::ptrdiff_t ow = clo; ow < chi; ++ow) acc += gr[ow] * xr[ow * s];
                  }
                  if (gxi) {
                    Real* gr_in = gxi + offset;
                    if (s == 1) {
                      for (std::ptrdiff_t ow = clo; ow < chi; ++ow) gr_in[ow] += wv * gr[ow];
                    } else {
                      for (std::ptrdiff_t ow = clo; ow < chi; ++ow) gr_in[ow * s] += wv * gr[ow];
                    }
                  }
                }
                if (gkk) gkk[kh * KW + kw] += acc;
              }
            }
          }
        }
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> maxpool2d(Tape<Real>& tape, const Tensor<Real>& input, std::size_t window,
                       std::size_t stride) {
  require_rank(input.shape(), 4, "maxpool2d", "input");
  if (window == 0 || stride == 0) throw std::invalid_argument("maxpool2d: window and stride must be positive");
  const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  if (window > H || window > W) {
    std::ostringstream msg;
    msg << "maxpool2d: window " << window << " larger than spatial extent " << H << "x" << W;
    throw std::invalid_argument(msg.str());
  }
  const std::size_t OH = (H - window) / stride + 1;
  const std::size_t OW = (W - window) / stride + 1;
  const bool track = tape.tracks(input);
  Tensor<Real> out({B, C, OH, OW}, track);
  std::vector<std::size_t> argmax(track ? out.size() : 0);
  const Real* x = input.raw();
  Real* y = out.raw();
  for (std::size_t plane = 0; plane < B * C; ++plane) {
    const Real* xp = x + plane * H * W;
    for (std::size_t oh = 0; oh < OH; ++oh) {
      for (std::size_t ow = 0; ow < OW; ++ow) {
        std::size_t best = (oh * stride) * W + ow * stride;
        Real best_value = xp[best];
        for (std::size_t dh = 0; dh < window; ++dh) {
          const std::size_t row = (oh * stride + dh) * W + ow * stride;
          for (std::size_t dw = 0; dw < window; ++dw) {
            if (xp[row + dw] > best_value) {
              best_value = xp[row + dw];
              best = row + dw;
            }
          }
        }
        const std::size_t o = plane * OH * OW + oh * OW + ow;
        y[o] = best_value;
        if (track) argmax[o] = plane * H * W + best;
      }
    }
  }
  tape.check_finite(out, "maxpool2d");
  if (track) {
    tape.record(out, [input = input, out, argmax = std::move(argmax)]() mutable {
      const auto gy = out.grad();
      auto gx = input.mutable_grad();
      for (std::size_t o = 0; o < gy.size(); ++o) gx[argmax[o]] += gy[o];
    });
  }
  return out;
}

namespace {

template <typename Real>
void check_batchnorm_args(const Tensor<Real>& input, const Tensor<Real>& gamma, const Tensor<Real>& beta,
                          std::size_t stats_channels) {
  require_rank(input.shape(), 4, "batchnorm", "input");
  const std::size_t C = input.dim(1);
  if (gamma.size() != C || beta.size() != C || stats_channels != C) {
    std::ostringstream msg;
    msg << "batchnorm: input " << shape_string(input.shape()) << " has " << C
        << " channels but gamma/beta/stats have " << gamma.size() << "/" << beta.size() << "/"
        << stats_channels;
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

template <typename Real>
Tensor<Real> batchnorm_train(Tape<Real>& tape, const Tensor<Real>& input, const Tensor<Real>& gamma,
                             const Tensor<Real>& beta, BatchNormState<Real>& state) {
  check_batchnorm_args(input, gamma, beta, state.running_mean.size());
  const std::size_t B = input.dim(0), C = input.dim(1), HW = input.dim(2) * input.dim(3);
  const std::size_t n = B * HW;
  if (n < 2) throw std::invalid_argument("batchnorm: train mode needs at least 2 values per channel");
  const bool track = tape.tracks(input, gamma, beta);
  Tensor<Real> out(input.shape(), track);
  std::vector<Real> xhat(track ? input.size() : 0);
  std::vector<Real> inv_std(C);
  const Real* x = input.raw();
  Real* y = out.raw();
  const Real eps = static_cast<Real>(kBatchNormEpsilon);
  for (std::size_t c = 0; c < C; ++c) {
    double mean = 0;
    for (std::size_t b = 0; b < B; ++b) {
      const Real* xc = x + (b * C + c) * HW;
      for (std::size_t i = 0; i < HW; ++i) mean += xc[i];
    }
    mean /= static_cast<double>(n);
    double var = 0;
    for (std::size_t b = 0; b < B; ++b) {
      const Real* xc = x + (b * C + c) * HW;
      for (std::size_t i = 0; i < HW; ++i) {
        const double d = xc[i] - mean;
        var += d * d;
      }
    }
    const double biased = var / static_cast<double>(n);
    const double unbiased = var / static_cast<double>(n - 1);
    const Real m = static_cast<Real>(mean);
    const Real istd = static_cast<Real>(1.0 / std::sqrt(biased + static_cast<double>(eps)));
    inv_std[c] = istd;
    const Real g = gamma.data()[c], bt = beta.data()[c];
    for (std::size_t b = 0; b < B; ++b) {
      const std::size_t base = (b * C + c) * HW;
      for (std::size_t i = 0; i < HW; ++i) {
        const Real xh = (x[base + i] - m) * istd;
        if (track) xhat[base + i] = xh;
        y[base + i] = g * xh + bt;
      }
    }
    state.running_mean[c] = (Real(1) - state.momentum) * state.running_mean[c] + state.momentum * m;
    state.running_var[c] =
        (Real(1) - state.momentum) * state.running_var[c] + state.momentum * static_cast<Real>(unbiased);
  }
  tape.check_finite(out, "batchnorm");
  if (track) {
    tape.record(out, [input = input, gamma = gamma, beta = beta, out, xhat = std::move(xhat), inv_std = std::move(inv_std), B, C,
                      HW, n]() mutable {
      const auto gy = out.grad();
      Real* gx = input.requires_grad() ? input.mutable_grad().data() : nullptr;
      Real* gg = gamma.requires_grad() ? gamma.mutable_grad().data() : nullptr;
      Real* gb = beta.requires_grad() ? beta.mutable_grad().data() : nullptr;
      for (std::size_t c = 0; c < C; ++c) {
        double sum_dy = 0, sum_dy_xhat = 0;
        for (std::size_t b = 0; b < B; ++b) {
          const std::size_t base = (b * C + c) * HW;
          for (std::size_t i = 0; i < HW; ++i) {
            sum_dy += gy[base + i];
            sum_dy_xhat += gy[base + i] * xhat[base + i];
          }
        }
        if (gg) gg[c] += static_cast<Real>(sum_dy_xhat);
        if (gb) gb[c] += static_cast<Real>(sum_dy);
        if (gx) {
          const Real g = gamma.data()[c];
          const double scale = static_cast<double>(g) * inv_std[c] / static_cast<double>(n);
          for (std::size_t b = 0; b < B; ++b) {
            const std::size_t base = (b * C + c) * HW;
            for (std::size_t i = 0; i < HW; ++i) {
              const double v = static_cast<double>(n) * gy[base + i] - sum_dy - xhat[base + i] * sum_dy_xhat;
              gx[base + i] += static_cast<Real>(scale * v);
            }
          }
        }
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> batchnorm_infer(Tape<Real>& tape, const Tensor<Real>& input, const Tensor<Real>& gamma,
                             const Tensor<Real>& beta, const BatchNormState<Real>& state) {
  check_batchnorm_args(input, gamma, beta, state.running_mean.size());
  const std::size_t B = input.dim(0), C = input.dim(1), HW = input.dim(2) * input.dim(3);
  const bool track = tape.tracks(input, gamma, beta);
  Tensor<Real> out(input.shape(), track);
  std::vector<Real> denom(C);
  const Real eps = static_cast<Real>(kBatchNormEpsilon);
  for (std::size_t c = 0; c < C; ++c) denom[c] = std::sqrt(state.running_var[c] + eps);
  const Real* x = input.raw();
  Real* y = out.raw();
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t base = (b * C + c) * HW;
      const Real g = gamma.data()[c], bt = beta.data()[c], mu = state.running_mean[c], d = denom[c];
      for (std::size_t i = 0; i < HW; ++i) y[base + i] = g * (x[base + i] - mu) / d + bt;
    }
  }
  tape.check_finite(out, "batchnorm");
  if (track) {
    std::vector<Real> mean = state.running_mean;
    tape.record(out, [input = input, gamma = gamma, beta = beta, out, denom = std::move(denom), mean = std::move(mean), B, C,
                      HW]() mutable {
      const auto gy = out.grad();
      const Real* x = input.raw();
      Real* gx = input.requires_grad() ? input.mutable_grad().data() : nullptr;
      Real* gg = gamma.requires_grad() ? gamma.mutable_grad().data() : nullptr;
      Real* gb = beta.requires_grad() ? beta.mutable_grad().data() : nullptr;
      for (std::size_t c = 0; c < C; ++c) {
        const Real g = gamma.data()[c];
        double sum_dy = 0, sum_dy_xhat = 0;
        for (std::size_t b = 0; b < B; ++b) {
          const std::size_t base = (b * C + c) * HW;
          for (std::size_t i = 0; i < HW; ++i) {
            sum_dy += gy[base + i];
            sum_dy_xhat += gy[base + i] * ((x[base + i] - mean[c]) / denom[c]);
            if (gx) gx[base + i] += gy[base + i] * g / denom[c];
          }
        }
        if (gg) gg[c] += static_cast<Real>(sum_dy_xhat);
        if (gb) gb[c] += static_cast<Real>(sum_dy);
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> dense(Tape<Real>& tape, const Tensor<Real>& input, const Tensor<Real>& weights,
                   const Tensor<Real>& bias) {
  require_rank(input.shape(), 2, "dense", "input");
  require_rank(weights.shape(), 2, "dense", "weights");
  const std::size_t B = input.dim(0), D = input.dim(1), M = weights.dim(1);
  if (weights.dim(0) != D || bias.size() != M) {
    std::ostringstream msg;
    msg << "dense: input " << shape_string(input.shape()) << ", weights " << shape_string(weights.shape())
        << ", bias " << shape_string(bias.shape()) << " are incompatible";
    throw std::invalid_argument(msg.str());
  }
  const bool track = tape.tracks(input, weights, bias);
  Tensor<Real> out({B, M}, track);
  const Real* x = input.raw();
  const Real* w = weights.raw();
  const Real* bv = bias.raw();
  Real* y = out.raw();
  for (std::size_t b = 0; b < B; ++b) {
    Real* yr = y + b * M;
    std::copy(bv, bv + M, yr);
    const Real* xr = x + b * D;
    for (std::size_t d = 0; d < D; ++d) {
      const Real xv = xr[d];
      if (xv == Real(0)) continue;
      const Real* wr = w + d * M;
      for (std::size_t m = 0; m < M; ++m) yr[m] += xv * wr[m];
    }
  }
  tape.check_finite(out, "dense");
  if (track) {
    tape.record(out, [input = input, weights = weights, bias = bias, out, B, D, M]() mutable {
      const Real* gy = out.grad().data();
      const Real* x = input.raw();
      const Real* w = weights.raw();
      Real* gx = input.requires_grad() ? input.mutable_grad().data() : nullptr;
      Real* gw = weights.requires_grad() ? weights.mutable_grad().data() : nullptr;
      Real* gb = bias.requires_grad() ? bias.mutable_grad().data() : nullptr;
      for (std::size_t b = 0; b < B; ++b) {
        const Real* gr = gy + b * M;
        const Real* xr = x + b * D;
        if (gb) {
          for (std::size_t m = 0; m < M; ++m) gb[m] += gr[m];
        }
        for (std::size_t d = 0; d < D; ++d) {
          const Real* wr = w + d * M;
          if (gx) {
            Real acc = 0;
            for (std::size_t m = 0; m < M; ++m) acc += gr[m] * wr[m];
            gx[b * D + d] += acc;
          }
          if (gw && xr[d] != Real(0)) {
            Real* gwr = gw + d * M;
            const Real xv = xr[d];
            for (std::size_t m = 0; m < M; ++m) gwr[m] += xv * gr[m];
          }
        }
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> relu(Tape<Real>& tape, const Tensor<Real>& input) {
  const bool track = tape.tracks(input);
  Tensor<Real> out(input.shape(), track);
  const auto x = input.data();
  auto y = out.data();
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > Real(0) ? x[i] : Real(0);
  tape.check_finite(out, "relu");
  if (track) {
    tape.record(out, [input = input, out]() mutable {
      const auto gy = out.grad();
      const auto x = input.data();
      auto gx = input.mutable_grad();
      for (std::size_t i = 0; i < gy.size(); ++i) {
        if (x[i] > Real(0)) gx[i] += gy[i];
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> softmax_cross_entropy(Tape<Real>& tape, const Tensor<Real>& logits,
                                   std::span<const int> labels) {
  require_rank(logits.shape(), 2, "softmax_cross_entropy", "logits");
  const std::size_t B = logits.dim(0), C = logits.dim(1);
  if (labels.size() != B) {
    throw std::invalid_argument("softmax_cross_entropy: " + std::to_string(labels.size()) +
                                " labels for batch of " + std::to_string(B));
  }
  for (std::size_t b = 0; b < B; ++b) {
    if (labels[b] < 0 || static_cast<std::size_t>(labels[b]) >= C) {
      throw std::invalid_argument("softmax_cross_entropy: label " + std::to_string(labels[b]) +
                                  " out of range [0," + std::to_string(C) + ") at row " + std::to_string(b));
    }
  }
  const bool track = tape.tracks(logits);
  const Real* z = logits.raw();
  std::vector<Real> probs(B * C);
  double total = 0;
  for (std::size_t b = 0; b < B; ++b) {
    const Real* row = z + b * C;
    const std::size_t top = static_cast<std::size_t>(std::max_element(row, row + C) - row);
    const Real m = row[top];
    Real rest = 0;
    for (std::size_t c = 0; c < C; ++c) {
      const Real e = std::exp(row[c] - m);
      probs[b * C + c] = e;
      if (c != top) rest += e;
    }
    const Real denom = Real(1) + rest;
    for (std::size_t c = 0; c < C; ++c) probs[b * C + c] /= denom;
    // log1p keeps precision when the labelled class dominates.
    total += static_cast<double>(std::log1p(rest) + (m - row[labels[b]]));
  }
  Tensor<Real> out = Tensor<Real>::scalar(static_cast<Real>(total / static_cast<double>(B)), track);
  tape.check_finite(out, "softmax_cross_entropy");
  if (track) {
    std::vector<int> label_copy(labels.begin(), labels.end());
    tape.record(out, [logits = logits, out, probs = std::move(probs), label_copy = std::move(label_copy), B, C]() mutable {
      const Real g = out.grad()[0] / static_cast<Real>(B);
      auto gz = logits.mutable_grad();
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
          const Real target = static_cast<int>(c) == label_copy[b] ? Real(1) : Real(0);
          gz[b * C + c] += g * (probs[b * C + c] - target);
        }
      }
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> reshape(Tape<Real>& tape, const Tensor<Real>& input, Shape shape) {
  if (shape_size(shape) != input.size()) {
    throw std::invalid_argument("reshape: cannot view " + shape_string(input.shape()) + " as " +
                                shape_string(shape));
  }
  const bool track = tape.tracks(input);
  Tensor<Real> out(std::move(shape), std::vector<Real>(input.data().begin(), input.data().end()), track);
  if (track) {
    tape.record(out, [input = input, out]() mutable {
      const auto gy = out.grad();
      auto gx = input.mutable_grad();
      for (std::size_t i = 0; i < gy.size(); ++i) gx[i] += gy[i];
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> sum(Tape<Real>& tape, const Tensor<Real>& input) {
  const bool track = tape.tracks(input);
  Real total = 0;
  for (Real v : input.data()) total += v;
  Tensor<Real> out = Tensor<Real>::scalar(total, track);
  tape.check_finite(out, "sum");
  if (track) {
    tape.record(out, [input = input, out]() mutable {
      const Real g = out.grad()[0];
      for (Real& v : input.mutable_grad()) v += g;
    });
  }
  return out;
}

template <typename Real>
Tensor<Real> mul(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument("mul: shape mismatch " + shape_string(a.shape()) + " vs " +
                                shape_string(b.shape()));
  }
  const bool track = tape.tracks(a, b);
  Tensor<Real> out(a.shape(), track);
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  tape.check_finite(out, "mul");
  if (track) {
    tape.record(out, [a = a, b = b, out]() mutable {
      const auto gy = out.grad();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        for (std::size_t i = 0; i < gy.size(); ++i) ga[i] += gy[i] * b.data()[i];
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        for (std::size_t i = 0; i < gy.size(); ++i) gb[i] += gy[i] * a.data()[i];
      }
    });
  }
  return out;
}

template <typename Real>
std::vector<Real> softmax_rows(std::span<const Real> logits, std::size_t classes) {
  if (classes == 0 || logits.size() % classes != 0) throw std::invalid_argument("softmax_rows: bad shape");
  std::vector<Real> out(logits.size());
  for (std::size_t r = 0; r < logits.size() / classes; ++r) {
    const Real* row = logits.data() + r * classes;
    const Real m = *std::max_element(row, row + classes);
    Real total = 0;
    for (std::size_t c = 0; c < classes; ++c) total += (out[r * classes + c] = std::exp(row[c] - m));
    for (std::size_t c = 0; c < classes; ++c) out[r * classes + c] /= total;
  }
  return out;
}

#define RDFS_INSTANTIATE_OPS(Real)                                                                         \
  template Tensor<Real> conv2d(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&, std::size_t,         \
                               std::size_t);                                                               \
  template Tensor<Real> maxpool2d(Tape<Real>&, const Tensor<Real>&, std::size_t, std::size_t);             \
  template Tensor<Real> batchnorm_train(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&,             \
                                        const Tensor<Real>&, BatchNormState<Real>&);                       \
  template Tensor<Real> batchnorm_infer(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&,             \
                                        const Tensor<Real>&, const BatchNormState<Real>&);                 \
  template Tensor<Real> dense(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&, const Tensor<Real>&); \
  template Tensor<Real> relu(Tape<Real>&, const Tensor<Real>&);                                            \
  template Tensor<Real> softmax_cross_entropy(Tape<Real>&, const Tensor<Real>&, std::span<const int>);     \
  template Tensor<Real> reshape(Tape<Real>&, const Tensor<Real>&, Shape);                                  \
  template Tensor<Real> sum(Tape<Real>&, const Tensor<Real>&);                                             \
  template Tensor<Real> mul(Tape<Real>&, const Tensor<Real>&, const Tensor<Real>&);                        \
  template std::vector<Real> softmax_rows(std::span<const Real>, std::size_t);

RDFS_INSTANTIATE_OPS(float)
RDFS_INSTANTIATE_OPS(double)

#undef RDFS_INSTANTIATE_OPS

}  // namespace rdfs::ad
