#pragma once

#include <span>
#include <vector>

#include "rdfs/ad/tape.hpp"
#include "rdfs/ad/tensor.hpp"

namespace rdfs::ad {

/// Variance floor inside batch-normalization denominators.
inline constexpr double kBatchNormEpsilon = 1e-5;

enum class Mode { train, infer };

template <typename Real>
struct BatchNormState {
  std::vector<Real> running_mean;
  std::vector<Real> running_var;
  Real momentum = Real(0.1);

  BatchNormState() = default;
  explicit BatchNormState(std::size_t channels)
      : running_mean(channels, Real(0)), running_var(channels, Real(1)) {}
};

/// Zero-padded strided 2-D convolution (cross-correlation).
/// input [B,C,H,W], kernels [F,C,kH,kW] -> [B,F,H',W'].
template <typename Real>
Tensor<Real> conv2d(Tape<Real>& tape, const Tensor<Real>& input, const Tensor<Real>& kernels,
                    std::size_t stride, std::size_t pad);

/// Max pooling; backward routes to the first row-major maximum of each window.
template <typename Real>
Tensor<Real> maxpool2d(Tape<Real>& tape, const Tensor<Real>& input, std::size_t window,
                       std::size_t stride);

template <typename Real>
Tensor<Real> batchnorm_train(Tape<Real>& tape, const Tensor<Real>& input, const Tensor<Real>& gamma,
                             const Tensor<Real>& beta, BatchNormState<Real>& state);

template <typename Real>
Tensor<Real> batchnorm_infer(Tape<Real>& tape, const Tensor<Real>& input, const Tensor<Real>& gamma,
                             const Tensor<Real>& beta, const BatchNormState<Real>& state);

template <typename Real>
Tensor<Real> batchnorm(Tape<Real>& tape, const Tensor<Real>& input, const Tensor<Real>& gamma,
                       const Tensor<Real>& beta, Mode mode, BatchNormState<Real>& state) {
  return mode == Mode::train ? batchnorm_train(tape, input, gamma, beta, state)
                             : batchnorm_infer(tape, input, gamma, beta, state);
}

/// input [B,D], weights [D,M], bias [M] -> [B,M].
template <typename Real>
Tensor<Real> dense(Tape<Real>& tape, const Tensor<Real>& input, const Tensor<Real>& weights,
                   const Tensor<Real>& bias);

template <typename Real>
Tensor<Real> relu(Tape<Real>& tape, const Tensor<Real>& input);

/// Mean over the batch of -log softmax(logits)[label]; logits [B,C].
template <typename Real>
Tensor<Real> softmax_cross_entropy(Tape<Real>& tape, const Tensor<Real>& logits,
                                   std::span<const int> labels);

template <typename Real>
Tensor<Real> reshape(Tape<Real>& tape, const Tensor<Real>& input, Shape shape);

template <typename Real>
Tensor<Real> sum(Tape<Real>& tape, const Tensor<Real>& input);

template <typename Real>
Tensor<Real> mul(Tape<Real>& tape, const Tensor<Real>& a, const Tensor<Real>& b);

/// Row-wise softmax of a [B,C] buffer (no tape).
template <typename Real>
std::vector<Real> softmax_rows(std::span<const Real> logits, std::size_t classes);

}  // namespace rdfs::ad
