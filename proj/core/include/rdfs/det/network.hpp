#pragma once

#include <cstdint>
#include <vector>

#include "rdfs/ad/ops.hpp"
#include "rdfs/ad/tape.hpp"
#include "rdfs/ad/tensor.hpp"
#include "rdfs/det/architecture.hpp"

namespace rdfs::det {

/// Projects each 5x5 kernel slice onto the high-pass constraint: centre tap
/// -1, off-centre taps rescaled to sum to 1. Slices whose off-centre sum is
/// already within 1e-6 of 1 are only re-centred, which makes the projection
/// bitwise idempotent. Off-centre sums below 1e-8 in magnitude reset to 1/24.
void apply_highpass_constraint(std::span<float> kernels, std::size_t slices);
void apply_highpass_constraint(std::span<double> kernels, std::size_t slices);

/// Parameters and batch-norm statistics of a layer stack described by a
/// CnnArchitecture. Copies are deep.
template <typename Real>
class Network {
 public:
  explicit Network(CnnArchitecture arch);
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  /// He-normal weights, unit BN scale, zero biases; constraint applied.
  void initialize(std::uint64_t seed);

  const CnnArchitecture& architecture() const { return arch_; }

  /// Trainable tensors in declaration order (per layer: kernels; gamma, beta; weights, bias).
  std::vector<ad::Tensor<Real>>& parameters() { return params_; }
  const std::vector<ad::Tensor<Real>>& parameters() const { return params_; }
  std::vector<ad::BatchNormState<Real>>& batchnorm_states() { return bn_; }
  const std::vector<ad::BatchNormState<Real>>& batchnorm_states() const { return bn_; }
  std::size_t parameter_count() const;

  void set_trainable(bool trainable);

  /// Full forward pass over a batch [B, input_shape...] returning logits [B, classes].
  /// Train mode updates batch-norm running statistics.
  ad::Tensor<Real> forward(ad::Tape<Real>& tape, const ad::Tensor<Real>& input, ad::Mode mode);
  ad::Tensor<Real> forward_infer(ad::Tape<Real>& tape, const ad::Tensor<Real>& input) const;

  /// Inference up to and including the flatten layer: [B, N].
  ad::Tensor<Real> features(ad::Tape<Real>& tape, const ad::Tensor<Real>& input) const;
  /// Inference of the layers after the flatten layer on [B, N] features.
  ad::Tensor<Real> head(ad::Tape<Real>& tape, const ad::Tensor<Real>& features) const;

  void project_constraints();

  template <typename Other>
  Network<Other> cast() const {
    Network<Other> out(arch_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      const auto src = params_[i].data();
      auto dst = out.parameters()[i].data();
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] = static_cast<Other>(src[j]);
    }
    for (std::size_t i = 0; i < bn_.size(); ++i) {
      auto& dst = out.batchnorm_states()[i];
      for (std::size_t c = 0; c < bn_[i].running_mean.size(); ++c) {
        dst.running_mean[c] = static_cast<Other>(bn_[i].running_mean[c]);
        dst.running_var[c] = static_cast<Other>(bn_[i].running_var[c]);
      }
      dst.momentum = static_cast<Other>(bn_[i].momentum);
    }
    return out;
  }

 private:
  ad::Tensor<Real> run(ad::Tape<Real>& tape, ad::Tensor<Real> x, std::size_t begin, std::size_t end, ad::Mode mode,
                       std::vector<ad::BatchNormState<Real>>* mutable_stats) const;

  CnnArchitecture arch_;
  std::vector<ad::Tensor<Real>> params_;
  std::vector<ad::BatchNormState<Real>> bn_;
  // Per layer: index of its first parameter / batch-norm state, or npos.
  std::vector<std::size_t> param_index_;
  std::vector<std::size_t> bn_index_;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace rdfs::det
