#include "rdfs/det/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rdfs/common/rng.hpp"

namespace rdfs::det {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
constexpr std::size_t kTaps = 25;
constexpr std::size_t kCentre = 12;

template <typename Real>
void project_slices(std::span<Real> kernels, std::size_t slices) {
  if (kernels.size() != slices * kTaps) {
    throw std::invalid_argument("apply_highpass_constraint: expected " + std::to_string(slices) +
                                " 5x5 slices, got " + std::to_string(kernels.size()) + " values");
  }
  for (std::size_t s = 0; s < slices; ++s) {
    Real* k = kernels.data() + s * kTaps;
    double off = 0;
    for (std::size_t i = 0; i < kTaps; ++i) {
      if (i != kCentre) off += k[i];
    }
    if (std::abs(off) < 1e-8) {
      for (std::size_t i = 0; i < kTaps; ++i) k[i] = Real(1) / Real(24);
      off = 0;
      for (std::size_t i = 0; i < kTaps; ++i) {
        if (i != kCentre) off += k[i];
      }
    }
    if (std::abs(off - 1.0) > 1e-6) {
      for (std::size_t i = 0; i < kTaps; ++i) {
        if (i != kCentre) k[i] = static_cast<Real>(k[i] / off);
      }
    }
    k[kCentre] = Real(-1);
  }
}

}  // namespace

void apply_highpass_constraint(std::span<float> kernels, std::size_t slices) { project_slices(kernels, slices); }
void apply_highpass_constraint(std::span<double> kernels, std::size_t slices) { project_slices(kernels, slices); }

template <typename Real>
Network<Real>::Network(CnnArchitecture arch) : arch_(std::move(arch)) {
  arch_.validate();
  const auto shapes = arch_.layer_shapes();
  param_index_.assign(arch_.layers.size(), kNone);
  bn_index_.assign(arch_.layers.size(), kNone);
  for (std::size_t i = 0; i < arch_.layers.size(); ++i) {
    const ad::Shape& in = i == 0 ? arch_.input_shape : shapes[i - 1];
    const auto& layer = arch_.layers[i];
    if (const auto* c = std::get_if<ConvSpec>(&layer)) {
      param_index_[i] = params_.size();
      params_.emplace_back(ad::Shape{c->out_channels, in[0], c->kernel, c->kernel});
    } else if (std::holds_alternative<BatchNormSpec>(layer)) {
      param_index_[i] = params_.size();
      params_.emplace_back(ad::Shape{in[0]}, std::vector<Real>(in[0], Real(1)));
      params_.emplace_back(ad::Shape{in[0]});
      bn_index_[i] = bn_.size();
      bn_.emplace_back(in[0]);
    } else if (const auto* d = std::get_if<DenseSpec>(&layer)) {
      param_index_[i] = params_.size();
      params_.emplace_back(ad::Shape{in[0], d->out_features});
      params_.emplace_back(ad::Shape{d->out_features});
    }
  }
}

template <typename Real>
Network<Real>::Network(const Network& other)
    : arch_(other.arch_), bn_(other.bn_), param_index_(other.param_index_), bn_index_(other.bn_index_) {
  params_.reserve(other.params_.size());
  for (const auto& p : other.params_) {
    auto copy = p.detach();
    copy.set_requires_grad(p.requires_grad());
    params_.push_back(std::move(copy));
  }
}

template <typename Real>
Network<Real>& Network<Real>::operator=(const Network& other) {
  if (this != &other) *this = Network(other);
  return *this;
}

template <typename Real>
std::size_t Network<Real>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

template <typename Real>
void Network<Real>::set_trainable(bool trainable) {
  for (auto& p : params_) {
    p.set_requires_grad(trainable);
    p.zero_grad();
  }
}

template <typename Real>
void Network<Real>::initialize(std::uint64_t seed) {
  SplitMix64 rng(seed);
  for (std::size_t i = 0; i < arch_.layers.size(); ++i) {
    const auto& layer = arch_.layers[i];
    if (std::holds_alternative<ConvSpec>(layer) || std::holds_alternative<DenseSpec>(layer)) {
      auto& w = params_[param_index_[i]];
      const std::size_t fan_in = std::holds_alternative<ConvSpec>(layer) ? w.dim(1) * w.dim(2) * w.dim(3) : w.dim(0);
      const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
      for (Real& v : w.data()) v = static_cast<Real>(stddev * rng.normal());
      if (std::holds_alternative<DenseSpec>(layer)) {
        for (Real& v : params_[param_index_[i] + 1].data()) v = Real(0);
      }
    } else if (std::holds_alternative<BatchNormSpec>(layer)) {
      for (Real& v : params_[param_index_[i]].data()) v = Real(1);
      for (Real& v : params_[param_index_[i] + 1].data()) v = Real(0);
      auto& st = bn_[bn_index_[i]];
      std::fill(st.running_mean.begin(), st.running_mean.end(), Real(0));
      std::fill(st.running_var.begin(), st.running_var.end(), Real(1));
    }
  }
  project_constraints();
}

template <typename Real>
void Network<Real>::project_constraints() {
  if (!arch_.constrained_first_layer()) return;
  auto& k = params_[param_index_[0]];
  apply_highpass_constraint(k.data(), k.dim(0) * k.dim(1));
}

template <typename Real>
ad::Tensor<Real> Network<Real>::run(ad::Tape<Real>& tape, ad::Tensor<Real> x, std::size_t begin, std::size_t end,
                                    ad::Mode mode, std::vector<ad::BatchNormState<Real>>* mutable_stats) const {
  for (std::size_t i = begin; i < end; ++i) {
    const auto& layer = arch_.layers[i];
    if (const auto* c = std::get_if<ConvSpec>(&layer)) {
      x = ad::conv2d(tape, x, params_[param_index_[i]], c->stride, c->pad);
    } else if (std::holds_alternative<BatchNormSpec>(layer)) {
      const auto& gamma = params_[param_index_[i]];
      const auto& beta = params_[param_index_[i] + 1];
      if (mode == ad::Mode::train) {
        x = ad::batchnorm_train(tape, x, gamma, beta, (*mutable_stats)[bn_index_[i]]);
      } else {
        x = ad::batchnorm_infer(tape, x, gamma, beta, bn_[bn_index_[i]]);
      }
    } else if (std::holds_alternative<ReluSpec>(layer)) {
      x = ad::relu(tape, x);
    } else if (const auto* p = std::get_if<MaxPoolSpec>(&layer)) {
      x = ad::maxpool2d(tape, x, p->window, p->stride);
    } else if (std::holds_alternative<FlattenSpec>(layer)) {
      const std::size_t batch = x.dim(0);
      x = ad::reshape(tape, x, ad::Shape{batch, x.size() / batch});
    } else if (std::holds_alternative<DenseSpec>(layer)) {
      x = ad::dense(tape, x, params_[param_index_[i]], params_[param_index_[i] + 1]);
    }
  }
  return x;
}

namespace {

void check_input(const CnnArchitecture& arch, const ad::Shape& shape, const ad::Shape& expected) {
  if (shape.size() != expected.size() + 1 || !std::equal(expected.begin(), expected.end(), shape.begin() + 1)) {
    throw std::invalid_argument("network '" + arch.id + "': input " + ad::shape_string(shape) +
                                " does not match per-sample shape " + ad::shape_string(expected));
  }
}

}  // namespace

template <typename Real>
ad::Tensor<Real> Network<Real>::forward(ad::Tape<Real>& tape, const ad::Tensor<Real>& input, ad::Mode mode) {
  check_input(arch_, input.shape(), arch_.input_shape);
  return run(tape, input, 0, arch_.layers.size(), mode, &bn_);
}

template <typename Real>
ad::Tensor<Real> Network<Real>::forward_infer(ad::Tape<Real>& tape, const ad::Tensor<Real>& input) const {
  check_input(arch_, input.shape(), arch_.input_shape);
  return run(tape, input, 0, arch_.layers.size(), ad::Mode::infer, nullptr);
}

template <typename Real>
ad::Tensor<Real> Network<Real>::features(ad::Tape<Real>& tape, const ad::Tensor<Real>& input) const {
  check_input(arch_, input.shape(), arch_.input_shape);
  const std::size_t begin = arch_.head_begin();
  if (begin == 0) return input;
  return run(tape, input, 0, begin, ad::Mode::infer, nullptr);
}

template <typename Real>
ad::Tensor<Real> Network<Real>::head(ad::Tape<Real>& tape, const ad::Tensor<Real>& features) const {
  check_input(arch_, features.shape(), ad::Shape{arch_.flatten_dim()});
  return run(tape, features, arch_.head_begin(), arch_.layers.size(), ad::Mode::infer, nullptr);
}

template class Network<float>;
template class Network<double>;

}  // namespace rdfs::det
