#include "rdfs/det/detector.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "rdfs/common/rng.hpp"

namespace rdfs::det {

img::Label decide(std::span<const float> logits) {
  return logits[1] > logits[0] ? img::Label::manipulated : img::Label::original;
}

Prediction prediction_from_logits(std::span<const float> logits) {
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(static_cast<double>(logits[0]) - m);
  const double e1 = std::exp(static_cast<double>(logits[1]) - m);
  return {e0 / (e0 + e1), e1 / (e0 + e1), decide(logits)};
}

std::vector<float> to_model_units(const img::GrayImage& image) {
  std::vector<float> out(image.pixels().begin(), image.pixels().end());
  for (float& v : out) v /= 255.0f;
  return out;
}

CnnDetector::CnnDetector(Network<float> network, TrainingMetadata metadata)
    : net_(std::move(network)), meta_(std::move(metadata)) {
  if (net_.architecture().num_classes() != 2) throw std::invalid_argument("CnnDetector: expected a 2-class network");
  net_.set_trainable(false);
  feature_dim_ = net_.architecture().flatten_dim();
  input_size_ = ad::shape_size(net_.architecture().input_shape);
}

std::vector<float> CnnDetector::checked_input(const img::GrayImage& patch) const {
  const auto& shape = net_.architecture().input_shape;
  if (shape.size() != 3 || patch.width() != shape[2] || patch.height() != shape[1]) {
    throw std::invalid_argument("detector: patch is " + std::to_string(patch.width()) + "x" +
                                std::to_string(patch.height()) + ", network expects " + ad::shape_string(shape));
  }
  return to_model_units(patch);
}

Prediction CnnDetector::predict(const img::GrayImage& patch) const {
  return prediction_from_logits(logits(checked_input(patch), 1));
}

std::vector<Prediction> CnnDetector::predict_batch(std::span<const img::GrayImage> patches) const {
  std::vector<float> values;
  values.reserve(patches.size() * input_size_);
  for (const auto& p : patches) {
    const auto v = checked_input(p);
    values.insert(values.end(), v.begin(), v.end());
  }
  const auto all = logits(values, patches.size());
  std::vector<Prediction> out;
  out.reserve(patches.size());
  for (std::size_t i = 0; i < patches.size(); ++i) {
    out.push_back(prediction_from_logits(std::span<const float>(all).subspan(2 * i, 2)));
  }
  return out;
}

std::vector<float> CnnDetector::extract_features(const img::GrayImage& patch) const {
  return features(checked_input(patch), 1);
}

std::vector<float> CnnDetector::logits(std::span<const float> inputs, std::size_t count) const {
  if (count == 0) return {};
  return infer_logits(net_, inputs, count);
}

namespace {

ad::Tensor<float> make_batch(std::span<const float> values, std::size_t count, const ad::Shape& per_sample) {
  ad::Shape shape{count};
  shape.insert(shape.end(), per_sample.begin(), per_sample.end());
  if (values.size() != ad::shape_size(shape)) {
    throw std::invalid_argument("detector: " + std::to_string(values.size()) + " values for " + std::to_string(count) +
                                " samples of shape " + ad::shape_string(per_sample));
  }
  return ad::Tensor<float>(std::move(shape), std::vector<float>(values.begin(), values.end()));
}

constexpr std::size_t kChunk = 100;

}  // namespace

std::vector<float> CnnDetector::features(std::span<const float> inputs, std::size_t count) const {
  std::vector<float> out;
  out.reserve(count * feature_dim_);
  auto tape = ad::Tape<float>::inference();
  for (std::size_t first = 0; first < count; first += kChunk) {
    const std::size_t n = std::min(kChunk, count - first);
    const auto f = net_.features(
        tape, make_batch(inputs.subspan(first * input_size_, n * input_size_), n, net_.architecture().input_shape));
    out.insert(out.end(), f.data().begin(), f.data().end());
  }
  if (out.size() != count * feature_dim_) throw std::invalid_argument("detector: input length mismatch");
  return out;
}

std::vector<float> CnnDetector::head_logits(std::span<const float> features, std::size_t count) const {
  std::vector<float> out;
  out.reserve(count * 2);
  auto tape = ad::Tape<float>::inference();
  for (std::size_t first = 0; first < count; first += kChunk) {
    const std::size_t n = std::min(kChunk, count - first);
    const auto l = net_.head(tape, make_batch(features.subspan(first * feature_dim_, n * feature_dim_), n,
                                              ad::Shape{feature_dim_}));
    out.insert(out.end(), l.data().begin(), l.data().end());
  }
  return out;
}

double CnnDetector::loss_and_gradient(std::span<const float> input, img::Label label, std::span<float> grad,
                                      std::span<float> logits_out) const {
  if (input.size() != input_size_ || grad.size() != input_size_) {
    throw std::invalid_argument("loss_and_gradient: expected " + std::to_string(input_size_) + " values");
  }
  ad::Tape<float> tape;
  auto x = make_batch(input, 1, net_.architecture().input_shape);
  x.set_requires_grad(true);
  const auto logits = net_.forward_infer(tape, x);
  const int labels[1] = {static_cast<int>(label)};
  const auto loss = ad::softmax_cross_entropy(tape, logits, labels);
  tape.backward(loss);
  if (logits_out.size() == 2) std::copy(logits.data().begin(), logits.data().end(), logits_out.begin());
  if (x.has_grad()) {
    std::copy(x.grad().begin(), x.grad().end(), grad.begin());
  } else {
    std::fill(grad.begin(), grad.end(), 0.0f);
  }
  return loss.item();
}

LabeledSamples to_samples(const img::PatchSet& patches) {
  LabeledSamples out;
  out.sample_shape = {1, patches.side, patches.side};
  out.values.reserve(patches.size() * patches.side * patches.side);
  out.labels.reserve(patches.size());
  for (const auto& p : patches.patches) {
    if (p.image.width() != patches.side || p.image.height() != patches.side) {
      throw std::invalid_argument("to_samples: patch size does not match set side " + std::to_string(patches.side));
    }
    const auto v = to_model_units(p.image);
    out.values.insert(out.values.end(), v.begin(), v.end());
    out.labels.push_back(static_cast<int>(p.label));
  }
  return out;
}

CnnDetector train_cnn(const CnnArchitecture& arch, const img::PatchSet& train, const img::PatchSet& val,
                      const TrainConfig& cfg, const std::string& task, TrainHistory* history) {
  std::set<std::uint32_t> train_sources;
  for (const auto& p : train.patches) train_sources.insert(p.source_id);
  for (const auto& p : val.patches) {
    if (train_sources.count(p.source_id) != 0) {
      throw std::invalid_argument("train_cnn: source image " + std::to_string(p.source_id) +
                                  " appears in both training and validation sets");
    }
  }
  for (const auto* set : {&train, &val}) {
    if (set->count(img::Label::original) == 0 || set->count(img::Label::manipulated) == 0) {
      throw std::invalid_argument("train_cnn: training and validation sets must contain both classes");
    }
  }
  Network<float> net(arch);
  net.initialize(derive_seed(cfg.seed, "cnn-init"));
  auto h = train_network(net, to_samples(train), to_samples(val), cfg);
  TrainingMetadata meta{task, cfg.seed, h.epochs.size(), h.best_epoch, h.epochs[h.best_epoch - 1].val_accuracy};
  if (history != nullptr) *history = std::move(h);
  return CnnDetector(std::move(net), std::move(meta));
}

}  // namespace rdfs::det
