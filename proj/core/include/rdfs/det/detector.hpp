#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rdfs/det/network.hpp"
#include "rdfs/det/train.hpp"
#include "rdfs/img/patches.hpp"

namespace rdfs::det {

struct TrainingMetadata {
  std::string task;
  std::uint64_t seed = 0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_val_accuracy = 0;
};

struct Prediction {
  double p_h0 = 0;
  double p_h1 = 0;
  img::Label decision = img::Label::original;
};

/// Decision from a logit pair; ties go to H0.
img::Label decide(std::span<const float> logits);
Prediction prediction_from_logits(std::span<const float> logits);

/// Pixel values divided by 255.
std::vector<float> to_model_units(const img::GrayImage& image);

/// Trained original detector. Immutable once constructed and safe for
/// concurrent inference. Image-level calls scale pixels to [0,1]; the
/// model-unit calls take already scaled, flattened samples.
class CnnDetector {
 public:
  CnnDetector(Network<float> network, TrainingMetadata metadata);

  const CnnArchitecture& architecture() const { return net_.architecture(); }
  const Network<float>& network() const { return net_; }
  const TrainingMetadata& metadata() const { return meta_; }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t input_size() const { return input_size_; }
  std::size_t patch_side() const { return net_.architecture().patch_side(); }

  Prediction predict(const img::GrayImage& patch) const;
  std::vector<Prediction> predict_batch(std::span<const img::GrayImage> patches) const;
  std::vector<float> extract_features(const img::GrayImage& patch) const;

  /// [count, 2] logits for `count` samples in model units.
  std::vector<float> logits(std::span<const float> inputs, std::size_t count) const;
  /// [count, N] flatten-layer activations.
  std::vector<float> features(std::span<const float> inputs, std::size_t count) const;
  /// The FC head applied to [count, N] features.
  std::vector<float> head_logits(std::span<const float> features, std::size_t count) const;

  /// Cross-entropy of one model-unit sample against `label`; writes d(loss)/d(input) into grad
  /// and, when logits_out is non-empty, the two logits of the same forward pass.
  double loss_and_gradient(std::span<const float> input, img::Label label, std::span<float> grad,
                           std::span<float> logits_out = {}) const;

 private:
  std::vector<float> checked_input(const img::GrayImage& patch) const;

  Network<float> net_;
  TrainingMetadata meta_;
  std::size_t feature_dim_ = 0;
  std::size_t input_size_ = 0;
};

/// Model-unit samples of a patch set, labels as class indices.
LabeledSamples to_samples(const img::PatchSet& patches);

/// Trains a fresh network. Rejects train/val sets sharing a source image or
/// missing a class.
CnnDetector train_cnn(const CnnArchitecture& arch, const img::PatchSet& train, const img::PatchSet& val,
                      const TrainConfig& cfg, const std::string& task, TrainHistory* history = nullptr);

}  // namespace rdfs::det
