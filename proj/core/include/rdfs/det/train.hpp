#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rdfs/det/network.hpp"

namespace rdfs::det {

struct EarlyStop {
  std::size_t window = 5;
  double threshold = 1e-3;
};

/// Mini-batch Adam on softmax cross-entropy.
struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.99;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 32;
  std::size_t max_epochs = 40;
  std::optional<EarlyStop> early_stop;
  std::uint64_t seed = 0;
  /// Batch size for validation passes (does not affect results).
  std::size_t eval_batch = 100;

  void validate() const;
};

/// Flat float samples with integer class labels.
struct LabeledSamples {
  ad::Shape sample_shape;
  std::vector<float> values;
  std::vector<int> labels;

  std::size_t sample_size() const { return ad::shape_size(sample_shape); }
  std::size_t count() const { return labels.size(); }
  std::span<const float> sample(std::size_t i) const {
    return std::span<const float>(values).subspan(i * sample_size(), sample_size());
  }
  void validate(std::size_t classes) const;
  bool has_all_classes(std::size_t classes) const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double train_loss = 0;
  double val_loss = 0;
  double val_accuracy = 0;
};

struct TrainHistory {
  /// Validation loss of the initial parameters.
  double initial_loss = 0;
  std::vector<EpochStats> epochs;
  /// 1-based epoch whose parameters were returned.
  std::size_t best_epoch = 0;
  bool early_stopped = false;
};

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Trains in place and leaves net holding the checkpoint with the best
/// validation accuracy (earliest epoch on ties). High-pass projection runs
/// after every optimizer step for constrained nets.
TrainHistory train_network(Network<float>& net, const LabeledSamples& train, const LabeledSamples& val,
                           const TrainConfig& cfg);

/// Inference logits [count, classes] in chunks of `batch`.
std::vector<float> infer_logits(const Network<float>& net, std::span<const float> values, std::size_t count,
                                std::size_t batch = 100);

struct EvalResult {
  double loss = 0;
  double accuracy = 0;
};
EvalResult evaluate_network(const Network<float>& net, const LabeledSamples& data, std::size_t batch = 100);

/// Index of the largest entry of a row; the first wins ties.
std::size_t argmax(std::span<const float> row);

}  // namespace rdfs::det
