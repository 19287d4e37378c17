#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rdfs/defence/feature_subset.hpp"
#include "rdfs/defence/svm.hpp"
#include "rdfs/det/network.hpp"
#include "rdfs/det/train.hpp"
#include "rdfs/img/patches.hpp"

namespace rdfs::defence {

enum class ReducedKind { fc, svm };

std::string_view kind_name(ReducedKind kind);
ReducedKind parse_kind(std::string_view name);

struct ReducedDecision {
  img::Label decision = img::Label::original;
  /// Positive favours H1: logit difference for FC, SVM decision value otherwise.
  double score = 0;
};

/// Detector over the K keyed coordinates of the N flatten-layer features.
/// Immutable once trained; safe for concurrent inference.
class ReducedDetector {
 public:
  static ReducedDetector from_fc(FeatureSubset subset, std::uint64_t fingerprint, det::Network<float> head);
  static ReducedDetector from_svm(FeatureSubset subset, std::uint64_t fingerprint, Standardizer standardizer,
                                  SvmModel model);

  ReducedKind kind() const { return kind_; }
  const FeatureSubset& subset() const { return subset_; }
  std::uint64_t key_fingerprint() const { return fingerprint_; }
  const det::Network<float>* fc_head() const { return fc_ ? &*fc_ : nullptr; }
  const SvmModel* svm() const { return svm_ ? &*svm_ : nullptr; }
  const Standardizer* standardizer() const { return svm_ ? &standardizer_ : nullptr; }

  /// One feature vector of length N; only the selected coordinates are read.
  ReducedDecision predict(std::span<const float> features) const;
  /// `count` rows of length N.
  std::vector<ReducedDecision> predict_batch(std::span<const float> rows, std::size_t count) const;

 private:
  ReducedKind kind_ = ReducedKind::fc;
  FeatureSubset subset_;
  std::uint64_t fingerprint_ = 0;
  std::optional<det::Network<float>> fc_;
  Standardizer standardizer_;
  std::optional<SvmModel> svm_;
};

/// Flatten-layer feature rows [count, N] with class labels.
using FeatureSet = det::LabeledSamples;

/// Retrains an FC head with the given hidden widths on the K selected
/// coordinates; cfg.seed drives initialization and shuffling.
ReducedDetector train_reduced_fc(const FeatureSet& train, const FeatureSet& val, SecretKey key,
                                 const FeatureSubset& subset, const std::vector<std::size_t>& hidden,
                                 const det::TrainConfig& cfg, det::TrainHistory* history = nullptr);

/// Standardizes the selected coordinates, then cross-validates and fits an SVM.
ReducedDetector train_svm(const FeatureSet& train, SecretKey key, const FeatureSubset& subset, const SvmConfig& cfg,
                          SvmSelection* selection = nullptr);

/// JSON header (kind, K, N, key fingerprint, standardization statistics,
/// kernel parameters, head shape) plus little-endian f32 parameter block.
void save_reduced(const std::filesystem::path& path, const ReducedDetector& detector);

/// The subset is regenerated from the key, which must match the stored fingerprint.
ReducedDetector load_reduced(const std::filesystem::path& path, SecretKey key);

}  // namespace rdfs::defence
