#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rdfs/attack/adv_cache.hpp"
#include "rdfs/defence/reduced_detector.hpp"
#include "rdfs/det/detector.hpp"
#include "rdfs/harness/config.hpp"
#include "rdfs/harness/dataset.hpp"

namespace rdfs::harness {

/// Flatten-layer features of everything the reduced detectors see, computed
/// once per (task, model) and shared by every K and repetition.
struct FeatureBank {
  std::string task;
  std::uint64_t model_fingerprint = 0;
  std::size_t n = 0;
  defence::FeatureSet train;
  defence::FeatureSet val;
  defence::FeatureSet test;
  /// Successful adversarial examples only, keyed by attack name; all labelled H1.
  std::map<std::string, defence::FeatureSet> adversarial;
};

/// Seeded choice of per_class patches of each class, as ascending indices.
std::vector<std::size_t> select_per_class(const img::PatchSet& set, std::size_t per_class, std::uint64_t seed);

FeatureBank build_feature_bank(const det::CnnDetector& detector, const Dataset& dataset, const RdfsSettings& settings,
                               std::uint64_t seed, const std::vector<attack::AdvCache>& caches);

void save_feature_bank(const std::filesystem::path& path, const FeatureBank& bank);
FeatureBank load_feature_bank(const std::filesystem::path& path);

}  // namespace rdfs::harness
