#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rdfs/defence/reduced_detector.hpp"
#include "rdfs/harness/config.hpp"
#include "rdfs/harness/features.hpp"

namespace rdfs::harness {

inline constexpr const char* kNoAttack = "no_attack";

/// Conditions in report order: no attack, then pgd, fgsm, bfgs.
std::vector<std::string> report_conditions();

/// One (K, repetition, detector kind) cell of the sweep.
struct SweepItem {
  std::size_t k = 0;
  std::size_t rep = 0;
  defence::ReducedKind kind = defence::ReducedKind::fc;
  bool operator==(const SweepItem&) const = default;
};

/// Accuracy of one trained reduced detector under one condition.
struct RepResult {
  std::string task;
  defence::ReducedKind kind = defence::ReducedKind::fc;
  std::size_t k = 0;
  std::size_t rep = 0;
  std::string condition;
  /// Percentage of correct decisions; under attack, the share still decided H1.
  double accuracy = 0;
  std::size_t samples = 0;
};

/// Secret key of repetition r at size K; a pure function of the master seed.
defence::SecretKey repetition_key(std::uint64_t master_seed, std::size_t k, std::size_t rep);

/// Every item in canonical order: K ascending, then repetition, then kind.
std::vector<SweepItem> sweep_items(const std::vector<std::size_t>& k_values, std::size_t repetitions,
                                   const std::vector<defence::ReducedKind>& kinds);

/// Calls fn(i) for every i in [0, count) from `threads` workers. With a
/// shuffle seed the start order is a seeded permutation. fn must write only
/// to slot i of its outputs.
void run_pool(std::size_t count, std::size_t threads, std::optional<std::uint64_t> shuffle,
              const std::function<void(std::size_t)>& fn);

/// Trains the reduced detector of one item.
defence::ReducedDetector train_item(const FeatureBank& bank, const Config& config, const SweepItem& item);

/// Clean accuracy plus transfer accuracy on every non-empty adversarial set of the bank.
std::vector<RepResult> evaluate_item(const FeatureBank& bank, const defence::ReducedDetector& detector,
                                     const SweepItem& item);

/// train_item followed by evaluate_item for every item, executed through
/// run_pool; results come back in canonical item order.
std::vector<RepResult> run_sweep(const FeatureBank& bank, const Config& config);

}  // namespace rdfs::harness
