#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rdfs/attack/attacks.hpp"

namespace rdfs::attack {

struct CachedExample {
  /// Index of the attacked patch in the test split.
  std::uint64_t patch_id = 0;
  AttackOutcome outcome;
};

/// Adversarial examples crafted against one model with one attack.
struct AdvCache {
  std::string task;
  std::string attack;
  std::uint64_t model_fingerprint = 0;
  std::size_t input_size = 0;
  std::vector<CachedExample> entries;
};

/// Writes `<stem>.jsonl` (a header line, then one line per example with patch
/// id, success, PSNR, hyperparameter, iterations and block offset) and
/// `<stem>.bin` (the raw little-endian f32 patch blocks).
void save_adv_cache(const std::filesystem::path& stem, const AdvCache& cache);

/// Throws rdfs::FormatError on a malformed index or a block file that does
/// not match it.
AdvCache load_adv_cache(const std::filesystem::path& stem);

std::filesystem::path adv_cache_index_path(const std::filesystem::path& stem);
std::filesystem::path adv_cache_blocks_path(const std::filesystem::path& stem);

}  // namespace rdfs::attack
