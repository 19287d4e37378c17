#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rdfs/harness/config.hpp"
#include "rdfs/img/patches.hpp"

namespace rdfs::harness {

enum class Split { train, val, test };
std::string split_name(Split split);

/// Provenance of one stored patch.
struct ManifestEntry {
  std::size_t index = 0;
  Split split = Split::train;
  img::Label label = img::Label::original;
  std::uint32_t source_id = 0;
  std::string source;
  img::PatchOffset offset;
};

struct Dataset {
  Task task = Task::median;
  std::uint64_t seed = 0;
  img::PatchSet train;
  img::PatchSet val;
  img::PatchSet test;
  /// Patches of all splits in storage order: train, val, test; within a split
  /// all H0 patches, then all H1 patches.
  std::vector<ManifestEntry> manifest;

  const img::PatchSet& split(Split s) const;
};

/// The manipulated copy of a source image, rounded to 8-bit levels as if saved.
img::GrayImage manipulate(const img::GrayImage& image, Task task, const DatasetSettings& settings);

/// Source images are assigned to splits before any processing, so no source
/// contributes to two splits. H0 patches come from originals and H1 patches
/// from manipulated copies, each source giving at most max_per_image patches.
/// Throws ConfigError when the sources cannot fill the requested counts.
Dataset prepare_dataset(const DatasetSettings& settings, Task task, std::uint64_t seed);

/// Throws std::logic_error if a source id appears in two splits.
void check_split_hygiene(const Dataset& dataset);

/// Writes manifest.jsonl, meta.json and patches_<split>.bin under dir.
void save_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset load_dataset(const std::filesystem::path& dir);

std::string manifest_jsonl(const std::vector<ManifestEntry>& manifest);

}  // namespace rdfs::harness
