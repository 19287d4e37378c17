#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "rdfs/img/gray_image.hpp"

namespace rdfs::img {

/// H0 = original, H1 = manipulated. The numeric value is the class index.
enum class Label : int { original = 0, manipulated = 1 };

std::string_view label_name(Label label);

struct PatchOffset {
  std::size_t x = 0;
  std::size_t y = 0;
  bool operator==(const PatchOffset&) const = default;
};

struct Patch {
  GrayImage image;
  Label label = Label::original;
  std::uint32_t source_id = 0;
  PatchOffset offset;
};

struct PatchSet {
  std::size_t side = 0;
  std::vector<Patch> patches;

  std::size_t size() const { return patches.size(); }
  std::size_t count(Label label) const;
  /// Throws when a patch has the wrong side or more than max_per_source
  /// patches share a source id.
  void validate(std::size_t max_per_source) const;
};

/// Up to max_count distinct top-left offsets drawn uniformly for side x side
/// windows; deterministic for a seed.
std::vector<PatchOffset> sample_patch_offsets(std::size_t width, std::size_t height, std::size_t side,
                                              std::size_t max_count, std::uint64_t seed);

std::vector<GrayImage> extract_patches(const GrayImage& image, std::size_t side, std::size_t max_count,
                                       std::uint64_t seed);

}  // namespace rdfs::img
