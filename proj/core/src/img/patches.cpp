#include "rdfs/img/patches.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "rdfs/common/rng.hpp"

namespace rdfs::img {

std::string_view label_name(Label label) { return label == Label::original ? "H0" : "H1"; }

std::size_t PatchSet::count(Label label) const {
  return static_cast<std::size_t>(
      std::count_if(patches.begin(), patches.end(), [label](const Patch& p) { return p.label == label; }));
}

void PatchSet::validate(std::size_t max_per_source) const {
  std::map<std::uint32_t, std::size_t> per_source;
  for (std::size_t i = 0; i < patches.size(); ++i) {
    const auto& p = patches[i];
    if (p.image.width() != side || p.image.height() != side) {
      throw std::invalid_argument("PatchSet: patch " + std::to_string(i) + " is " +
                                  std::to_string(p.image.width()) + "x" + std::to_string(p.image.height()) +
                                  ", expected side " + std::to_string(side));
    }
    if (++per_source[p.source_id] > max_per_source) {
      throw std::invalid_argument("PatchSet: source " + std::to_string(p.source_id) + " contributes more than " +
                                  std::to_string(max_per_source) + " patches");
    }
  }
}

std::vector<PatchOffset> sample_patch_offsets(std::size_t width, std::size_t height, std::size_t side,
                                              std::size_t max_count, std::uint64_t seed) {
  if (side == 0 || width < side || height < side) {
    throw std::invalid_argument("extract_patches: image " + std::to_string(width) + "x" + std::to_string(height) +
                                " smaller than patch side " + std::to_string(side));
  }
  const std::size_t cols = width - side + 1;
  const std::size_t positions = cols * (height - side + 1);
  const std::size_t count = std::min(max_count, positions);
  SplitMix64 rng(seed);
  std::vector<PatchOffset> offsets;
  offsets.reserve(count);
  if (count * 2 >= positions) {
    // Dense case: partial Fisher-Yates over all positions.
    std::vector<std::size_t> all(positions);
    for (std::size_t i = 0; i < positions; ++i) all[i] = i;
    for (std::size_t i = 0; i < count; ++i) {
      std::swap(all[i], all[i + rng.bounded(positions - i)]);
      offsets.push_back({all[i] % cols, all[i] / cols});
    }
  } else {
    std::unordered_set<std::size_t> seen;
    while (offsets.size() < count) {
      const std::size_t pos = rng.bounded(positions);
      if (seen.insert(pos).second) offsets.push_back({pos % cols, pos / cols});
    }
  }
  return offsets;
}

std::vector<GrayImage> extract_patches(const GrayImage& image, std::size_t side, std::size_t max_count,
                                       std::uint64_t seed) {
  std::vector<GrayImage> out;
  for (const auto& o : sample_patch_offsets(image.width(), image.height(), side, max_count, seed)) {
    out.push_back(image.crop(o.x, o.y, side, side));
  }
  return out;
}

}  // namespace rdfs::img
