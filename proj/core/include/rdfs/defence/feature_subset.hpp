#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace rdfs::defence {

using SecretKey = std::uint64_t;

/// Hashes an arbitrary byte string to a 64-bit key.
SecretKey key_from_bytes(std::string_view bytes);

/// Salted one-way digest safe to store next to a trained detector.
std::uint64_t key_fingerprint(SecretKey key);

struct FeatureSubset {
  std::size_t n = 0;
  std::size_t k = 0;
  /// Strictly increasing, all < n.
  std::vector<std::size_t> indices;

  void validate() const;

  /// Selected coordinates of `count` rows of length n, packed as [count, k].
  /// Only the selected coordinates are read.
  std::vector<float> gather(std::span<const float> rows, std::size_t count) const;

  bool operator==(const FeatureSubset&) const = default;
};

/// k distinct indices from a partial Fisher-Yates shuffle of [0, n) driven by
/// SplitMix64(key), sorted ascending.
FeatureSubset select_features(SecretKey key, std::size_t n, std::size_t k);

}  // namespace rdfs::defence
