#include "rdfs/defence/feature_subset.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

#include "rdfs/common/rng.hpp"

namespace rdfs::defence {

SecretKey key_from_bytes(std::string_view bytes) { return mix64(fnv1a64(bytes)); }

std::uint64_t key_fingerprint(SecretKey key) {
  std::uint64_t h = fnv1a64("rdfs-key-fingerprint");
  for (int round = 0; round < 4; ++round) h = mix64(h ^ key);
  return h;
}

void FeatureSubset::validate() const {
  if (k == 0 || k > n) {
    throw std::invalid_argument("feature subset: need 1 <= K <= N, got K=" + std::to_string(k) + " N=" +
                                std::to_string(n));
  }
  if (indices.size() != k) throw std::invalid_argument("feature subset: index count differs from K");
  for (std::size_t i = 0; i < k; ++i) {
    if (indices[i] >= n || (i > 0 && indices[i] <= indices[i - 1]))
      throw std::invalid_argument("feature subset: indices must be strictly increasing and below N");
  }
}

std::vector<float> FeatureSubset::gather(std::span<const float> rows, std::size_t count) const {
  if (rows.size() != count * n) {
    throw std::invalid_argument("feature subset: expected " + std::to_string(count) + " rows of length " +
                                std::to_string(n) + ", got " + std::to_string(rows.size()) + " values");
  }
  std::vector<float> out(count * k);
  for (std::size_t r = 0; r < count; ++r) {
    const float* row = rows.data() + r * n;
    for (std::size_t j = 0; j < k; ++j) out[r * k + j] = row[indices[j]];
  }
  return out;
}

FeatureSubset select_features(SecretKey key, std::size_t n, std::size_t k) {
  if (k == 0 || k > n) {
    throw std::invalid_argument("select_features: need 1 <= K <= N, got K=" + std::to_string(k) + " N=" +
                                std::to_string(n));
  }
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  SplitMix64 rng(key);
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.bounded(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return FeatureSubset{n, k, std::move(pool)};
}

}  // namespace rdfs::defence
