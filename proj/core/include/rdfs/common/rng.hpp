#pragma once

#include <cstdint>
#include <limits>
#include <string_view>

namespace rdfs {

/// SplitMix64 generator. Its output stream is fixed by the algorithm so
/// keyed selections reproduce bit-for-bit across implementations.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;

  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return next(); }

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform integer in [0, range) by rejection, exactly unbiased.
  std::uint64_t bounded(std::uint64_t range);

  /// Uniform double in [0, 1) from the top 53 bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (one value per call, no caching).
  double normal();

 private:
  std::uint64_t state_;
};

/// SplitMix64 finalizer applied to a single value.
std::uint64_t mix64(std::uint64_t value);

/// FNV-1a over bytes.
std::uint64_t fnv1a64(std::string_view bytes);
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Child seed for an independent stream identified by (purpose, a, b).
std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose, std::uint64_t a = 0,
                          std::uint64_t b = 0);

}  // namespace rdfs
