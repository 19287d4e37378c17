#include "rdfs/common/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rdfs {

std::uint64_t SplitMix64::bounded(std::uint64_t range) {
  if (range == 0) throw std::invalid_argument("SplitMix64::bounded: empty range");
  // Values below threshold would bias the low residues.
  const std::uint64_t threshold = (0 - range) % range;
  for (;;) {
    const std::uint64_t value = next();
    if (value >= threshold) return value % range;
  }
}

double SplitMix64::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t mix64(std::uint64_t value) {
  value = (value ^ (value >> 30)) * 0xBF58476D1CE4E5B9ULL;
  value = (value ^ (value >> 27)) * 0x94D049BB133111EBULL;
  return value ^ (value >> 31);
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t basis) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t hash = basis;
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= bytes[i];
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t fnv1a64(std::string_view bytes) { return fnv1a64(bytes.data(), bytes.size()); }

std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose, std::uint64_t a,
                          std::uint64_t b) {
  std::uint64_t seed = mix64(master + 0x9E3779B97F4A7C15ULL);
  seed = mix64(seed ^ fnv1a64(purpose));
  seed = mix64(seed ^ (a + 0x632BE59BD9B4E019ULL));
  seed = mix64(seed ^ (b + 0x8CB92BA72F3D8DD7ULL));
  return seed;
}

}  // namespace rdfs
