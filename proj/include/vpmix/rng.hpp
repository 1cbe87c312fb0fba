// Seeded RNG helpers. All randomness in the library goes through these so that
// a (seed, call sequence) pair reproduces bit-identical results on any platform;
// std::uniform_*_distribution is implementation-defined and deliberately avoided.

#pragma once

#include <cstdint>
#include <random>

namespace vpmix {

/// Uniform double in [0, 1) from the top 53 bits of one engine draw.
inline double uniformUnit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
inline double uniformRange(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniformUnit(rng);
}

/// Uniform integer in [0, n) without modulo bias. n must be positive.
inline std::uint64_t uniformIndex(std::mt19937_64& rng, std::uint64_t n) {
  const std::uint64_t limit = (UINT64_MAX / n) * n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

/// RNG stream for one batch item: global seed XOR item index, so item outputs
/// do not depend on worker count or execution order.
inline std::mt19937_64 itemRng(std::uint64_t global_seed, std::uint64_t item_index) {
  return std::mt19937_64(global_seed ^ item_index);
}

}  // namespace vpmix
