#pragma once

#include <cstdint>
#include <random>

namespace cfaudit {

using Rng = std::mt19937_64;

/// Derives an independent stream seed from a base seed and an index
/// (splitmix64 finalizer). Used for per-fold and per-sample streams so
/// results do not depend on scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace cfaudit
