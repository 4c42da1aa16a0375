#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace housekeep {

// All randomness in the project flows through Rng with explicit helper
// functions below. std::*_distribution is implementation-defined, so we avoid
// it everywhere determinism is promised.
using Rng = std::mt19937_64;

// splitmix64 step; used to derive independent sub-seeds from a master seed.
inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
inline uint64_t bounded(Rng& rng, uint64_t n) {
  if (n <= 1) return 0;
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % n;
}

// Uniform double in [0, 1).
inline double real01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// FNV-1a; platform-stable string hashing for seed derivation.
inline uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[bounded(rng, items.size())];
}

// Fisher-Yates; std::shuffle is not seed-portable.
template <typename T>
void shuffle(Rng& rng, std::vector<T>& items) {
  for (size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[bounded(rng, i)]);
  }
}

}  // namespace housekeep
