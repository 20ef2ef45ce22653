#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace qsky {

using Rng = std::mt19937_64;

enum class Sampling {
  Poisson,   // counts ~ Poisson(mean)
  Expected,  // counts = round(mean), noiseless
};

/// splitmix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic child seed from a root seed and a path of stream labels.
inline std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::int64_t> path) {
  std::uint64_t s = mix64(root);
  for (const auto p : path) s = mix64(s ^ static_cast<std::uint64_t>(p));
  return s;
}

inline std::int64_t sample_count(Rng& rng, double mean, Sampling mode) {
  if (mean <= 0.0) return 0;
  if (mode == Sampling::Expected) return static_cast<std::int64_t>(std::llround(mean));
  std::poisson_distribution<std::int64_t> dist(mean);
  return dist(rng);
}

}  // namespace qsky
