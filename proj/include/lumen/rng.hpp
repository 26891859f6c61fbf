#pragma once

#include <cstdint>
#include <random>

namespace lumen {

using Rng = std::mt19937_64;

// SplitMix64 mixing step. Used for seed derivation so that child streams are
// decorrelated from the master seed and from each other.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Pure function of (master, index): environment i always gets the same seed.
inline std::uint64_t child_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(master ^ splitmix64(index + 1));
}

// Uniform in [0, 1) built from the top 53 bits of the generator output.
// std::uniform_real_distribution is implementation-defined; this is not,
// so seeded runs produce identical streams on any platform.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(Rng& rng, double lo, double hi) {
  return lo + uniform_unit(rng) * (hi - lo);
}

// Uniform integer in [0, n) via the multiply-shift reduction.
inline std::uint32_t uniform_index(Rng& rng, std::uint32_t n) {
  const std::uint64_t word = rng() >> 32;
  return static_cast<std::uint32_t>((word * n) >> 32);
}

}  // namespace lumen
