#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace mousetrail {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t fnv1a64(std::string_view text,
                                       std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed derivation: every random stream is keyed by (parent seed, stage name, index),
// so a stage can be rerun on its own and draw the same numbers.
inline constexpr std::uint64_t derive_seed(std::uint64_t parent, std::string_view stage,
                                           std::uint64_t index = 0) {
  return splitmix64(splitmix64(parent ^ fnv1a64(stage)) + index);
}

inline Rng make_rng(std::uint64_t parent, std::string_view stage, std::uint64_t index = 0) {
  return Rng(derive_seed(parent, stage, index));
}

// Uniform double in [0, 1) from the top 53 bits; unlike std::uniform_real_distribution
// this is identical across standard library implementations.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Uniform integer in [lo, hi].
inline std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<std::int64_t>(rng() % span);
}

// Box-Muller; consumes two uniforms per call.
inline double normal(Rng& rng, double mean, double stddev) {
  const double u1 = 1.0 - uniform01(rng);
  const double u2 = uniform01(rng);
  return mean + stddev * std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace mousetrail
