#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace svea {

using Rng = std::mt19937_64;

/// Independent generator for a named stream of a run ("env", "aug", "batch",
/// ...). Streams derived from the same seed never share state, so drawing
/// from one never perturbs another.
Rng make_stream(std::uint64_t seed, std::string_view stream);

inline double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

/// Integer uniformly drawn from the closed range [lo, hi].
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline double normal(Rng& rng, double mean, double stddev) {
  return std::normal_distribution<double>(mean, stddev)(rng);
}

/// 64-bit FNV-1a; stable across platforms, used for stream ids and config hashes.
std::uint64_t fnv1a(std::string_view bytes);

}  // namespace svea
