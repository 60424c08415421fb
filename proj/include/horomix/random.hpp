#pragma once

#include <cstdint>
#include <random>

namespace horomix {

/// Derive an independent seed from a parent seed and a label.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label) {
  // splitmix64 finalizer
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (label + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Engine for the sample at `index` of the stream identified by (seed, tag).
/// Every Monte Carlo sample owns its engine, so results do not depend on how
/// indices are split across workers.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index, std::uint64_t tag = 0) {
  return std::mt19937_64(derive_seed(derive_seed(seed, tag), index));
}

/// Uniform double in [0, 1).
inline double uniform01(std::mt19937_64& rng) {
  return std::generate_canonical<double, 53>(rng);
}

}  // namespace horomix
