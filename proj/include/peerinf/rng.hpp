#pragma once

#include <cstdint>
#include <random>

namespace peerinf {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; a bijection on 64-bit words with good avalanche.
inline std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based seed for replication `rep` at grid point `n`. Independent
/// of execution order, so grid points and replications can run anywhere.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t n,
                                 std::uint64_t rep,
                                 std::uint64_t stream = 0) noexcept {
  std::uint64_t h = mix64(master);
  h = mix64(h ^ n);
  h = mix64(h ^ rep);
  return mix64(h ^ stream);
}

/// Uniform double in [0,1) with 53 random bits; platform independent.
inline double uniform01(Rng& rng) noexcept {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) noexcept { return uniform01(rng) < p; }

inline double standard_normal(Rng& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  return dist(rng);
}

}  // namespace peerinf
