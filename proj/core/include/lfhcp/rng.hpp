#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace lfhcp {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// FNV-1a over a stage tag.
constexpr std::uint64_t tag_hash(std::string_view tag) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// child = mix(mix(master ^ hash(tag)) ^ index). Partial re-runs of one item
/// reproduce the same stream.
constexpr std::uint64_t child_seed(std::uint64_t master, std::string_view stage,
                                   std::uint64_t index) {
  return mix64(mix64(master ^ tag_hash(stage)) ^ mix64(index));
}

inline Rng make_rng(std::uint64_t master, std::string_view stage, std::uint64_t index) {
  return Rng(child_seed(master, stage, index));
}

/// Uniform draw strictly inside (0, 1).
inline double open_unit(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = u(rng);
  while (x <= 0.0) x = u(rng);
  return x;
}

inline double standard_gumbel(Rng& rng) { return -std::log(-std::log(open_unit(rng))); }

}  // namespace lfhcp
