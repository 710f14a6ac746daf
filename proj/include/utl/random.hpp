#pragma once

#include <cstdint>
#include <random>

namespace utl {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer; used to derive independent stream seeds from one user seed.
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) { return Rng(mix_seed(seed, stream)); }

// Stream identifiers, one per independent draw in a generated experiment.
namespace stream {
inline constexpr std::uint64_t kTransform = 1;
inline constexpr std::uint64_t kCodes = 2;
inline constexpr std::uint64_t kNoise = 3;
inline constexpr std::uint64_t kInit = 4;
}  // namespace stream

}  // namespace utl
