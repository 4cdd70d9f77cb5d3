#pragma once

// Counter-based pseudo-random directions: a pure function of (seed, key), so
// noise values are bit-stable across runs and independent of call order.

#include <cstdint>
#include <span>
#include <vector>

#include "derivstab/linalg.hpp"

namespace derivstab {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Hash of `seed` and the bit patterns of `values`.
std::uint64_t hash_key(std::uint64_t seed, std::span<const double> values) noexcept;

/// Quantizes each real/imaginary part to a grid of spacing `grid`. Values
/// whose grid index is not representable exactly are kept as they are.
std::vector<double> quantize(std::span<const Scalar> v, double grid);

/// Standard complex Gaussian vector of length `n` determined by `key`.
CVector gaussian_vector(std::uint64_t key, std::size_t n);

}  // namespace derivstab
