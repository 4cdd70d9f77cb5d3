#include "derivstab/noise.hpp"

#include <bit>
#include <cmath>
#include <numbers>

namespace derivstab {

std::uint64_t hash_key(std::uint64_t seed, std::span<const double> values) noexcept {
  std::uint64_t h = mix64(seed);
  for (double v : values) {
    if (v == 0.0) v = 0.0;  // -0 and +0 share a key
    h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
  }
  return h;
}

std::vector<double> quantize(std::span<const Scalar> v, double grid) {
  std::vector<double> out;
  out.reserve(2 * v.size());
  auto q = [grid](double x) {
    const double scaled = x / grid;
    if (!std::isfinite(scaled)) return x;
    return std::abs(scaled) < 0x1p52 ? std::nearbyint(scaled) : scaled;
  };
  for (const auto& z : v) {
    out.push_back(q(z.real()));
    out.push_back(q(z.imag()));
  }
  return out;
}

namespace {

// Uniform in (0, 1].
double unit_interval(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1p-53;
}

}  // namespace

CVector gaussian_vector(std::uint64_t key, std::size_t n) {
  // Box-Muller on counter-derived uniforms; std::normal_distribution is not
  // specified bit-for-bit across standard libraries.
  CVector out(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double u1 = unit_interval(mix64(key + 2 * k));
    const double u2 = unit_interval(mix64(key + 2 * k + 1));
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    out[k] = Scalar(r * std::cos(t), r * std::sin(t));
  }
  return out;
}

}  // namespace derivstab
