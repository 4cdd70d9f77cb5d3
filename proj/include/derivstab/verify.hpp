#pragma once

// Sampled residual checks for approximate pairs and assembled maps.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "derivstab/control.hpp"
#include "derivstab/hyers.hpp"
#include "derivstab/maps.hpp"
#include "derivstab/serialization.hpp"

namespace derivstab {

struct Metric {
  std::string name;
  double value = 0.0;
};

struct ResidualReport {
  std::string check;
  std::size_t samples = 0;
  double max_residual = 0.0;
  Json witness;  // inputs at the first index attaining max_residual
  double threshold = 0.0;
  bool passed = false;
  std::vector<Metric> metrics;
  Json profile;  // optional per-check series, omitted from JSON when null

  /// Throws std::out_of_range for unknown names.
  double metric(std::string_view name) const;
};

/// {check, samples, max_residual, witness, threshold, passed, metrics[, profile]}
Json to_json(const ResidualReport& report);

/// Seeded complex-Gaussian samples. Slot s of sample i depends only on
/// (seed, i, s). With `norm_ladder`, sample i is rescaled to norm
/// 2^{-4 + (i mod 13)}. Slots switched off in `slots` are zero.
struct SamplerConfig {
  std::uint64_t seed = 0;
  std::size_t count = 1000;
  bool norm_ladder = false;
  std::array<bool, 4> slots{true, true, true, true};  // a, b, c, d
};

Element sample_element(const std::shared_ptr<const Algebra>& algebra, const SamplerConfig& config,
                       std::size_t index, std::size_t slot);

/// The lambda values tested in the master inequality.
struct LambdaSet {
  enum class Kind { FullT, OneAndI };
  Kind kind = Kind::FullT;
  int points = 8;  // FullT only: exp(2 pi i j / points)

  static LambdaSet full_t(int points) { return {Kind::FullT, points}; }
  static LambdaSet one_and_i() { return {Kind::OneAndI, 2}; }
  std::vector<Scalar> values() const;
};

inline constexpr double kMasterSlack = 1e-12;
inline constexpr double kStabilitySlack = 1e-9;
inline constexpr double kIdentityTolerance = 1e-10;
inline constexpr double kStarTolerance = 1e-9;

/// Residual of ||f(la + lb + cd) - l f(a) - l f(b) - c f(d) - g(c) d|| - phi(a, b, c, d),
/// divided by max(1, sum of the term norms). Passes when every residual is <= 1e-12.
ResidualReport residual_master_inequality(const ApproximateMapPair& pair, const ControlFunction& cf,
                                          const SamplerConfig& sampler, const LambdaSet& lambdas);

/// ||f(a) - mu(a)|| - phi~(a, a, 0, 0) - gap(a) on the a-slot samples, where
/// gap(a) bounds the distance from the assembled map to its limit. Threshold 1e-9.
ResidualReport certify_stability_bound(const ApproximateMapPair& pair, const ControlFunction& cf,
                                       const AssembledMap& mu, const SamplerConfig& sampler);

/// max over basis pairs of ||mu(e_i e_j) - e_i mu(e_j) - delta(e_i) e_j||.
ResidualReport check_generalized_derivation(const LinearMap& mu, const LinearMap& delta,
                                            double threshold = kIdentityTolerance);

/// max over basis pairs of ||delta(e_i e_j) - e_i delta(e_j) - delta(e_i) e_j||.
ResidualReport check_leibniz(const LinearMap& delta, double threshold = kIdentityTolerance);

/// Thresholds for maps built from an extrapolation: 1e-10 plus the propagated
/// certified gaps of mu and of delta(a) = mu(a) - a mu(1).
struct CertificateThresholds {
  double generalized_derivation = kIdentityTolerance;
  double leibniz = kIdentityTolerance;
};
CertificateThresholds certificate_thresholds(const AssembledMap& mu);

struct UnitaryDecomposition {
  Element element;
  std::vector<std::pair<Scalar, Element>> terms;  // at most 4
};

/// a = a1 + i a2 with self-adjoint a1, a2; each a_k = s (u + u*) / 2 with
/// u = b + i sqrt(1 - b^2), b = a_k / s, s = max |eigenvalue of a_k|.
/// Needs a matrix algebra with involution.
UnitaryDecomposition unitary_decompose(const Element& a);

struct StarSampling {
  std::uint64_t seed = 0;
  std::size_t unitaries = 200;
  int max_log2_scale = 48;
};

/// Conclusion: max_k ||mu(e_k*) - mu(e_k)*|| against 1e-9. The hypothesis
/// ||f(2^n u*) - f(2^n u)*|| <= phi(2^n u, 2^n u, 0, 0) on sampled unitaries
/// and n <= min(depth, max_log2_scale) is reported in the metrics only.
ResidualReport check_star_preservation(const ApproximateMapPair& pair, const ControlFunction& cf,
                                       const LinearMap& mu, const StarSampling& sampling, int depth);

struct SuperstabilityConfig {
  int m_max = 16;
  int n_max = 48;
  SamplerConfig samples{0, 64};
  std::vector<double> ladder{1, 2, 4, 8, 16, 32, 64, 128, 256};
  std::size_t growth_samples = 16;
};

inline constexpr double kGrowthSlope = 0.9;

/// (i) max of ||f(2^m a) - 2^m f(a)|| - (2 + 2^{m+1}) eps / 2^{n_max} over
/// samples and m <= m_max; the bound is smallest at n = n_max so that n
/// covers every n <= n_max. (ii) master-inequality LHS at (0, 0, R 1, d0)
/// along the ladder, with its log-log slope. Passes when (i) holds and no
/// growth is detected. Needs a constant control.
ResidualReport superstability_probe(const ApproximateMapPair& pair, const ControlFunction& cf,
                                    const SuperstabilityConfig& config);

}  // namespace derivstab
