#pragma once

// Exact generalized derivations and perturbed approximate pairs (f, g).

#include <cstdint>
#include <memory>
#include <variant>

#include "derivstab/algebra.hpp"

namespace derivstab {

/// Complex-linear map A -> X stored as an m x d matrix on coordinates.
class LinearMap {
 public:
  LinearMap(std::shared_ptr<const Algebra> source, std::shared_ptr<const Bimodule> target,
            CMatrix matrix);

  /// Matrix whose j-th column is the image of e_j under `f`.
  template <class F>
  static LinearMap from_basis(const std::shared_ptr<const Bimodule>& target, F&& f) {
    const auto& alg = target->algebra_ptr();
    CMatrix m(target->dim(), alg->dim());
    for (std::size_t j = 0; j < alg->dim(); ++j) m.set_column(j, f(alg->basis(j)).coords());
    return LinearMap(alg, target, std::move(m));
  }

  static LinearMap zero(const std::shared_ptr<const Bimodule>& target);
  /// Identity A -> A on a self-bimodule.
  static LinearMap identity(const std::shared_ptr<const Bimodule>& self);

  ModuleElement operator()(const Element& a) const;

  const Algebra& source() const noexcept { return *source_; }
  const std::shared_ptr<const Algebra>& source_ptr() const noexcept { return source_; }
  const std::shared_ptr<const Bimodule>& target_ptr() const noexcept { return target_; }
  const CMatrix& matrix() const noexcept { return matrix_; }

 private:
  std::shared_ptr<const Algebra> source_;
  std::shared_ptr<const Bimodule> target_;
  CMatrix matrix_;
};

inline constexpr double kPairTolerance = 1e-10;

/// mu with its associated derivation delta: mu(ab) = a mu(b) + delta(a) b.
struct GeneralizedDerivationPair {
  LinearMap mu;
  LinearMap delta;

  /// Throws InvariantViolation when the Leibniz rule, the generalized
  /// identity, or delta(e_i) = mu(e_i) - e_i mu(1) fails on some basis pair.
  void validate(double tolerance = kPairTolerance) const;
};

/// mu(a) = x a - a y, delta(a) = x a - a x.
GeneralizedDerivationPair inner_generalized(const ModuleElement& x, const ModuleElement& y);

/// mu(a) = z a, delta(a) = z a - a z. Self-bimodule only.
GeneralizedDerivationPair right_multiplier(const std::shared_ptr<const Bimodule>& self,
                                           const Element& z);

GeneralizedDerivationPair zero_pair(const std::shared_ptr<const Bimodule>& target);

enum class ScaleMode {
  /// Noise direction depends only on v / ||v||.
  ScaleInvariantDirection,
  /// Noise direction is keyed on v itself and changes under dyadic scaling.
  ScaleSensitiveDirection,
};

struct PerturbationSpec;

struct ZeroNoise {};
struct BoundedNoise {
  double epsilon = 0.0;
};
struct PowerNoise {
  double beta = 0.0;
  double p = 0.0;  // p < 1
};
/// Inner noise damped by |v_slot| / max_k |v_k|: only arguments with a
/// nonzero `slot` coordinate are perturbed.
struct SlotTargeted {
  std::size_t slot = 0;
  std::shared_ptr<const PerturbationSpec> inner;
};

/// Deterministic nonlinear perturbation P: A -> X with P(0) = 0.
struct PerturbationSpec {
  std::variant<ZeroNoise, BoundedNoise, PowerNoise, SlotTargeted> kind = ZeroNoise{};
  std::uint64_t seed = 0;
  ScaleMode scale_mode = ScaleMode::ScaleInvariantDirection;

  static PerturbationSpec zero() { return {}; }
  static PerturbationSpec bounded(double epsilon, std::uint64_t seed,
                                  ScaleMode mode = ScaleMode::ScaleInvariantDirection);
  static PerturbationSpec power(double beta, double p, std::uint64_t seed,
                                ScaleMode mode = ScaleMode::ScaleInvariantDirection);
  static PerturbationSpec slot_targeted(std::size_t slot, PerturbationSpec inner);

  /// Throws InvariantViolation on negative/non-finite parameters or p >= 1.
  void validate(std::size_t algebra_dim) const;

  /// Upper bound on ||P(v)|| given ||v||.
  double bound(double argument_norm) const;
};

inline constexpr double kDirectionGrid = 1e-6;
inline constexpr int kMaxLog2Scale = 512;

/// 2^{-n} P(2^n v).
ModuleElement scaled_perturbation(const PerturbationSpec& spec, const Bimodule& target,
                                  const Element& v, int log2_scale);

/// A value mantissa * 2^exponent whose magnitude may exceed double range.
struct ScaledModuleElement {
  ModuleElement mantissa;
  int exponent = 0;

  /// Throws OverflowError when some coordinate would not be finite.
  ModuleElement materialize() const;
};

/// f = mu_exact + P_f and g = delta_exact + P_g.
struct ApproximateMapPair {
  GeneralizedDerivationPair exact;
  PerturbationSpec f_perturbation;
  PerturbationSpec g_perturbation;

  const std::shared_ptr<const Bimodule>& target() const noexcept { return exact.mu.target_ptr(); }
  const std::shared_ptr<const Algebra>& source() const noexcept { return exact.mu.source_ptr(); }
};

/// f(2^n a) as (f(2^n a) / 2^n, n). 0 <= n <= 512.
ScaledModuleElement evaluate_f(const ApproximateMapPair& pair, const Element& a, int log2_scale);
/// g(2^n c) as (g(2^n c) / 2^n, n).
ScaledModuleElement evaluate_g(const ApproximateMapPair& pair, const Element& c, int log2_scale);

/// f(a) and g(c) at unit scale.
ModuleElement f_value(const ApproximateMapPair& pair, const Element& a);
ModuleElement g_value(const ApproximateMapPair& pair, const Element& c);

}  // namespace derivstab
