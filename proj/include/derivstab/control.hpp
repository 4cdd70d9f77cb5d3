#pragma once

// Control functions phi(a, b, c, d) >= 0 and the control series
//   phi~(a, b, c, d) = 1/2 sum_{n >= 0} 2^{-n} phi(2^n a, 2^n b, 2^n c, 2^n d).

#include <array>
#include <variant>

#include "derivstab/algebra.hpp"

namespace derivstab {

struct ConstantControl {
  double epsilon = 0.0;
};

/// beta (||a||^p + ||b||^p + ||c||^p + ||d||^p).
struct PowerControl {
  double beta = 0.0;
  double p = 0.0;
};

struct PowerTerm {
  double beta = 0.0;
  double p = 0.0;
};

/// sum_i beta_i ||x_i||^{p_i} over the four slots.
struct SeparablePowerSum {
  std::array<PowerTerm, 4> slots{};
};

/// 0^p is taken to be 0 for every exponent, so phi(0, 0, 0, 0) = 0 for the
/// power families.
class ControlFunction {
 public:
  using Kind = std::variant<ConstantControl, PowerControl, SeparablePowerSum>;

  /// Throws InvariantViolation unless every coefficient is finite and >= 0 and
  /// every exponent is < 1 (otherwise the control series diverges).
  explicit ControlFunction(Kind kind);

  static ControlFunction constant(double epsilon) { return ControlFunction(ConstantControl{epsilon}); }
  static ControlFunction power(double beta, double p) { return ControlFunction(PowerControl{beta, p}); }
  static ControlFunction separable(const std::array<PowerTerm, 4>& slots) {
    return ControlFunction(SeparablePowerSum{slots});
  }

  const Kind& kind() const noexcept { return kind_; }
  bool is_constant() const noexcept { return std::holds_alternative<ConstantControl>(kind_); }
  /// Growth exponent: phi(2x) <= 2^q phi(x), q < 1.
  double growth_exponent() const noexcept;

 private:
  Kind kind_;
};

using SlotNorms = std::array<double, 4>;

/// phi evaluated from the four slot norms.
double phi(const ControlFunction& cf, const SlotNorms& norms);
double phi(const ControlFunction& cf, const Element& a, const Element& b, const Element& c,
           const Element& d);

/// 2^{-n} phi(2^n a, 2^n b, 2^n c, 2^n d), computed without forming 2^n ||x||.
double scaled_phi(const ControlFunction& cf, const SlotNorms& norms, int n);

struct SeriesCertificate {
  double value = 0.0;
  bool closed_form = false;
  int truncation_index = 0;  // number of summed terms (0 for closed forms)
  double tail_bound = 0.0;   // bound on the omitted tail
};

/// Closed form for constant and power controls, certified truncation otherwise.
SeriesCertificate phi_tilde(const ControlFunction& cf, const SlotNorms& norms);
SeriesCertificate phi_tilde(const ControlFunction& cf, const Element& a, const Element& b,
                            const Element& c, const Element& d);

/// Truncated series for any kind. Stops once the geometric tail majorant
/// drops below 1e-12 of the running partial sum.
SeriesCertificate phi_tilde_series(const ControlFunction& cf, const SlotNorms& norms);

/// phi~(a, a, 0, 0): the stability bound on ||f(a) - mu(a)||.
double hyers_bound(const ControlFunction& cf, const Element& a);
double hyers_bound(const ControlFunction& cf, double a_norm);

/// 1/2 sum_{k=0}^{n-1} 2^{-k} phi(2^k a, 2^k a, 0, 0), n >= 1.
double partial_sum_bound(const ControlFunction& cf, const Element& a, int n);
double partial_sum_bound(const ControlFunction& cf, double a_norm, int n);

/// 1/2 sum_{k >= n} 2^{-k} phi(2^k a, 2^k a, 0, 0): distance bound between
/// f(2^n a) / 2^n and its limit.
double hyers_tail(const ControlFunction& cf, double a_norm, int n);

}  // namespace derivstab
