#include "derivstab/control.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "derivstab/errors.hpp"

namespace derivstab {

namespace {

void check_power(double beta, double p, const char* what) {
  if (!(beta >= 0.0) || !std::isfinite(beta))
    throw InvariantViolation(std::string(what) + ": beta must be finite and >= 0");
  if (!std::isfinite(p) || !(p < 1.0))
    throw InvariantViolation(std::string(what) + ": exponent p = " + std::to_string(p) +
                             " violates p < 1; the control series sum 2^{-n} phi(2^n x) diverges");
}

// 2^{-n} beta (2^n x)^p with 0^p = 0.
double power_term(double beta, double p, double x, int n) {
  if (beta == 0.0 || !(x > 0.0)) return 0.0;
  return beta * std::pow(x, p) * std::exp2(n * (p - 1.0));
}

// 1/2 sum_{k >= n} 2^{-k} beta (2^k x)^p
double power_tail(double beta, double p, double x, int n) {
  return 0.5 * power_term(beta, p, x, n) / (1.0 - std::exp2(p - 1.0));
}

// Exact 1/2 sum_{k >= n} 2^{-k} phi(2^k x).
double series_tail(const ControlFunction& cf, const SlotNorms& norms, int n) {
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ConstantControl>) {
          return std::ldexp(k.epsilon, -n);
        } else if constexpr (std::is_same_v<K, PowerControl>) {
          double sum = 0.0;
          for (double x : norms) sum += power_tail(k.beta, k.p, x, n);
          return sum;
        } else {
          double sum = 0.0;
          for (std::size_t i = 0; i < 4; ++i)
            sum += power_tail(k.slots[i].beta, k.slots[i].p, norms[i], n);
          return sum;
        }
      },
      cf.kind());
}

}  // namespace

ControlFunction::ControlFunction(Kind kind) : kind_(std::move(kind)) {
  std::visit(
      [](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ConstantControl>) {
          if (!(k.epsilon >= 0.0) || !std::isfinite(k.epsilon))
            throw InvariantViolation("constant control: epsilon must be finite and >= 0");
        } else if constexpr (std::is_same_v<K, PowerControl>) {
          check_power(k.beta, k.p, "power control");
        } else {
          for (const auto& s : k.slots) check_power(s.beta, s.p, "separable control");
        }
      },
      kind_);
}

double ControlFunction::growth_exponent() const noexcept {
  return std::visit(
      [](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ConstantControl>) {
          return 0.0;
        } else if constexpr (std::is_same_v<K, PowerControl>) {
          return k.p;
        } else {
          double q = -INFINITY;
          for (const auto& s : k.slots)
            if (s.beta > 0.0) q = std::max(q, s.p);
          return std::isfinite(q) ? q : 0.0;
        }
      },
      kind_);
}

double scaled_phi(const ControlFunction& cf, const SlotNorms& norms, int n) {
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ConstantControl>) {
          return std::ldexp(k.epsilon, -n);
        } else if constexpr (std::is_same_v<K, PowerControl>) {
          double sum = 0.0;
          for (double x : norms) sum += power_term(k.beta, k.p, x, n);
          return sum;
        } else {
          double sum = 0.0;
          for (std::size_t i = 0; i < 4; ++i)
            sum += power_term(k.slots[i].beta, k.slots[i].p, norms[i], n);
          return sum;
        }
      },
      cf.kind());
}

double phi(const ControlFunction& cf, const SlotNorms& norms) { return scaled_phi(cf, norms, 0); }

double phi(const ControlFunction& cf, const Element& a, const Element& b, const Element& c,
           const Element& d) {
  return phi(cf, {norm(a), norm(b), norm(c), norm(d)});
}

SeriesCertificate phi_tilde_series(const ControlFunction& cf, const SlotNorms& norms) {
  constexpr int kMaxTerms = 1 << 22;
  const double ratio = 1.0 / (1.0 - std::exp2(cf.growth_exponent() - 1.0));
  SeriesCertificate cert;
  double partial = 0.0;
  for (int n = 0; n < kMaxTerms; ++n) {
    partial += 0.5 * scaled_phi(cf, norms, n);
    const double majorant = 0.5 * scaled_phi(cf, norms, n + 1) * ratio;
    if (majorant < 1e-12 * (partial + 1e-300)) {
      cert.value = partial;
      cert.truncation_index = n + 1;
      cert.tail_bound = majorant;
      return cert;
    }
  }
  throw ConvergenceFailure("control series did not reach its truncation criterion");
}

SeriesCertificate phi_tilde(const ControlFunction& cf, const SlotNorms& norms) {
  if (std::holds_alternative<SeparablePowerSum>(cf.kind())) return phi_tilde_series(cf, norms);
  SeriesCertificate cert;
  cert.closed_form = true;
  cert.value = series_tail(cf, norms, 0);
  return cert;
}

SeriesCertificate phi_tilde(const ControlFunction& cf, const Element& a, const Element& b,
                            const Element& c, const Element& d) {
  return phi_tilde(cf, {norm(a), norm(b), norm(c), norm(d)});
}

double hyers_bound(const ControlFunction& cf, double a_norm) {
  return phi_tilde(cf, {a_norm, a_norm, 0.0, 0.0}).value;
}

double hyers_bound(const ControlFunction& cf, const Element& a) { return hyers_bound(cf, norm(a)); }

double partial_sum_bound(const ControlFunction& cf, double a_norm, int n) {
  if (n < 1) throw InvariantViolation("partial_sum_bound needs n >= 1");
  const SlotNorms norms{a_norm, a_norm, 0.0, 0.0};
  double sum = 0.0;
  for (int k = 0; k < n; ++k) sum += 0.5 * scaled_phi(cf, norms, k);
  // The exact partial sums never exceed the full series; clamp away roundoff.
  return std::min(sum, hyers_bound(cf, a_norm));
}

double partial_sum_bound(const ControlFunction& cf, const Element& a, int n) {
  return partial_sum_bound(cf, norm(a), n);
}

double hyers_tail(const ControlFunction& cf, double a_norm, int n) {
  return series_tail(cf, {a_norm, a_norm, 0.0, 0.0}, n);
}

}  // namespace derivstab
