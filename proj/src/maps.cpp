#include "derivstab/maps.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "derivstab/errors.hpp"
#include "derivstab/noise.hpp"

namespace derivstab {

// ---------------------------------------------------------------- LinearMap

LinearMap::LinearMap(std::shared_ptr<const Algebra> source, std::shared_ptr<const Bimodule> target,
                     CMatrix matrix)
    : source_(std::move(source)), target_(std::move(target)), matrix_(std::move(matrix)) {
  if (!source_ || !target_) throw InvariantViolation("linear map needs source and target");
  if (target_->algebra_ptr() != source_)
    throw HandleMismatch("linear map target is not a bimodule over its source");
  if (matrix_.rows() != target_->dim() || matrix_.cols() != source_->dim())
    throw InvariantViolation("linear map matrix has the wrong shape");
  for (const auto& z : matrix_.data())
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw InvariantViolation("linear map entries must be finite");
}

LinearMap LinearMap::zero(const std::shared_ptr<const Bimodule>& target) {
  return LinearMap(target->algebra_ptr(), target, CMatrix(target->dim(), target->algebra().dim()));
}

LinearMap LinearMap::identity(const std::shared_ptr<const Bimodule>& self) {
  if (!self->is_self()) throw HandleMismatch("identity map needs a self-bimodule");
  return LinearMap(self->algebra_ptr(), self, CMatrix::identity(self->dim()));
}

ModuleElement LinearMap::operator()(const Element& a) const {
  if (a.algebra_ptr() != source_) throw HandleMismatch("argument is not in the map's source algebra");
  return ModuleElement(target_, matrix_.apply(a.coords()));
}

// ---------------------------------------------------------------- pairs

void GeneralizedDerivationPair::validate(double tolerance) const {
  if (mu.source_ptr() != delta.source_ptr() || mu.target_ptr() != delta.target_ptr())
    throw HandleMismatch("mu and delta must share source and target");
  const auto& alg = mu.source();
  const Element one = alg.unit();
  const ModuleElement mu_one = mu(one);
  for (std::size_t i = 0; i < alg.dim(); ++i) {
    const Element ei = alg.basis(i);
    const ModuleElement d_ei = delta(ei);
    if (norm(d_ei - (mu(ei) - ei * mu_one)) > tolerance)
      throw InvariantViolation("delta(e_" + std::to_string(i) + ") != mu(e_i) - e_i mu(1)");
    for (std::size_t j = 0; j < alg.dim(); ++j) {
      const Element ej = alg.basis(j);
      const Element eiej = ei * ej;
      if (norm(delta(eiej) - ei * delta(ej) - d_ei * ej) > tolerance)
        throw InvariantViolation("delta violates the Leibniz rule on (e_" + std::to_string(i) +
                                 ", e_" + std::to_string(j) + ")");
      if (norm(mu(eiej) - ei * mu(ej) - d_ei * ej) > tolerance)
        throw InvariantViolation("mu(ab) != a mu(b) + delta(a) b on (e_" + std::to_string(i) +
                                 ", e_" + std::to_string(j) + ")");
    }
  }
}

GeneralizedDerivationPair inner_generalized(const ModuleElement& x, const ModuleElement& y) {
  if (x.bimodule_ptr() != y.bimodule_ptr()) throw HandleMismatch("x and y live in different bimodules");
  const auto& target = x.bimodule_ptr();
  GeneralizedDerivationPair pair{
      LinearMap::from_basis(target, [&](const Element& a) { return x * a - a * y; }),
      LinearMap::from_basis(target, [&](const Element& a) { return x * a - a * x; })};
  pair.validate();
  return pair;
}

GeneralizedDerivationPair right_multiplier(const std::shared_ptr<const Bimodule>& self,
                                           const Element& z) {
  if (!self->is_self()) throw HandleMismatch("right multipliers need the self-bimodule");
  GeneralizedDerivationPair pair{
      LinearMap::from_basis(self, [&](const Element& a) { return as_module(self, z * a); }),
      LinearMap::from_basis(self, [&](const Element& a) { return as_module(self, z * a - a * z); })};
  pair.validate();
  return pair;
}

GeneralizedDerivationPair zero_pair(const std::shared_ptr<const Bimodule>& target) {
  return {LinearMap::zero(target), LinearMap::zero(target)};
}

// ---------------------------------------------------------------- perturbations

PerturbationSpec PerturbationSpec::bounded(double epsilon, std::uint64_t seed, ScaleMode mode) {
  return {BoundedNoise{epsilon}, seed, mode};
}

PerturbationSpec PerturbationSpec::power(double beta, double p, std::uint64_t seed, ScaleMode mode) {
  return {PowerNoise{beta, p}, seed, mode};
}

PerturbationSpec PerturbationSpec::slot_targeted(std::size_t slot, PerturbationSpec inner) {
  PerturbationSpec spec;
  spec.kind = SlotTargeted{slot, std::make_shared<const PerturbationSpec>(std::move(inner))};
  return spec;
}

void PerturbationSpec::validate(std::size_t algebra_dim) const {
  std::visit(
      [&](const auto& k) {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, BoundedNoise>) {
          if (!(k.epsilon >= 0.0) || !std::isfinite(k.epsilon))
            throw InvariantViolation("bounded noise needs a finite epsilon >= 0");
        } else if constexpr (std::is_same_v<K, PowerNoise>) {
          if (!(k.beta >= 0.0) || !std::isfinite(k.beta))
            throw InvariantViolation("power noise needs a finite beta >= 0");
          if (!std::isfinite(k.p) || !(k.p < 1.0))
            throw InvariantViolation("power noise exponent p must be finite and < 1, got " +
                                     std::to_string(k.p));
        } else if constexpr (std::is_same_v<K, SlotTargeted>) {
          if (!k.inner) throw InvariantViolation("slot-targeted noise needs an inner model");
          if (k.slot >= algebra_dim)
            throw InvariantViolation("slot " + std::to_string(k.slot) + " out of range");
          k.inner->validate(algebra_dim);
        }
      },
      kind);
}

double PerturbationSpec::bound(double argument_norm) const {
  if (!(argument_norm > 0.0)) return 0.0;
  return std::visit(
      [&](const auto& k) -> double {
        using K = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<K, ZeroNoise>) {
          return 0.0;
        } else if constexpr (std::is_same_v<K, BoundedNoise>) {
          return k.epsilon;
        } else if constexpr (std::is_same_v<K, PowerNoise>) {
          return k.beta * std::pow(argument_norm, k.p);
        } else {
          return k.inner->bound(argument_norm);
        }
      },
      kind);
}

namespace {

CVector scaled_argument(const Element& v, int log2_scale) {
  CVector w(v.coords().begin(), v.coords().end());
  for (auto& z : w) {
    z = Scalar(std::ldexp(z.real(), log2_scale), std::ldexp(z.imag(), log2_scale));
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw OverflowError("2^" + std::to_string(log2_scale) + " a overflows double range");
  }
  return w;
}

ModuleElement direction(const PerturbationSpec& spec, const Bimodule& target, const Element& v,
                        double v_norm, int log2_scale) {
  std::vector<double> key_values;
  if (spec.scale_mode == ScaleMode::ScaleInvariantDirection) {
    CVector unit(v.coords().begin(), v.coords().end());
    for (auto& z : unit) z /= v_norm;
    key_values = quantize(unit, kDirectionGrid);
  } else {
    key_values = quantize(scaled_argument(v, log2_scale), kDirectionGrid);
  }
  CVector g = gaussian_vector(hash_key(spec.seed, key_values), target.dim());
  const double gn = target.norm(g);
  for (auto& z : g) z /= gn;
  return target.element(std::move(g));
}

}  // namespace

ModuleElement scaled_perturbation(const PerturbationSpec& spec, const Bimodule& target,
                                  const Element& v, int log2_scale) {
  if (v.is_zero() || std::holds_alternative<ZeroNoise>(spec.kind)) return target.zero();

  if (const auto* slot = std::get_if<SlotTargeted>(&spec.kind)) {
    double largest = 0.0;
    for (const auto& z : v.coords()) largest = std::max(largest, std::abs(z));
    const double weight = std::abs(v[slot->slot]) / largest;
    if (weight == 0.0) return target.zero();
    return weight * scaled_perturbation(*slot->inner, target, v, log2_scale);
  }

  const double v_norm = norm(v);
  double magnitude = 0.0;
  if (const auto* b = std::get_if<BoundedNoise>(&spec.kind)) {
    magnitude = std::ldexp(b->epsilon, -log2_scale);
  } else if (const auto* p = std::get_if<PowerNoise>(&spec.kind)) {
    // beta ||2^n v||^p / 2^n = beta ||v||^p 2^{n(p-1)}
    magnitude = (p->beta * std::pow(v_norm, p->p)) * std::exp2(log2_scale * (p->p - 1.0));
  }
  if (magnitude == 0.0) return target.zero();
  return magnitude * direction(spec, target, v, v_norm, log2_scale);
}

ModuleElement ScaledModuleElement::materialize() const {
  CVector out(mantissa.coords().begin(), mantissa.coords().end());
  for (auto& z : out) {
    z = Scalar(std::ldexp(z.real(), exponent), std::ldexp(z.imag(), exponent));
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      throw OverflowError("materializing 2^" + std::to_string(exponent) + " * value overflows");
  }
  return ModuleElement(mantissa.bimodule_ptr(), std::move(out));
}

namespace {

ScaledModuleElement evaluate(const LinearMap& exact, const PerturbationSpec& noise,
                             const Element& a, int log2_scale) {
  if (log2_scale < 0 || log2_scale > kMaxLog2Scale)
    throw InvariantViolation("log2 scale must be in [0, 512], got " + std::to_string(log2_scale));
  // mu(2^n a) / 2^n == mu(a) exactly: dyadic scaling commutes with rounding.
  return {exact(a) + scaled_perturbation(noise, *exact.target_ptr(), a, log2_scale), log2_scale};
}

}  // namespace

ScaledModuleElement evaluate_f(const ApproximateMapPair& pair, const Element& a, int log2_scale) {
  return evaluate(pair.exact.mu, pair.f_perturbation, a, log2_scale);
}

ScaledModuleElement evaluate_g(const ApproximateMapPair& pair, const Element& c, int log2_scale) {
  return evaluate(pair.exact.delta, pair.g_perturbation, c, log2_scale);
}

ModuleElement f_value(const ApproximateMapPair& pair, const Element& a) {
  return evaluate_f(pair, a, 0).mantissa;
}

ModuleElement g_value(const ApproximateMapPair& pair, const Element& c) {
  return evaluate_g(pair, c, 0).mantissa;
}

}  // namespace derivstab
