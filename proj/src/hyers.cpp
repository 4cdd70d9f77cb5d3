#include "derivstab/hyers.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "derivstab/errors.hpp"
#include "derivstab/parallel.hpp"
#include "derivstab/serialization.hpp"

namespace derivstab {

namespace {

template <class Evaluate>
ExtrapolationTrace extrapolate(const ApproximateMapPair& pair, const ControlFunction& cf,
                               const Element& a, int depth, Evaluate&& evaluate) {
  if (depth < 1 || depth > kMaxLog2Scale)
    throw InvariantViolation("extrapolation depth must be in [1, 512], got " + std::to_string(depth));
  if (a.algebra_ptr() != pair.source()) throw HandleMismatch("argument is not in the pair's algebra");

  std::vector<ModuleElement> terms;
  terms.reserve(depth + 1);
  std::vector<double> increments;
  increments.reserve(depth);
  for (int n = 0; n <= depth; ++n) {
    terms.push_back(evaluate(pair, a, n).mantissa);
    if (n > 0) increments.push_back(norm(terms[n] - terms[n - 1]));
  }
  ModuleElement limit = terms.back();
  const double gap = hyers_tail(cf, norm(a), depth);
  return ExtrapolationTrace{a, std::move(terms), std::move(increments), std::move(limit), gap};
}

}  // namespace

ExtrapolationTrace extrapolate_mu(const ApproximateMapPair& pair, const ControlFunction& cf,
                                  const Element& a, int depth) {
  return extrapolate(pair, cf, a, depth, evaluate_f);
}

ExtrapolationTrace extract_delta_limit(const ApproximateMapPair& pair, const ControlFunction& cf,
                                       const Element& c, int depth) {
  return extrapolate(pair, cf, c, depth, evaluate_g);
}

double AssembledMap::gap_at(const Element& a) const {
  double gap = 0.0;
  for (std::size_t j = 0; j < column_gaps.size(); ++j) gap += std::abs(a[j]) * column_gaps[j];
  return gap;
}

AssembledMap assemble_mu(const ApproximateMapPair& pair, const ControlFunction& cf, int depth) {
  const auto& alg = pair.source();
  const auto& target = pair.target();
  const std::size_t d = alg->dim();
  const Scalar i_unit{0.0, 1.0};

  // Slot 2j holds the trace at e_j, slot 2j + 1 the trace at i e_j.
  std::vector<std::optional<ExtrapolationTrace>> traces(2 * d);
  parallel_for(2 * d, [&](std::size_t slot) {
    const std::size_t j = slot / 2;
    Element arg = alg->basis(j);
    if (slot % 2 == 1) arg = i_unit * arg;
    traces[slot] = extrapolate_mu(pair, cf, arg, depth);
  });

  CMatrix matrix(target->dim(), d);
  std::vector<double> gaps(d);
  double residual = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    const ModuleElement& u = traces[2 * j]->limit;
    const ModuleElement& v = traces[2 * j + 1]->limit;
    residual = std::max(residual, norm(v - i_unit * u));
    // Complex-linear part of the real-linear map: (mu(e_j) - i mu(i e_j)) / 2.
    matrix.set_column(j, (0.5 * (u - i_unit * v)).coords());
    gaps[j] = 0.5 * (traces[2 * j]->certified_gap + traces[2 * j + 1]->certified_gap);
  }
  if (residual > kContaminationTolerance)
    throw ContaminationError("extrapolated map is not C-linear: J-commutation residual " +
                                 std::to_string(residual) + " exceeds 1e-8",
                             residual);
  return AssembledMap{LinearMap(alg, target, std::move(matrix)), std::move(gaps), residual, depth};
}

LinearMap extract_delta_algebraic(const LinearMap& mu) {
  const ModuleElement mu_one = mu(mu.source().unit());
  return LinearMap::from_basis(mu.target_ptr(),
                               [&](const Element& a) { return mu(a) - a * mu_one; });
}

int default_depth(const ControlFunction& cf) {
  if (cf.is_constant()) return 48;
  const double q = cf.growth_exponent();
  const int depth = static_cast<int>(std::ceil(12.0 * std::log2(10.0) / (1.0 - q)));
  return std::clamp(depth, 1, kMaxLog2Scale);
}

ScalarDecomposition scalar_decompose(Scalar gamma) {
  if (!std::isfinite(gamma.real()) || !std::isfinite(gamma.imag()))
    throw InvariantViolation("scalar_decompose needs a finite scalar");
  ScalarDecomposition out;
  out.gamma = gamma;
  const std::array<double, 2> theta{gamma.real(), gamma.imag()};
  for (std::size_t i = 0; i < 2; ++i) {
    const double whole = std::floor(theta[i]);
    double frac = theta[i] - whole;
    // Tiny negative theta rounds up to exactly 1.
    if (frac >= 1.0) frac = std::nextafter(1.0, 0.0);
    const double s = std::sqrt((1.0 - frac) * (1.0 + frac));
    out.integer_parts[i] = whole;
    out.fractional[i] = frac;
    out.unimodular[2 * i] = Scalar(frac, s);
    out.unimodular[2 * i + 1] = Scalar(frac, -s);
  }
  return out;
}

Scalar recombine(const ScalarDecomposition& d) {
  const Scalar g1 = 0.5 * (d.unimodular[0] + d.unimodular[1]);
  const Scalar g2 = 0.5 * (d.unimodular[2] + d.unimodular[3]);
  return Scalar(d.integer_parts[0] + g1.real(), d.integer_parts[1] + g2.real());
}

void write_trace_jsonl(std::ostream& out, const ExtrapolationTrace& trace) {
  for (std::size_t n = 0; n < trace.terms.size(); ++n) {
    Json line;
    line["n"] = n;
    line["coords"] = to_json(trace.terms[n].coords());
    line["increment_norm"] = n == 0 ? Json(nullptr) : Json(trace.increments[n - 1]);
    out << line.dump() << '\n';
  }
}

}  // namespace derivstab
