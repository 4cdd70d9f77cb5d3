#include "derivstab/verify.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "derivstab/errors.hpp"
#include "derivstab/noise.hpp"
#include "derivstab/parallel.hpp"

namespace derivstab {

namespace {

struct Sampled {
  double residual = -std::numeric_limits<double>::infinity();
  Json witness;
};

/// First index attaining the maximum, so the witness does not depend on
/// which worker finished first.
std::size_t argmax(const std::vector<Sampled>& results) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i)
    if (results[i].residual > results[best].residual) best = i;
  return best;
}

ResidualReport reduce(std::string check, std::vector<Sampled> results, double threshold) {
  ResidualReport report;
  report.check = std::move(check);
  report.samples = results.size();
  report.threshold = threshold;
  if (!results.empty()) {
    const std::size_t best = argmax(results);
    report.max_residual = results[best].residual;
    report.witness = std::move(results[best].witness);
  }
  report.passed = report.max_residual <= threshold;
  return report;
}

Json coords(const Element& a) { return to_json(a.coords()); }

struct MasterTerms {
  double lhs = 0.0;
  double scale = 0.0;  // sum of the norms of the combined terms
};

/// ||f(la + lb + cd) - l f(a) - l f(b) - c f(d) - g(c) d||.
MasterTerms master_terms(const ApproximateMapPair& pair, Scalar lambda, const Element& a,
                         const Element& b, const Element& c, const Element& d) {
  const ModuleElement t0 = f_value(pair, lambda * a + lambda * b + c * d);
  const ModuleElement t1 = lambda * f_value(pair, a);
  const ModuleElement t2 = lambda * f_value(pair, b);
  const ModuleElement t3 = c * f_value(pair, d);
  const ModuleElement t4 = g_value(pair, c) * d;
  return {norm(t0 - t1 - t2 - t3 - t4), norm(t0) + norm(t1) + norm(t2) + norm(t3) + norm(t4)};
}

double log2_slope(const std::vector<std::pair<double, double>>& points) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (const auto& [r, value] : points) {
    if (!(value > 0.0)) continue;
    const double x = std::log2(r);
    const double y = std::log2(value);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return 0.0;
  const double denom = n * sxx - sx * sx;
  return denom > 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
}

}  // namespace

double ResidualReport::metric(std::string_view name) const {
  for (const auto& m : metrics)
    if (m.name == name) return m.value;
  throw std::out_of_range("no metric named " + std::string(name));
}

Json to_json(const ResidualReport& report) {
  Json out;
  out["check"] = report.check;
  out["samples"] = report.samples;
  out["max_residual"] = report.max_residual;
  out["witness"] = report.witness;
  out["threshold"] = report.threshold;
  out["passed"] = report.passed;
  Json metrics = Json::object();
  for (const auto& m : report.metrics) metrics[m.name] = m.value;
  out["metrics"] = std::move(metrics);
  if (!report.profile.is_null()) out["profile"] = report.profile;
  return out;
}

Element sample_element(const std::shared_ptr<const Algebra>& algebra, const SamplerConfig& config,
                       std::size_t index, std::size_t slot) {
  if (!config.slots[slot]) return algebra->zero();
  const std::uint64_t key = mix64(config.seed ^ mix64(4 * static_cast<std::uint64_t>(index) + slot));
  Element a = algebra->element(gaussian_vector(key, algebra->dim()));
  if (config.norm_ladder) {
    const double target = std::ldexp(1.0, -4 + static_cast<int>(index % 13));
    const double n = norm(a);
    if (n > 0.0) a = Scalar(target / n) * a;
  }
  return a;
}

std::vector<Scalar> LambdaSet::values() const {
  if (kind == Kind::OneAndI) return {Scalar(1.0, 0.0), Scalar(0.0, 1.0)};
  if (points < 1) throw InvariantViolation("lambda set needs at least one point");
  std::vector<Scalar> out;
  out.reserve(points);
  out.emplace_back(1.0, 0.0);
  for (int j = 1; j < points; ++j) out.push_back(std::polar(1.0, 2.0 * std::numbers::pi * j / points));
  return out;
}

ResidualReport residual_master_inequality(const ApproximateMapPair& pair, const ControlFunction& cf,
                                          const SamplerConfig& sampler, const LambdaSet& lambdas) {
  const auto& alg = pair.source();
  const std::vector<Scalar> ls = lambdas.values();
  std::vector<Sampled> results(sampler.count);
  parallel_for(sampler.count, [&](std::size_t i) {
    const Element a = sample_element(alg, sampler, i, 0);
    const Element b = sample_element(alg, sampler, i, 1);
    const Element c = sample_element(alg, sampler, i, 2);
    const Element d = sample_element(alg, sampler, i, 3);
    const double bound = phi(cf, a, b, c, d);
    Sampled& out = results[i];
    for (const Scalar lambda : ls) {
      const MasterTerms t = master_terms(pair, lambda, a, b, c, d);
      const double r = (t.lhs - bound) / std::max(1.0, t.scale);
      if (r > out.residual) {
        out.residual = r;
        out.witness = Json{{"index", i},     {"lambda", to_json(lambda)}, {"a", coords(a)},
                           {"b", coords(b)}, {"c", coords(c)},            {"d", coords(d)},
                           {"lhs", t.lhs},   {"phi", bound}};
      }
    }
  });
  ResidualReport report = reduce("master_inequality", std::move(results), kMasterSlack);
  report.metrics.push_back({"lambda_points", static_cast<double>(ls.size())});
  return report;
}

ResidualReport certify_stability_bound(const ApproximateMapPair& pair, const ControlFunction& cf,
                                       const AssembledMap& mu, const SamplerConfig& sampler) {
  const auto& alg = pair.source();
  SamplerConfig a_only = sampler;
  a_only.slots = {true, false, false, false};
  std::vector<Sampled> results(sampler.count);
  std::vector<std::pair<double, double>> observed(sampler.count);  // (deviation, bound)
  parallel_for(sampler.count, [&](std::size_t i) {
    const Element a = sample_element(alg, a_only, i, 0);
    const double deviation = norm(f_value(pair, a) - mu.map(a));
    const double bound = hyers_bound(cf, a);
    const double gap = mu.gap_at(a);
    observed[i] = {deviation, bound};
    results[i] = {deviation - bound - gap,
                  Json{{"index", i}, {"a", coords(a)}, {"deviation", deviation}, {"bound", bound}, {"gap", gap}}};
  });
  std::size_t largest = 0;
  double worst_ratio = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (observed[i].first > observed[largest].first) largest = i;
    if (observed[i].second > 0.0) worst_ratio = std::max(worst_ratio, observed[i].first / observed[i].second);
  }
  ResidualReport report = reduce("stability_bound", std::move(results), kStabilitySlack);
  if (!observed.empty()) {
    report.metrics.push_back({"max_deviation", observed[largest].first});
    report.metrics.push_back({"bound_at_max_deviation", observed[largest].second});
  }
  report.metrics.push_back({"max_deviation_to_bound", worst_ratio});
  return report;
}

ResidualReport check_generalized_derivation(const LinearMap& mu, const LinearMap& delta, double threshold) {
  const Algebra& alg = mu.source();
  const std::size_t d = alg.dim();
  std::vector<Sampled> results(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    const Element ei = alg.basis(i);
    const ModuleElement delta_i = delta(ei);
    for (std::size_t j = 0; j < d; ++j) {
      const Element ej = alg.basis(j);
      const double r = norm(mu(ei * ej) - ei * mu(ej) - delta_i * ej);
      results[i * d + j] = {r, Json{{"i", i}, {"j", j}}};
    }
  }
  return reduce("generalized_derivation", std::move(results), threshold);
}

ResidualReport check_leibniz(const LinearMap& delta, double threshold) {
  const Algebra& alg = delta.source();
  const std::size_t d = alg.dim();
  std::vector<Sampled> results(d * d);
  for (std::size_t i = 0; i < d; ++i) {
    const Element ei = alg.basis(i);
    const ModuleElement delta_i = delta(ei);
    for (std::size_t j = 0; j < d; ++j) {
      const Element ej = alg.basis(j);
      const double r = norm(delta(ei * ej) - ei * delta(ej) - delta_i * ej);
      results[i * d + j] = {r, Json{{"i", i}, {"j", j}}};
    }
  }
  return reduce("leibniz", std::move(results), threshold);
}

CertificateThresholds certificate_thresholds(const AssembledMap& mu) {
  const Algebra& alg = mu.map.source();
  const std::size_t d = alg.dim();
  const double gap_one = mu.gap_at(alg.unit());
  // Gap of delta(a) = mu(a) - a mu(1).
  auto delta_gap = [&](const Element& a) { return mu.gap_at(a) + norm(a) * gap_one; };

  double generalized = 0.0;
  double leibniz = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const Element ei = alg.basis(i);
    for (std::size_t j = 0; j < d; ++j) {
      const Element ej = alg.basis(j);
      const Element prod = ei * ej;
      generalized = std::max(generalized, mu.gap_at(prod) + norm(ei) * mu.column_gaps[j] +
                                              delta_gap(ei) * norm(ej));
      leibniz = std::max(leibniz, delta_gap(prod) + norm(ei) * delta_gap(ej) + delta_gap(ei) * norm(ej));
    }
  }
  return {kIdentityTolerance + generalized, kIdentityTolerance + leibniz};
}

UnitaryDecomposition unitary_decompose(const Element& a) {
  const Algebra& alg = a.algebra();
  if (!alg.matrix_order() || !alg.has_involution())
    throw InvariantViolation("unitary decomposition needs a matrix algebra with involution");
  UnitaryDecomposition out{a, {}};
  if (a.is_zero()) return out;

  const CMatrix m = alg.to_matrix(a.coords());
  const CMatrix m_star = m.adjoint();
  const Scalar i_unit{0.0, 1.0};
  // a = h1 + i h2 with h1 = (a + a*) / 2, h2 = (a - a*) / (2i).
  const std::array<std::pair<Scalar, CMatrix>, 2> parts{
      std::pair{Scalar(1.0), 0.5 * (m + m_star)},
      std::pair{i_unit, Scalar(0.0, -0.5) * (m - m_star)},
  };
  for (const auto& [weight, h] : parts) {
    // u = V diag(t + i sqrt(1 - t^2)) V^H with t = eigenvalue / s: unitary up
    // to the unitarity of V, even where sqrt amplifies roundoff near |t| = 1.
    const HermitianSpectrum spectrum(h);
    const double s = spectrum.max_abs_eigenvalue();
    if (s == 0.0) continue;
    const CMatrix u = spectrum.apply([s](double t) {
      const double x = t / s;
      return Scalar(x, std::sqrt(std::max((1.0 - x) * (1.0 + x), 0.0)));
    });
    const Scalar coeff = weight * (0.5 * s);
    out.terms.emplace_back(coeff, alg.element(alg.from_matrix(u)));
    out.terms.emplace_back(coeff, alg.element(alg.from_matrix(u.adjoint())));
  }
  return out;
}

ResidualReport check_star_preservation(const ApproximateMapPair& pair, const ControlFunction& cf,
                                       const LinearMap& mu, const StarSampling& sampling, int depth) {
  const auto& alg = pair.source();
  if (!alg->has_involution()) throw InvariantViolation("star preservation needs an algebra with involution");

  const std::size_t d = alg->dim();
  std::vector<Sampled> results(d);
  for (std::size_t k = 0; k < d; ++k) {
    const Element ek = alg->basis(k);
    results[k] = {norm(mu(adjoint(ek)) - adjoint(mu(ek))), Json{{"k", k}}};
  }
  ResidualReport report = reduce("star_preservation", std::move(results), kStarTolerance);

  // Hypothesis on unitaries drawn from decompositions of seeded samples.
  std::vector<Element> unitaries;
  const SamplerConfig sampler{sampling.seed, 0, false, {true, false, false, false}};
  for (std::size_t i = 0; unitaries.size() < sampling.unitaries; ++i) {
    for (const auto& term : unitary_decompose(sample_element(alg, sampler, i, 0)).terms) {
      if (unitaries.size() == sampling.unitaries) break;
      unitaries.push_back(term.second);
    }
  }
  const int n_max = std::min(depth, sampling.max_log2_scale);
  std::vector<double> worst(unitaries.size(), -std::numeric_limits<double>::infinity());
  parallel_for(unitaries.size(), [&](std::size_t i) {
    const Element& u = unitaries[i];
    const Element u_star = adjoint(u);
    const double un = norm(u);
    for (int n = 0; n <= n_max; ++n) {
      const ModuleElement lhs = evaluate_f(pair, u_star, n).mantissa - adjoint(evaluate_f(pair, u, n).mantissa);
      const double bound = scaled_phi(cf, {un, un, 0.0, 0.0}, n);
      worst[i] = std::max(worst[i], (norm(lhs) - bound) / std::max(1.0, bound));
    }
  });
  double hypothesis = worst.empty() ? 0.0 : worst.front();
  for (double w : worst) hypothesis = std::max(hypothesis, w);
  report.metrics.push_back({"hypothesis_max_residual", hypothesis});
  report.metrics.push_back({"hypothesis_holds", hypothesis <= kMasterSlack ? 1.0 : 0.0});
  report.metrics.push_back({"hypothesis_unitaries", static_cast<double>(unitaries.size())});
  report.metrics.push_back({"hypothesis_max_log2_scale", static_cast<double>(n_max)});
  return report;
}

ResidualReport superstability_probe(const ApproximateMapPair& pair, const ControlFunction& cf,
                                    const SuperstabilityConfig& config) {
  const auto* constant = std::get_if<ConstantControl>(&cf.kind());
  if (!constant) throw InvariantViolation("superstability probe needs a constant control");
  if (config.m_max < 0 || config.m_max > kMaxLog2Scale || config.n_max < 0 || config.n_max > 1000)
    throw InvariantViolation("superstability probe ranges out of bounds");
  const double epsilon = constant->epsilon;
  const auto& alg = pair.source();

  SamplerConfig a_only = config.samples;
  a_only.slots = {true, false, false, false};
  std::vector<Sampled> results(a_only.count);
  parallel_for(a_only.count, [&](std::size_t i) {
    const Element a = sample_element(alg, a_only, i, 0);
    const ModuleElement f0 = evaluate_f(pair, a, 0).mantissa;
    Sampled& out = results[i];
    for (int m = 0; m <= config.m_max; ++m) {
      // ||f(2^m a) - 2^m f(a)|| = 2^m ||f(2^m a) / 2^m - f(a)||.
      const double lhs = std::ldexp(norm(evaluate_f(pair, a, m).mantissa - f0), m);
      const double bound = (2.0 + std::ldexp(2.0, m)) * epsilon / std::ldexp(1.0, config.n_max);
      if (lhs - bound > out.residual) {
        out.residual = lhs - bound;
        out.witness = Json{{"index", i}, {"a", coords(a)}, {"m", m}, {"n", config.n_max},
                           {"lhs", lhs}, {"bound", bound}};
      }
    }
  });
  ResidualReport report = reduce("superstability", std::move(results), 0.0);

  // Growth of the master-inequality LHS at (0, 0, R 1, d0) along the ladder.
  SamplerConfig d_only = config.samples;
  d_only.slots = {false, false, false, true};
  const Element zero = alg->zero();
  std::vector<std::pair<double, double>> profile(config.ladder.size());
  parallel_for(config.ladder.size(), [&](std::size_t r) {
    const double radius = config.ladder[r];
    const Element c = Scalar(radius) * alg->unit();
    double worst = 0.0;
    for (std::size_t s = 0; s < config.growth_samples; ++s) {
      const Element d0 = sample_element(alg, d_only, s, 3);
      worst = std::max(worst, master_terms(pair, 1.0, zero, zero, c, d0).lhs);
    }
    profile[r] = {radius, worst};
  });
  const double slope = log2_slope(profile);
  const bool growth = slope >= kGrowthSlope;
  report.profile = Json::array();
  for (const auto& [radius, lhs] : profile) report.profile.push_back(Json{{"R", radius}, {"lhs", lhs}});
  report.metrics.push_back({"growth_slope", slope});
  report.metrics.push_back({"growth_detected", growth ? 1.0 : 0.0});
  report.passed = report.passed && !growth;
  return report;
}

}  // namespace derivstab
