// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "derivstab/hyers.hpp"
#include "derivstab/scenario.hpp"
#include "derivstab/serialization.hpp"
#include "derivstab/verify.hpp"
#include "support/oracles.hpp"
#include "support/random.hpp"

using namespace derivstab;
using derivstab::testing::Rng;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarioDir = DERIVSTAB_SCENARIO_DIR;

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::shared_ptr<const Bimodule> self_of(const std::shared_ptr<const Algebra>& alg) {
  return make_self_bimodule(alg);
}

GeneralizedDerivationPair seeded_inner(const std::shared_ptr<const Algebra>& alg, std::uint64_t seed) {
  Rng rng(seed);
  const auto self = self_of(alg);
  return inner_generalized(self->element(rng.complex_vector(self->dim())),
                           self->element(rng.complex_vector(self->dim())));
}

std::shared_ptr<const Algebra> bundled_pauli() {
  return Algebra::create(load_algebra_descriptor(kScenarioDir / "algebras" / "pauli4.json"));
}

// M2, inner exact pair, scale-invariant power noise (0.1, 0.5) on f, N = 48:
// ||f(a) - mu(a)|| <= 0.1 ||a||^0.5 / (1 - 2^-0.5) + 1e-9 on 1000 samples, < 5 s.
void stability_bound_at_depth_48(Outcome& out) {
  const auto start = Clock::now();
  const auto alg = make_matrix_algebra(2);
  const ApproximateMapPair pair{seeded_inner(alg, 1001), PerturbationSpec::power(0.1, 0.5, 1002),
                                PerturbationSpec::zero()};
  const auto cf = ControlFunction::power(0.1, 0.5);
  const AssembledMap mu = assemble_mu(pair, cf, 48);
  const SamplerConfig sampler{1003, 1000, true};
  double worst = -INFINITY;
  for (std::size_t i = 0; i < sampler.count; ++i) {
    const Element a = sample_element(alg, sampler, i, 0);
    const double bound = 0.1 * std::sqrt(norm(a)) / (1.0 - std::exp2(-0.5));
    worst = std::max(worst, norm(f_value(pair, a) - mu.map(a)) - bound);
  }
  const ResidualReport report = certify_stability_bound(pair, cf, mu, sampler);
  const double elapsed = seconds_since(start);
  out.require(worst <= 1e-9, "deviation - bound <= 1e-9");
  out.require(report.passed, "certify_stability_bound passes");
  out.require(report.samples == 1000, "1000 samples");
  out.require(elapsed < 5.0, "runtime < 5 s");
  out.detail << "max(deviation - bound) " << worst << ", worst ratio " << report.metric("max_deviation_to_bound")
             << ", " << elapsed << " s";
}

// Increment ratio 2^{p-1} +- 1e-6 over n = 4..20, and ||s_48 - s_56|| <= gap(48), on 500 cases.
void convergence_law(Outcome& out) {
  const auto alg = make_matrix_algebra(2);
  const double p = 0.5;
  const auto cf = ControlFunction::power(0.1, p);
  Rng rng(2001);
  double worst_ratio_error = 0.0;
  double worst_gap_use = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const ApproximateMapPair pair{seeded_inner(alg, 2002 + trial), PerturbationSpec::power(0.1, p, 3002 + trial),
                                  PerturbationSpec::zero()};
    const Element a = alg->element(rng.complex_vector(4));
    const ExtrapolationTrace longer = extrapolate_mu(pair, cf, a, 56);
    for (int n = 4; n <= 20; ++n) {
      const double ratio = longer.increments[n] / longer.increments[n - 1];
      worst_ratio_error = std::max(worst_ratio_error, std::abs(ratio - std::exp2(p - 1.0)));
    }
    const ExtrapolationTrace at48 = extrapolate_mu(pair, cf, a, 48);
    worst_gap_use = std::max(worst_gap_use, norm(at48.limit - longer.limit) / at48.certified_gap);
  }
  out.require(worst_ratio_error <= 1e-6, "increment ratio within 1e-6");
  out.require(worst_gap_use <= 1.0, "s_48 within certified gap of s_56");
  out.detail << "ratio error " << worst_ratio_error << ", ||s_48 - s_56|| / gap " << worst_gap_use;
}

// Generalized-derivation identity and Leibniz rule <= 1e-8 for M2, M3 and a
// 4-dimensional structure-constant algebra; both delta routes agree.
void identities_on_three_algebras(Outcome& out) {
  const std::vector<std::pair<std::string, std::shared_ptr<const Algebra>>> algebras{
      {"M2", make_matrix_algebra(2)}, {"M3", make_matrix_algebra(3)}, {"pauli4", bundled_pauli()}};
  std::uint64_t seed = 4001;
  for (const auto& [name, alg] : algebras) {
    const ApproximateMapPair pair{seeded_inner(alg, seed), PerturbationSpec::power(0.1, 0.5, seed + 1),
                                  PerturbationSpec::power(0.1, 0.5, seed + 2)};
    seed += 10;
    const auto cf = ControlFunction::power(0.3, 0.5);
    const int depth = default_depth(cf);
    const AssembledMap mu = assemble_mu(pair, cf, depth);
    const LinearMap delta = extract_delta_algebraic(mu.map);
    const ResidualReport gd = check_generalized_derivation(mu.map, delta, 1e-8);
    const ResidualReport lb = check_leibniz(delta, 1e-8);
    out.require(gd.passed && gd.samples == alg->dim() * alg->dim(), name + " generalized derivation");
    out.require(lb.passed, name + " Leibniz");

    double worst_route = 0.0;
    const double gap_one = mu.gap_at(alg->unit());
    for (std::size_t j = 0; j < alg->dim(); ++j) {
      const Element ej = alg->basis(j);
      const ExtrapolationTrace t = extract_delta_limit(pair, cf, ej, depth);
      const double bound = mu.column_gaps[j] + norm(ej) * gap_one + t.certified_gap + kIdentityTolerance;
      worst_route = std::max(worst_route, norm(t.limit - delta(ej)) / bound);
    }
    out.require(worst_route <= 1.0, name + " delta routes agree");
    out.detail << name << ": " << gd.max_residual << "/" << lb.max_residual << ", route " << worst_route << "; ";
  }
}

// J-commutation residual <= 1e-8; scalar_decompose on 10000 seeded scalars.
void complex_linearity(Outcome& out) {
  double worst_j = 0.0;
  std::uint64_t seed = 5001;
  for (const auto& alg : {make_matrix_algebra(2), make_matrix_algebra(3), bundled_pauli()}) {
    const ApproximateMapPair pair{seeded_inner(alg, seed), PerturbationSpec::power(0.1, 0.5, seed + 1),
                                  PerturbationSpec::zero()};
    seed += 10;
    const auto cf = ControlFunction::power(0.1, 0.5);
    worst_j = std::max(worst_j, assemble_mu(pair, cf, default_depth(cf)).j_commutation_residual);
  }
  Rng rng(5101);
  double worst_rebuild = 0.0;
  double worst_modulus = 0.0;
  for (int trial = 0; trial < 10000; ++trial) {
    const Scalar gamma{rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0)};
    const ScalarDecomposition d = scalar_decompose(gamma);
    worst_rebuild = std::max(worst_rebuild, std::abs(recombine(d) - gamma));
    for (const Scalar& l : d.unimodular) worst_modulus = std::max(worst_modulus, std::abs(std::abs(l) - 1.0));
  }
  out.require(worst_j <= 1e-8, "J residual <= 1e-8");
  out.require(worst_rebuild <= 1e-14, "reconstruction <= 1e-14");
  out.require(worst_modulus <= 1e-15, "| |lambda| - 1 | <= 1e-15");
  out.detail << "J residual " << worst_j << ", reconstruction " << worst_rebuild << ", modulus " << worst_modulus;
}

// unitary_decompose on 500 elements of M2..M4; star preservation on the bundled star scenario.
void star_structure(Outcome& out) {
  Rng rng(6001);
  double worst_rebuild = 0.0;
  double worst_unitarity = 0.0;
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + trial % 3;
    const auto alg = make_matrix_algebra(n);
    const Element a = alg->element(rng.complex_vector(n * n));
    const UnitaryDecomposition d = unitary_decompose(a);
    Element sum = alg->zero();
    for (const auto& [w, u] : d.terms) {
      sum = sum + w * u;
      worst_unitarity = std::max({worst_unitarity, norm(u * adjoint(u) - alg->unit()),
                                  norm(adjoint(u) * u - alg->unit())});
    }
    worst_rebuild = std::max(worst_rebuild, norm(sum - a));
  }
  out.require(worst_rebuild <= 1e-10, "reconstruction <= 1e-10");
  out.require(worst_unitarity <= 1e-10, "unitarity <= 1e-10");

  const Scenario scenario = load_scenario(kScenarioDir / "prop_star.json");
  const RunResult run = run_scenario(scenario);
  double star_residual = INFINITY;
  for (const auto& c : run.report.at("checks"))
    if (c.at("check") == "star_preservation") star_residual = c.at("max_residual").get<double>();
  out.require(star_residual <= 1e-9, "mu(e_k*) = mu(e_k)* within 1e-9");
  out.detail << "reconstruction " << worst_rebuild << ", unitarity " << worst_unitarity << ", star residual "
             << star_residual;
}

// (a) exact pairs: ||f(2^m a) - 2^m f(a)|| = 0 for m <= 16, against the bound at every n <= 48;
// (b) bounded noise 0.01: master LHS along ||c|| in {1..256} grows with log-log slope >= 0.9. < 10 s.
void superstability(Outcome& out) {
  const auto start = Clock::now();
  const auto alg = make_matrix_algebra(2);
  const double eps = 0.01;
  const auto cf = ControlFunction::constant(eps);
  const ApproximateMapPair exact{seeded_inner(alg, 7001), PerturbationSpec::zero(), PerturbationSpec::zero()};
  const SamplerConfig sampler{7002, 200, true};
  double worst_defect = 0.0;
  bool within_all_bounds = true;
  for (std::size_t i = 0; i < sampler.count; ++i) {
    const Element a = sample_element(alg, sampler, i, 0);
    const ModuleElement fa = f_value(exact, a);
    for (int m = 0; m <= 16; ++m) {
      const double scale = std::ldexp(1.0, m);
      const double defect = norm(f_value(exact, Scalar(scale) * a) - Scalar(scale) * fa);
      worst_defect = std::max(worst_defect, defect);
      for (int n = 0; n <= 48; ++n)
        within_all_bounds = within_all_bounds && defect <= (2.0 + 2.0 * scale) * eps * std::ldexp(1.0, -n);
    }
  }
  SuperstabilityConfig cfg;
  cfg.samples = sampler;
  const ResidualReport exact_probe = superstability_probe(exact, cf, cfg);
  out.require(worst_defect == 0.0 && within_all_bounds, "exact homogeneity defect is zero");
  out.require(exact_probe.passed, "probe passes on the exact pair");

  const ApproximateMapPair noisy{seeded_inner(alg, 7003), PerturbationSpec::bounded(eps, 7004),
                                 PerturbationSpec::zero()};
  const ResidualReport noisy_probe = superstability_probe(noisy, cf, cfg);
  const double slope = noisy_probe.metric("growth_slope");
  const double elapsed = seconds_since(start);
  out.require(slope >= kGrowthSlope, "growth slope >= 0.9");
  out.require(!noisy_probe.passed, "probe rejects bounded noise");
  out.require(elapsed < 10.0, "runtime < 10 s");
  out.detail << "max defect " << worst_defect << ", exact slope " << exact_probe.metric("growth_slope")
             << ", noisy slope " << slope << ", " << elapsed << " s";
}

// Closed-form phi~ against the truncated series within its tail certificate,
// plus an independent long-double series; Constant(eps) gives exactly eps.
void control_series(Outcome& out) {
  Rng rng(8001);
  double worst_certificate = 0.0;
  double worst_oracle = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double beta = rng.uniform(0.0, 2.0);
    const double p = rng.uniform(-1.0, 0.9);
    const SlotNorms x{rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(0, 50)};
    const auto cf = ControlFunction::power(beta, p);
    const SeriesCertificate closed = phi_tilde(cf, x);
    const SeriesCertificate series = phi_tilde_series(cf, x);
    const double allowed = series.tail_bound + 1e-13 * closed.value;
    worst_certificate = std::max(worst_certificate, std::abs(closed.value - series.value) / allowed);
    const long double oracle = derivstab::testing::power_series_oracle(
        {{beta, p}, {beta, p}, {beta, p}, {beta, p}}, {x[0], x[1], x[2], x[3]});
    worst_oracle = std::max(worst_oracle, static_cast<double>(std::abs(closed.value - oracle) / oracle));
  }
  bool constant_exact = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const double eps = rng.uniform(0.0, 10.0);
    const double a = rng.uniform(0.0, 1e6);
    constant_exact = constant_exact && phi_tilde(ControlFunction::constant(eps), SlotNorms{a, a, 0, 0}).value == eps;
  }
  out.require(worst_certificate <= 1.0, "closed form within tail certificate");
  out.require(worst_oracle <= 1e-13, "closed form matches independent series");
  out.require(constant_exact, "Constant(eps) is exact");
  out.detail << "|closed - series| / certificate " << worst_certificate << ", oracle relative error "
             << worst_oracle;
}

std::vector<fs::path> bundled_scenarios() {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(kScenarioDir))
    if (entry.path().extension() == ".json") out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

// Every bundled scenario run twice gives byte-identical reports, also across thread caps.
void determinism(Outcome& out) {
  const auto paths = bundled_scenarios();
  for (const auto& path : paths) {
    const Scenario s = load_scenario(path);
    ::setenv("DERIVSTAB_THREADS", "1", 1);
    const std::string first = run_scenario(s).report.dump(2);
    const std::string second = run_scenario(s).report.dump(2);
    ::setenv("DERIVSTAB_THREADS", "4", 1);
    const std::string threaded = run_scenario(s).report.dump(2);
    ::unsetenv("DERIVSTAB_THREADS");
    out.require(first == second && first == threaded, s.name + " reproducible");
  }
  out.detail << paths.size() << " scenarios";
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void(Outcome&)>>> criteria{
      {"AC1 stability bound at N = 48", stability_bound_at_depth_48},
      {"AC2 convergence law", convergence_law},
      {"AC3 generalized derivation and Leibniz", identities_on_three_algebras},
      {"AC4 complex linearity", complex_linearity},
      {"AC5 unitary decomposition and star", star_structure},
      {"AC6 superstability", superstability},
      {"AC7 control series", control_series},
      {"AC8 determinism", determinism},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      check(outcome);
    } catch (const std::exception& e) {
      outcome.passed = false;
      outcome.detail << "exception: " << e.what();
    }
    std::printf("%s %s: %s\n", outcome.passed ? "PASS" : "FAIL", name, outcome.detail.str().c_str());
    if (!outcome.passed) ++failures;
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
