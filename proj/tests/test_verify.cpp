#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "derivstab/errors.hpp"
#include "derivstab/verify.hpp"
#include "support/random.hpp"

using namespace derivstab;
using derivstab::testing::Rng;

namespace {

GeneralizedDerivationPair random_inner(const std::shared_ptr<const Algebra>& alg, std::uint64_t seed) {
  Rng rng(seed);
  const auto self = make_self_bimodule(alg);
  return inner_generalized(self->element(rng.complex_vector(self->dim())),
                           self->element(rng.complex_vector(self->dim())));
}

SamplerConfig ab_sampler(std::uint64_t seed, std::size_t count) {
  SamplerConfig s{seed, count, true};
  s.slots = {true, true, false, false};
  return s;
}

void expect_consistent(const ResidualReport& r) {
  EXPECT_EQ(r.passed, r.max_residual <= r.threshold) << r.check;
  EXPECT_GT(r.samples, 0u) << r.check;
}

}  // namespace

TEST(Sampler, SlotsDependOnlyOnSeedIndexAndSlot) {
  const auto alg = make_matrix_algebra(2);
  const SamplerConfig cfg{77, 10};
  const Element a = sample_element(alg, cfg, 3, 1);
  SamplerConfig bigger = cfg;
  bigger.count = 5000;
  bigger.slots = {false, true, false, false};
  const Element b = sample_element(alg, bigger, 3, 1);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(a[k], b[k]);
  EXPECT_TRUE(sample_element(alg, bigger, 3, 0).is_zero());
  EXPECT_NE(sample_element(alg, cfg, 3, 0)[0], sample_element(alg, cfg, 3, 1)[0]);
  EXPECT_NE(sample_element(alg, cfg, 4, 1)[0], a[0]);
}

TEST(Sampler, LadderSetsDyadicNorms) {
  const auto alg = make_matrix_algebra(3);
  const SamplerConfig cfg{78, 100, true};
  for (std::size_t i = 0; i < 100; ++i) {
    const double expected = std::ldexp(1.0, -4 + static_cast<int>(i % 13));
    EXPECT_NEAR(norm(sample_element(alg, cfg, i, 2)), expected, 1e-12 * expected);
  }
}

TEST(LambdaSet, Values) {
  const auto full = LambdaSet::full_t(8).values();
  ASSERT_EQ(full.size(), 8u);
  EXPECT_EQ(full[0], Scalar(1.0, 0.0));
  for (const Scalar& l : full) EXPECT_NEAR(std::abs(l), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(full[2] - Scalar(0.0, 1.0)), 0.0, 1e-15);
  const auto two = LambdaSet::one_and_i().values();
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[0], Scalar(1.0, 0.0));
  EXPECT_EQ(two[1], Scalar(0.0, 1.0));
}

TEST(Report, JsonShapeAndMetricLookup) {
  ResidualReport r;
  r.check = "demo";
  r.samples = 3;
  r.max_residual = -1.0;
  r.threshold = 0.0;
  r.passed = true;
  r.metrics = {{"slope", 0.5}};
  const Json j = to_json(r);
  for (const char* key : {"check", "samples", "max_residual", "witness", "threshold", "passed", "metrics"})
    EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_FALSE(j.contains("profile"));
  EXPECT_EQ(j["metrics"]["slope"].get<double>(), 0.5);
  EXPECT_EQ(r.metric("slope"), 0.5);
  EXPECT_THROW(r.metric("missing"), std::out_of_range);
}

TEST(MasterInequality, ExactPairHasNoPositiveResidual) {
  for (const auto& alg : {make_matrix_algebra(2), make_matrix_algebra(3), make_pauli_algebra()}) {
    const ApproximateMapPair pair{random_inner(alg, 601), PerturbationSpec::zero(), PerturbationSpec::zero()};
    const ResidualReport r = residual_master_inequality(pair, ControlFunction::power(0.1, 0.5),
                                                        SamplerConfig{602, 300, true}, LambdaSet::full_t(8));
    EXPECT_LE(r.max_residual, 0.0);
    EXPECT_TRUE(r.passed);
    EXPECT_EQ(r.samples, 300u);
    expect_consistent(r);
  }
}

TEST(MasterInequality, PowerNoiseUnderDoubledControlPasses) {
  // Additive noise: ||P(la + lb) - l P(a) - l P(b)|| <= beta (||a + b||^p + ||a||^p + ||b||^p)
  // <= 2 beta (||a||^p + ||b||^p) for p in [0, 1].
  const auto alg = make_matrix_algebra(2);
  Rng rng(603);
  for (int trial = 0; trial < 20; ++trial) {
    const double beta = rng.uniform(0.01, 1.0);
    const double p = rng.uniform(0.0, 0.9);
    const ApproximateMapPair pair{random_inner(alg, 604 + trial), PerturbationSpec::power(beta, p, 605 + trial),
                                  PerturbationSpec::zero()};
    const ResidualReport r = residual_master_inequality(pair, ControlFunction::power(2 * beta, p),
                                                        ab_sampler(606 + trial, 200), LambdaSet::full_t(8));
    EXPECT_TRUE(r.passed) << "trial " << trial << " residual " << r.max_residual;
    expect_consistent(r);
  }
}

TEST(MasterInequality, BoundedNoiseWithUnrestrictedMultiplierFails) {
  // c f(d) carries ||c|| eps of noise; no constant control absorbs it for large c.
  const auto alg = make_matrix_algebra(2);
  const ApproximateMapPair pair{random_inner(alg, 607), PerturbationSpec::bounded(0.01, 608),
                                PerturbationSpec::bounded(0.01, 609)};
  const ResidualReport r = residual_master_inequality(pair, ControlFunction::constant(0.03),
                                                      SamplerConfig{610, 500, true}, LambdaSet::full_t(8));
  EXPECT_FALSE(r.passed);
  EXPECT_GT(r.max_residual, 0.0);
  EXPECT_TRUE(r.witness.contains("c"));
  expect_consistent(r);
}

TEST(MasterInequality, DeterministicAcrossThreadCaps) {
  const auto alg = make_matrix_algebra(3);
  const ApproximateMapPair pair{random_inner(alg, 611), PerturbationSpec::power(0.1, 0.5, 612),
                                PerturbationSpec::power(0.1, 0.5, 613)};
  const auto run = [&] {
    return to_json(residual_master_inequality(pair, ControlFunction::power(0.2, 0.5), SamplerConfig{614, 400, true},
                                              LambdaSet::full_t(8)))
        .dump();
  };
  ::setenv("DERIVSTAB_THREADS", "1", 1);
  const std::string serial = run();
  ::setenv("DERIVSTAB_THREADS", "4", 1);
  const std::string threaded = run();
  ::unsetenv("DERIVSTAB_THREADS");
  EXPECT_EQ(serial, threaded);
}

TEST(Stability, ZeroNoiseGivesZeroDeviation) {
  const auto alg = make_matrix_algebra(2);
  const ApproximateMapPair pair{random_inner(alg, 615), PerturbationSpec::zero(), PerturbationSpec::zero()};
  const auto cf = ControlFunction::constant(0.0);
  const AssembledMap mu = assemble_mu(pair, cf, 48);
  const ResidualReport r = certify_stability_bound(pair, cf, mu, SamplerConfig{616, 200, true});
  EXPECT_LE(r.metric("max_deviation"), 1e-13);
  EXPECT_TRUE(r.passed);
  expect_consistent(r);
}

TEST(Stability, MasterPassImpliesStabilityPass) {
  Rng rng(617);
  for (int trial = 0; trial < 12; ++trial) {
    const auto alg = trial % 3 == 2 ? make_pauli_algebra() : make_matrix_algebra(2 + trial % 2);
    const double beta = rng.uniform(0.01, 0.5);
    const double p = rng.uniform(0.0, 0.6);
    const ApproximateMapPair pair{random_inner(alg, 618 + trial), PerturbationSpec::power(beta, p, 619 + trial),
                                  PerturbationSpec::zero()};
    const auto cf = ControlFunction::power(2 * beta, p);
    const ResidualReport master = residual_master_inequality(pair, cf, ab_sampler(620 + trial, 200),
                                                             LambdaSet::full_t(8));
    if (!master.passed) continue;
    const AssembledMap mu = assemble_mu(pair, cf, default_depth(cf));
    const ResidualReport stab = certify_stability_bound(pair, cf, mu, SamplerConfig{621u + trial, 300, true});
    EXPECT_TRUE(stab.passed) << "trial " << trial << " residual " << stab.max_residual;
    EXPECT_LE(stab.metric("max_deviation_to_bound"), 1.0 + 1e-9);
    expect_consistent(stab);
  }
}

TEST(Identities, IdentityAndZeroMapsSatisfyBoth) {
  for (const auto& alg : {make_matrix_algebra(2), make_pauli_algebra()}) {
    const auto self = make_self_bimodule(alg);
    const LinearMap id = LinearMap::identity(self);
    const LinearMap zero = LinearMap::zero(self);
    const ResidualReport gd = check_generalized_derivation(id, zero);
    EXPECT_LE(gd.max_residual, 1e-15);
    EXPECT_TRUE(gd.passed);
    EXPECT_EQ(gd.samples, alg->dim() * alg->dim());
    EXPECT_EQ(check_leibniz(zero).max_residual, 0.0);
    EXPECT_EQ(check_generalized_derivation(zero, zero).max_residual, 0.0);
  }
}

TEST(Identities, InnerPairsSatisfyBothAndIdentityIsNotADerivation) {
  const auto alg = make_matrix_algebra(3);
  const GeneralizedDerivationPair exact = random_inner(alg, 622);
  EXPECT_LE(check_generalized_derivation(exact.mu, exact.delta).max_residual, 1e-12);
  EXPECT_LE(check_leibniz(exact.delta).max_residual, 1e-12);
  const ResidualReport bad = check_leibniz(LinearMap::identity(make_self_bimodule(alg)));
  EXPECT_FALSE(bad.passed);
  expect_consistent(bad);
}

TEST(UnitaryDecomposition, DiagonalTwoZero) {
  // diag(2, 0) = (diag(1, i) + diag(1, -i)): s = 2, b = diag(1, 0), sqrt(1 - b^2) = diag(0, 1).
  const auto alg = make_matrix_algebra(2);
  const Element a = alg->element({2, 0, 0, 0});
  const UnitaryDecomposition d = unitary_decompose(a);
  ASSERT_EQ(d.terms.size(), 2u);
  EXPECT_NEAR(std::abs(d.terms[0].first - Scalar(1.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(d.terms[1].first - Scalar(1.0)), 0.0, 1e-15);
  const Element u = d.terms[0].second;
  EXPECT_NEAR(std::abs(u[0] - Scalar(1, 0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(u[3] - Scalar(0, 1)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(u[1]) + std::abs(u[2]), 0.0, 1e-15);
  const Element v = d.terms[1].second;
  EXPECT_NEAR(std::abs(v[3] - Scalar(0, -1)), 0.0, 1e-15);
}

TEST(UnitaryDecomposition, UnitAndZero) {
  const auto alg = make_matrix_algebra(2);
  const UnitaryDecomposition one = unitary_decompose(alg->unit());
  ASSERT_EQ(one.terms.size(), 2u);
  for (const auto& [w, u] : one.terms) {
    EXPECT_NEAR(std::abs(w - Scalar(0.5)), 0.0, 1e-15);
    EXPECT_LE(norm(u - alg->unit()), 1e-15);
  }
  EXPECT_TRUE(unitary_decompose(alg->zero()).terms.empty());
  EXPECT_THROW(unitary_decompose(make_pauli_algebra()->unit()), InvariantViolation);
}

TEST(UnitaryDecomposition, ReconstructsWithUnitaryTerms) {
  Rng rng(623);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t n = 2 + trial % 3;
    const auto alg = make_matrix_algebra(n);
    const Element a = alg->element(rng.complex_vector(n * n));
    const UnitaryDecomposition d = unitary_decompose(a);
    EXPECT_LE(d.terms.size(), 4u);
    Element sum = alg->zero();
    for (const auto& [w, u] : d.terms) {
      sum = sum + w * u;
      EXPECT_LE(norm(u * adjoint(u) - alg->unit()), 1e-10);
      EXPECT_LE(norm(adjoint(u) * u - alg->unit()), 1e-10);
    }
    EXPECT_LE(norm(sum - a), 1e-10 * std::max(1.0, norm(a))) << "trial " << trial;
  }
}

TEST(StarPreservation, SelfAdjointCompatiblePairs) {
  const auto alg = make_matrix_algebra(2);
  const auto self = make_self_bimodule(alg);
  Rng rng(624);
  const ModuleElement x = self->element(rng.complex_vector(4));
  // mu(a) = x a + a x* satisfies mu(a*) = mu(a)*.
  const GeneralizedDerivationPair exact = inner_generalized(x, Scalar(-1.0) * adjoint(x));
  const ApproximateMapPair pair{exact, PerturbationSpec::zero(), PerturbationSpec::zero()};
  const auto cf = ControlFunction::power(0.1, 0.5);
  const ResidualReport r = check_star_preservation(pair, cf, exact.mu, StarSampling{625, 50, 16}, 80);
  EXPECT_LE(r.max_residual, 1e-13);
  EXPECT_TRUE(r.passed);
  EXPECT_EQ(r.metric("hypothesis_holds"), 1.0);
  EXPECT_EQ(r.metric("hypothesis_max_log2_scale"), 16.0);

  const ApproximateMapPair identity{{LinearMap::identity(self), LinearMap::zero(self)}, PerturbationSpec::zero(),
                                    PerturbationSpec::zero()};
  EXPECT_EQ(check_star_preservation(identity, cf, identity.exact.mu, StarSampling{626, 10, 8}, 80).max_residual,
            0.0);
}

TEST(StarPreservation, NonCompatibleMapFails) {
  const auto alg = make_matrix_algebra(2);
  const auto self = make_self_bimodule(alg);
  const Element z = alg->element({{0, 1}, 0, 0, 0});
  const GeneralizedDerivationPair exact = right_multiplier(self, z);
  const ApproximateMapPair pair{exact, PerturbationSpec::zero(), PerturbationSpec::zero()};
  const ResidualReport r =
      check_star_preservation(pair, ControlFunction::power(0.1, 0.5), exact.mu, StarSampling{627, 20, 8}, 80);
  EXPECT_FALSE(r.passed);
  expect_consistent(r);
  EXPECT_THROW(check_star_preservation(
                   ApproximateMapPair{random_inner(make_pauli_algebra(), 628), {}, {}},
                   ControlFunction::constant(0.0), LinearMap::zero(make_self_bimodule(make_pauli_algebra())),
                   StarSampling{}, 10),
               InvariantViolation);
}

TEST(Superstability, ExactPairPasses) {
  const auto alg = make_matrix_algebra(2);
  const ApproximateMapPair pair{random_inner(alg, 629), PerturbationSpec::zero(), PerturbationSpec::zero()};
  SuperstabilityConfig cfg;
  cfg.samples = SamplerConfig{630, 32, true};
  const ResidualReport r = superstability_probe(pair, ControlFunction::constant(0.01), cfg);
  EXPECT_TRUE(r.passed);
  EXPECT_LE(r.max_residual, 0.0);
  EXPECT_LT(r.metric("growth_slope"), kGrowthSlope);
  EXPECT_EQ(r.metric("growth_detected"), 0.0);
  EXPECT_EQ(r.profile.size(), cfg.ladder.size());
  expect_consistent(r);
}

TEST(Superstability, BoundedNoiseGrowsLinearly) {
  const auto alg = make_matrix_algebra(2);
  const ApproximateMapPair pair{random_inner(alg, 631), PerturbationSpec::bounded(0.01, 632),
                                PerturbationSpec::zero()};
  SuperstabilityConfig cfg;
  cfg.samples = SamplerConfig{633, 32, true};
  const ResidualReport r = superstability_probe(pair, ControlFunction::constant(0.01), cfg);
  EXPECT_GE(r.metric("growth_slope"), kGrowthSlope);
  EXPECT_FALSE(r.passed);
  EXPECT_THROW(superstability_probe(pair, ControlFunction::power(0.01, 0.5), cfg), InvariantViolation);
}
