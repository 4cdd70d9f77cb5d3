#include <gtest/gtest.h>

#include <cmath>

#include "derivstab/errors.hpp"
#include "derivstab/maps.hpp"
#include "support/oracles.hpp"
#include "support/random.hpp"

using namespace derivstab;
using derivstab::testing::Rng;

namespace {

struct Fixture {
  std::shared_ptr<const Algebra> alg = make_matrix_algebra(2);
  std::shared_ptr<const Bimodule> self = make_self_bimodule(alg);
};

ModuleElement random_module(Rng& rng, const std::shared_ptr<const Bimodule>& m) {
  return m->element(rng.complex_vector(m->dim()));
}

double distance(const ModuleElement& x, const ModuleElement& y) { return l2_norm((x - y).coords()); }

std::vector<Scalar> as_vector(std::span<const Scalar> v) { return {v.begin(), v.end()}; }

}  // namespace

TEST(InnerGeneralized, MatchesSymbolicFormulas) {
  Fixture f;
  Rng rng(301);
  const ModuleElement x = random_module(rng, f.self);
  const ModuleElement y = random_module(rng, f.self);
  const GeneralizedDerivationPair pair = inner_generalized(x, y);
  for (int trial = 0; trial < 50; ++trial) {
    const Element a = f.alg->element(rng.complex_vector(4));
    // mu(a) = x a - a y and delta(a) = x a - a x by the triple-loop product.
    const auto xa = derivstab::testing::naive_product(as_vector(x.coords()), as_vector(a.coords()), 2);
    const auto ay = derivstab::testing::naive_product(as_vector(a.coords()), as_vector(y.coords()), 2);
    const auto ax = derivstab::testing::naive_product(as_vector(a.coords()), as_vector(x.coords()), 2);
    const ModuleElement mu_a = pair.mu(a);
    const ModuleElement delta_a = pair.delta(a);
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_NEAR(std::abs(mu_a[k] - (xa[k] - ay[k])), 0.0, 1e-13);
      EXPECT_NEAR(std::abs(delta_a[k] - (xa[k] - ax[k])), 0.0, 1e-13);
    }
  }
}

TEST(RightMultiplier, IsLeftMultiplicationByZ) {
  Fixture f;
  Rng rng(302);
  const Element z = f.alg->element(rng.complex_vector(4));
  const GeneralizedDerivationPair pair = right_multiplier(f.self, z);
  const Element a = f.alg->element(rng.complex_vector(4));
  EXPECT_LE(distance(pair.mu(a), as_module(f.self, z * a)), 1e-13);
  EXPECT_LE(distance(pair.delta(a), as_module(f.self, z * a - a * z)), 1e-13);
}

TEST(GeneralizedDerivationPair, InconsistentDeltaIsRejected) {
  Fixture f;
  const GeneralizedDerivationPair bad{LinearMap::identity(f.self), LinearMap::identity(f.self)};
  EXPECT_THROW(bad.validate(), InvariantViolation);
  const GeneralizedDerivationPair good{LinearMap::identity(f.self), LinearMap::zero(f.self)};
  EXPECT_NO_THROW(good.validate());
}

TEST(Perturbation, VanishesAtZero) {
  Fixture f;
  for (const auto& spec : {PerturbationSpec::bounded(0.5, 1), PerturbationSpec::power(0.5, 0.3, 2),
                           PerturbationSpec::bounded(0.5, 3, ScaleMode::ScaleSensitiveDirection)}) {
    for (int n : {0, 7, 512}) EXPECT_TRUE(scaled_perturbation(spec, *f.self, f.alg->zero(), n).is_zero());
  }
}

TEST(Perturbation, MagnitudesMatchTheirBounds) {
  Fixture f;
  Rng rng(303);
  const auto bounded = PerturbationSpec::bounded(0.25, 4);
  const auto power = PerturbationSpec::power(0.1, 0.5, 5);
  for (int trial = 0; trial < 200; ++trial) {
    const Element v = f.alg->element(rng.complex_vector(4));
    const double vn = norm(v);
    EXPECT_NEAR(norm(scaled_perturbation(bounded, *f.self, v, 0)), 0.25, 1e-12);
    EXPECT_NEAR(norm(scaled_perturbation(power, *f.self, v, 0)), 0.1 * std::sqrt(vn), 1e-12);
    EXPECT_LE(norm(scaled_perturbation(power, *f.self, v, 0)), power.bound(vn) * (1 + 1e-12));
  }
}

TEST(Perturbation, DeterministicAndSeedDependent) {
  Fixture f;
  const Element v = f.alg->element({{0.3, 0.1}, {0.2, 0}, {0, -1}, {0.5, 0.5}});
  const auto p1 = scaled_perturbation(PerturbationSpec::bounded(1.0, 7), *f.self, v, 0);
  const auto p2 = scaled_perturbation(PerturbationSpec::bounded(1.0, 7), *f.self, v, 0);
  const auto p3 = scaled_perturbation(PerturbationSpec::bounded(1.0, 8), *f.self, v, 0);
  EXPECT_EQ(as_vector(p1.coords()), as_vector(p2.coords()));
  EXPECT_GT(distance(p1, p3), 1e-3);
}

TEST(Perturbation, InvariantDirectionIgnoresDyadicScale) {
  Fixture f;
  Rng rng(304);
  const auto spec = PerturbationSpec::bounded(1.0, 9);
  for (int trial = 0; trial < 50; ++trial) {
    const Element v = f.alg->element(rng.complex_vector(4));
    const auto base = scaled_perturbation(spec, *f.self, v, 0);
    const int n = rng.integer(1, 60);
    // Bounded magnitude eps 2^{-n}, same direction.
    const auto scaled = scaled_perturbation(spec, *f.self, v, n);
    EXPECT_LE(distance(std::ldexp(1.0, n) * scaled, base), 1e-15);
  }
}

TEST(Perturbation, SensitiveDirectionChangesWithScale) {
  Fixture f;
  const auto spec = PerturbationSpec::bounded(1.0, 9, ScaleMode::ScaleSensitiveDirection);
  const Element v = f.alg->element({{0.3, 0.1}, {0.2, 0}, {0, -1}, {0.5, 0.5}});
  const auto d0 = scaled_perturbation(spec, *f.self, v, 0);
  const auto d1 = scaled_perturbation(spec, *f.self, v, 1);
  EXPECT_GT(distance(d0, 2.0 * d1), 1e-3);
}

TEST(Perturbation, SensitiveDirectionOverflowIsReported) {
  Fixture f;
  const auto spec = PerturbationSpec::bounded(1.0, 9, ScaleMode::ScaleSensitiveDirection);
  const Element v = f.alg->element({{1e200, 0}, 0, 0, 0});
  EXPECT_THROW(scaled_perturbation(spec, *f.self, v, 512), OverflowError);
}

TEST(Perturbation, SlotTargetedOnlyHitsItsCoordinate) {
  Fixture f;
  const auto spec = PerturbationSpec::slot_targeted(3, PerturbationSpec::bounded(1.0, 11));
  const Element off = f.alg->element({{1, 0}, {2, 0}, {0, 1}, 0});
  EXPECT_TRUE(scaled_perturbation(spec, *f.self, off, 0).is_zero());
  const Element on = f.alg->element({{1, 0}, 0, 0, {0.5, 0}});
  EXPECT_NEAR(norm(scaled_perturbation(spec, *f.self, on, 0)), 0.5, 1e-12);
}

TEST(Perturbation, InvalidParametersAreRejected) {
  EXPECT_THROW(PerturbationSpec::power(0.1, 1.0, 0).validate(4), InvariantViolation);
  EXPECT_THROW(PerturbationSpec::bounded(-1.0, 0).validate(4), InvariantViolation);
  EXPECT_THROW(PerturbationSpec::bounded(NAN, 0).validate(4), InvariantViolation);
  EXPECT_THROW(PerturbationSpec::slot_targeted(4, PerturbationSpec::bounded(1, 0)).validate(4), InvariantViolation);
}

TEST(Evaluation, PowerNoiseAtScaleTwoMatchesDirectValue) {
  // f(2^2 a) / 2^2 materialized back equals f(4a) evaluated directly.
  Fixture f;
  Rng rng(305);
  const GeneralizedDerivationPair exact =
      inner_generalized(random_module(rng, f.self), random_module(rng, f.self));
  const ApproximateMapPair pair{exact, PerturbationSpec::power(0.1, 0.5, 12), PerturbationSpec::zero()};
  for (int trial = 0; trial < 50; ++trial) {
    const Element a = f.alg->element(rng.complex_vector(4));
    const ModuleElement via_scale = evaluate_f(pair, a, 2).materialize();
    const ModuleElement direct = f_value(pair, 4.0 * a);
    EXPECT_LE(distance(via_scale, direct), 1e-14 * (1 + norm(direct)));
  }
}

TEST(Evaluation, ExactPartIsScaleFree) {
  Fixture f;
  Rng rng(306);
  const ApproximateMapPair pair{inner_generalized(random_module(rng, f.self), random_module(rng, f.self)),
                                PerturbationSpec::zero(), PerturbationSpec::zero()};
  const Element a = f.alg->element(rng.complex_vector(4));
  for (int n : {0, 1, 30, 512})
    EXPECT_EQ(as_vector(evaluate_f(pair, a, n).mantissa.coords()), as_vector(pair.exact.mu(a).coords()));
  EXPECT_THROW(evaluate_f(pair, a, 513), InvariantViolation);
  EXPECT_NO_THROW(evaluate_f(pair, a, 512).materialize());
  EXPECT_THROW(evaluate_f(pair, Scalar(1e200) * a, 512).materialize(), OverflowError);
}

TEST(Evaluation, GUsesDeltaAndItsOwnNoise) {
  Fixture f;
  Rng rng(307);
  const ApproximateMapPair pair{inner_generalized(random_module(rng, f.self), random_module(rng, f.self)),
                                PerturbationSpec::zero(), PerturbationSpec::bounded(0.5, 13)};
  const Element c = f.alg->element(rng.complex_vector(4));
  EXPECT_NEAR(norm(g_value(pair, c) - pair.exact.delta(c)), 0.5, 1e-12);
  EXPECT_EQ(as_vector(f_value(pair, c).coords()), as_vector(pair.exact.mu(c).coords()));
  EXPECT_TRUE(g_value(pair, f.alg->zero()).is_zero());
}
