#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>
#include <vector>

#include "ftrl_bandits/potentials.hpp"
#include "ftrl_bandits/random.hpp"
#include "ftrl_bandits/testing/oracles.hpp"

using namespace ftrl_bandits;
using Big = boost::multiprecision::cpp_dec_float_50;

namespace {

std::vector<Potential> all_potentials(std::size_t k = 4) {
  return {Potential::negentropy(), Potential::tsallis_half(), Potential::log_barrier(),
          Potential::hybrid(k, 1.0), Potential::hybrid(k, 0.5), Potential::hybrid_known_horizon(k, 1000)};
}

}  // namespace

TEST(PotentialValue, Examples) {
  EXPECT_DOUBLE_EQ(value(Potential::tsallis_half(), 0.25), -1.0);
  EXPECT_DOUBLE_EQ(value(Potential::log_barrier(), 1.0), 0.0);
  EXPECT_DOUBLE_EQ(value(Potential::negentropy(), 1.0), -1.0);
}

TEST(PotentialValue, HybridMatchesArbitraryPrecision) {
  // -2 sqrt(0.5) - log(0.5) / (sqrt(4) log(3)^2)
  const Big p("0.5");
  const Big expected = -2 * sqrt(p) - log(p) / (sqrt(Big(4)) * pow(log(Big(3)), 2));
  const double got = value(Potential::hybrid(4, 1.0), 0.5, 3);
  EXPECT_NEAR(got, expected.convert_to<double>(), 1e-15);
  // Rounds before 3 use max(3, t).
  EXPECT_DOUBLE_EQ(value(Potential::hybrid(4, 1.0), 0.5, 1), got);
}

TEST(PotentialValue, KnownHorizonFreezesBarrierWeight) {
  const auto pot = Potential::hybrid_known_horizon(4, 1000);
  const Big p("0.3");
  const Big expected = -2 * sqrt(p) - log(p) / (Big(2) * log(Big(1000)));
  for (std::uint64_t t : {1ULL, 10ULL, 999ULL}) {
    EXPECT_NEAR(value(pot, 0.3, t), expected.convert_to<double>(), 1e-15);
  }
}

TEST(PotentialValue, RejectsOutsideDomain) {
  for (const auto& pot : all_potentials()) {
    EXPECT_THROW(value(pot, 0.0), std::domain_error);
    EXPECT_THROW(value(pot, -0.1), std::domain_error);
    EXPECT_THROW(gradient(pot, 1.5), std::domain_error);
    EXPECT_THROW(hessian(pot, NAN), std::domain_error);
  }
}

TEST(PotentialHessian, Examples) {
  EXPECT_DOUBLE_EQ(hessian(Potential::tsallis_half(), 0.25), 4.0);
  SplitMix64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const double p = 0.001 + 0.998 * rng.uniform();
    EXPECT_NEAR(hessian(Potential::negentropy(), p), 1.0 / p, 1e-12 / p);
  }
}

TEST(PotentialGradient, MatchesFiniteDifferences) {
  SplitMix64 rng(2);
  for (const auto& pot : all_potentials()) {
    for (int i = 0; i < 100; ++i) {
      const double p = 0.01 + 0.98 * rng.uniform();
      const std::uint64_t t = 1 + rng.below(500);
      const double h = 1e-6 * p;
      const double fd = (value(pot, p + h, t) - value(pot, p - h, t)) / (2 * h);
      EXPECT_NEAR(gradient(pot, p, t), fd, 1e-6 * std::abs(fd)) << to_string(pot.kind);
      const double fd2 = (gradient(pot, p + h, t) - gradient(pot, p - h, t)) / (2 * h);
      EXPECT_NEAR(hessian(pot, p, t), fd2, 1e-5 * std::abs(fd2)) << to_string(pot.kind);
    }
  }
}

TEST(PotentialProperties, MidpointConvexity) {
  SplitMix64 rng(3);
  for (const auto& pot : all_potentials()) {
    for (int i = 0; i < 1000; ++i) {
      const double a = 1e-4 + (1 - 1e-4) * rng.uniform();
      const double b = 1e-4 + (1 - 1e-4) * rng.uniform();
      const double mid = value(pot, 0.5 * (a + b), 7);
      EXPECT_LE(mid, 0.5 * (value(pot, a, 7) + value(pot, b, 7)) + 1e-12);
      EXPECT_GT(hessian(pot, a, 7), 0.0);
    }
  }
}

TEST(PotentialProperties, HessianNonincreasingForBarrierKinds) {
  SplitMix64 rng(4);
  for (const auto& pot : all_potentials()) {
    if (pot.kind == PotentialKind::negentropy) continue;
    for (int i = 0; i < 1000; ++i) {
      double a = 1e-4 + (1 - 1e-4) * rng.uniform();
      double b = 1e-4 + (1 - 1e-4) * rng.uniform();
      if (a > b) std::swap(a, b);
      EXPECT_GE(hessian(pot, a, 11), hessian(pot, b, 11));
    }
  }
}

TEST(PotentialProperties, HybridHessianBound) {
  SplitMix64 rng(5);
  for (std::size_t k : {2u, 3u, 10u}) {
    for (double q : {0.5, 1.0, 2.0}) {
      const auto pot = Potential::hybrid(k, q);
      for (int i = 0; i < 500; ++i) {
        const double p = std::pow(10.0, -8.0 * rng.uniform());
        const std::uint64_t t = 1 + rng.below(1000000);
        const double bound = std::sqrt(static_cast<double>(k)) *
                             std::pow(std::log(std::max<double>(3.0, static_cast<double>(t))), 1.0 + q);
        EXPECT_LE(1.0 / (p * p * hessian(pot, p, t)), bound * (1 + 1e-12));
      }
    }
  }
}

TEST(PotentialInverseGradient, InvertsGradient) {
  SplitMix64 rng(6);
  for (const auto& pot : all_potentials()) {
    for (int i = 0; i < 200; ++i) {
      const double p = std::pow(10.0, -6.0 * rng.uniform());
      const std::uint64_t t = 1 + rng.below(100);
      EXPECT_NEAR(inverse_gradient(pot, gradient(pot, p, t), t), p, 1e-12 * p + 1e-300);
    }
  }
  EXPECT_TRUE(std::isinf(inverse_gradient(Potential::tsallis_half(), 0.0)));
  EXPECT_TRUE(std::isinf(inverse_gradient(Potential::hybrid(2, 1.0), 1.0)));
}

TEST(DualMap, Examples) {
  for (const auto& pot : all_potentials(2)) {
    EXPECT_NEAR(dual_gradient_two_arm({pot}, 0.0), 0.5, 1e-12);
  }
  EXPECT_NEAR(dual_gradient_two_arm({Potential::negentropy()}, std::log(3.0)), 0.75, 1e-15);
  const double expected = oracles::bisect_dual_gradient(Potential::tsallis_half(), -8.0);
  EXPECT_NEAR(dual_gradient_two_arm({Potential::tsallis_half()}, -8.0), expected, 1e-10);
}

TEST(DualMap, TsallisMatchesClosedFormAwayFromZero) {
  for (double x = -100.0; x <= -0.01; x *= 0.9) {
    EXPECT_NEAR(dual_gradient_two_arm({Potential::tsallis_half()}, x), oracles::closed_form_tsallis_dual(x), 1e-9)
        << "x=" << x;
  }
}

TEST(DualMap, StableNearZero) {
  // The textbook closed form loses all precision here; bisection on g' does not.
  for (double x : {-1e-3, -1e-6, -1e-9, 1e-12, 1e-5}) {
    EXPECT_NEAR(dual_gradient_two_arm({Potential::tsallis_half()}, x),
                oracles::bisect_dual_gradient(Potential::tsallis_half(), x), 1e-14);
  }
}

TEST(DualMap, ConsistencySymmetryMonotonicity) {
  SplitMix64 rng(7);
  for (const auto& pot : all_potentials(2)) {
    const ResolvedPotential f(pot, 5);
    for (int i = 0; i < 1000; ++i) {
      // Beyond |x| = 30 the logistic map rounds to exactly 0 or 1 in double.
      const double span = pot.kind == PotentialKind::negentropy ? 30.0 : 50.0;
      const double x = -span + 2.0 * span * rng.uniform();
      const double p = dual_gradient_two_arm({pot, 1.0, 5}, x);
      ASSERT_GT(p, 0.0);
      ASSERT_LT(p, 1.0);
      // g' is odd about 1/2; evaluating it at the smaller coordinate avoids forming 1 - p.
      const double small = x > 0.0 ? dual_gradient_two_arm({pot, 1.0, 5}, -x) : p;
      EXPECT_NEAR(detail::two_arm_gradient(f, small), -std::abs(x), 1e-8 * std::max(1.0, std::abs(x)))
          << to_string(pot.kind);
      EXPECT_NEAR(p + dual_gradient_two_arm({pot, 1.0, 5}, -x), 1.0, 1e-10);
      EXPECT_NEAR(p, oracles::bisect_dual_gradient(pot, x, 5), 1e-12);
    }
    for (double x = -50.0; x < 50.0; x += 0.37) {
      EXPECT_LE(dual_gradient_two_arm({pot, 1.0, 5}, x), dual_gradient_two_arm({pot, 1.0, 5}, x + 0.37));
    }
  }
}

TEST(DualMap, NegentropyIsLogistic) {
  for (double x = -40.0; x <= 40.0; x += 0.1) {
    EXPECT_NEAR(dual_gradient_two_arm({Potential::negentropy()}, x), 1.0 / (1.0 + std::exp(-x)), 1e-12);
  }
}

TEST(DualMap, ScalesByLearningRate) {
  const auto pot = Potential::tsallis_half();
  EXPECT_DOUBLE_EQ(dual_gradient_two_arm({pot, 0.1}, -30.0), dual_gradient_two_arm({pot, 1.0}, -3.0));
  EXPECT_THROW(dual_gradient_two_arm({pot}, NAN), std::domain_error);
}

TEST(TailConstant, Examples) {
  const double one = tsallis_tail_constant(1.0, 100000000ULL);
  EXPECT_GE(one, 0.9);
  EXPECT_LE(one, 1.1);
  const double two = tsallis_tail_constant(2.0, 100000000ULL);
  EXPECT_GE(two, 0.225);
  EXPECT_LE(two, 0.275);
  EXPECT_NEAR(tsallis_tail_constant(1.0, 1), oracles::bisect_dual_gradient(Potential::tsallis_half(), -1.0), 1e-12);
  for (double a : {0.5, 1.0, 2.0}) {
    EXPECT_NEAR(tsallis_tail_constant(a, 1000000) * a * a, 1.0, 0.1);
  }
  EXPECT_THROW(tsallis_tail_constant(0.0, 10), std::invalid_argument);
}

TEST(PotentialKindNames, RoundTrip) {
  for (auto kind : {PotentialKind::negentropy, PotentialKind::tsallis_half, PotentialKind::log_barrier,
                    PotentialKind::hybrid}) {
    EXPECT_EQ(potential_kind_from_string(to_string(kind)), kind);
  }
  EXPECT_THROW(potential_kind_from_string("entropy"), std::invalid_argument);
}
