#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "ftrl_bandits/random.hpp"
#include "ftrl_bandits/solver.hpp"
#include "ftrl_bandits/testing/oracles.hpp"

using namespace ftrl_bandits;

namespace {

std::vector<Potential> kinds(std::size_t k) {
  return {Potential::negentropy(), Potential::tsallis_half(), Potential::log_barrier(),
          Potential::hybrid(k, 1.0), Potential::hybrid_known_horizon(k, 500)};
}

void expect_certified(const FtrlSolution& s) {
  EXPECT_LE(s.certificate.stationarity_residual, 1e-8);
  EXPECT_LE(s.certificate.complementarity_residual, 1e-10);
  EXPECT_LE(s.certificate.simplex_residual, 1e-10);
}

}  // namespace

TEST(Solve, ZeroCostGivesUniform) {
  const std::vector<double> cost(4, 0.0);
  for (const auto& pot : kinds(4)) {
    const auto s = solve({cost, pot, 0.7, 0.0, 3});
    for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(s.distribution[i], 0.25, 1e-14);
    expect_certified(s);
  }
}

TEST(Solve, NegentropyIsSoftmax) {
  const std::vector<double> cost = {0.0, std::log(2.0)};
  for (auto method : {SolveMethod::automatic, SolveMethod::multiplier_search}) {
    const auto s = solve({cost, Potential::negentropy(), 1.0, 0.0, 1}, method);
    EXPECT_NEAR(s.distribution[0], 2.0 / 3.0, 1e-14);
    EXPECT_NEAR(s.distribution[1], 1.0 / 3.0, 1e-14);
  }
  SplitMix64 rng(1);
  for (int i = 0; i < 200; ++i) {
    const std::size_t k = 2 + rng.below(6);
    std::vector<double> c(k);
    for (auto& v : c) v = 50 * rng.uniform();
    const double eta = 0.01 + 1.99 * rng.uniform();
    const auto expected = oracles::softmax_weights(c, eta);
    const auto s = solve({c, Potential::negentropy(), eta, 0.0, 1});
    for (std::size_t j = 0; j < k; ++j) EXPECT_NEAR(s.distribution[j], expected[j], 1e-10);
  }
}

TEST(Solve, HybridMatchesGridOracle) {
  const std::vector<double> cost = {0.0, 1.0, 5.0};
  const FtrlProblem problem{cost, Potential::hybrid(3, 1.0), 0.3, 0.05, 10};
  const auto s = solve(problem);
  const auto grid = oracles::grid_search_minimizer(problem);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(s.distribution[i], grid[i], 1e-5);
  expect_certified(s);
}

TEST(Solve, RandomProblemsMatchGridOracle) {
  SplitMix64 rng(2);
  for (int i = 0; i < 60; ++i) {
    const std::size_t k = std::vector<std::size_t>{2, 3, 5}[i % 3];
    std::vector<double> c(k);
    for (auto& v : c) v = 50 * rng.uniform();
    const double eta = 0.01 + 1.99 * rng.uniform();
    const double floor = std::vector<double>{0.0, 0.01, 0.5 / static_cast<double>(k)}[rng.below(3)];
    const FtrlProblem problem{c, kinds(k)[(i / 3) % 5], eta, floor, 1 + rng.below(1000)};
    const auto s = solve(problem);
    const auto grid = oracles::grid_search_minimizer(problem);
    for (std::size_t j = 0; j < k; ++j) EXPECT_NEAR(s.distribution[j], grid[j], 1e-5);
    expect_certified(s);
  }
}

TEST(Solve, TwoArmShortcutAgreesWithMultiplierSearch) {
  SplitMix64 rng(3);
  for (const auto& pot : kinds(2)) {
    for (int i = 0; i < 300; ++i) {
      const std::vector<double> c = {100 * rng.uniform(), 100 * rng.uniform()};
      const double eta = std::pow(10.0, -3.0 + 3.0 * rng.uniform());
      const double floor = rng.uniform() < 0.5 ? 0.0 : 0.01;
      const FtrlProblem problem{c, pot, eta, floor, 1 + rng.below(1000)};
      const auto a = solve(problem, SolveMethod::automatic);
      const auto b = solve(problem, SolveMethod::multiplier_search);
      EXPECT_NEAR(a.distribution[0], b.distribution[0], 1e-10);
      expect_certified(a);
      expect_certified(b);
    }
  }
}

TEST(Solve, TwoArmUnconstrainedExamples) {
  for (const auto& pot : kinds(2)) EXPECT_NEAR(solve_two_arm_unconstrained(pot, 0.5, 0.0), 0.5, 1e-12);
  EXPECT_NEAR(solve_two_arm_unconstrained(Potential::negentropy(), 1.0, std::log(3.0)), 0.75, 1e-15);
  // gap = L_2 - L_1 = -30 means cost = (30, 0).
  const std::vector<double> cost = {30.0, 0.0};
  const auto s = solve({cost, Potential::tsallis_half(), 0.1, 0.0, 1});
  EXPECT_NEAR(solve_two_arm_unconstrained(Potential::tsallis_half(), 0.1, -30.0), s.distribution[0], 1e-8);
}

TEST(Solve, MonotoneInOwnCost) {
  SplitMix64 rng(4);
  for (int i = 0; i < 200; ++i) {
    const std::size_t k = 2 + rng.below(4);
    std::vector<double> c(k);
    for (auto& v : c) v = 20 * rng.uniform();
    const auto pot = kinds(k)[i % 5];
    const double floor = rng.uniform() < 0.5 ? 0.0 : 0.2 / static_cast<double>(k);
    const auto before = solve({c, pot, 0.5, floor, 5});
    const std::size_t j = rng.below(k);
    c[j] += 5 * rng.uniform();
    const auto after = solve({c, pot, 0.5, floor, 5});
    EXPECT_LE(after.distribution[j], before.distribution[j] + 1e-12);
  }
}

TEST(Solve, FloorActivation) {
  for (const auto& pot : kinds(3)) {
    const std::vector<double> cost = {0.0, 1e6, 0.5};
    const auto s = solve({cost, pot, 1.0, 0.02, 4});
    EXPECT_NEAR(s.distribution[1], 0.02, 1e-10) << to_string(pot.kind);
    expect_certified(s);
  }
}

TEST(Solve, FullFloorGivesUniform) {
  const std::vector<double> cost = {0.0, 3.0, 9.0, 1.0};
  const auto s = solve({cost, Potential::tsallis_half(), 1.0, 0.25, 1});
  for (std::size_t i = 0; i < 4; ++i) EXPECT_DOUBLE_EQ(s.distribution[i], 0.25);
}

TEST(Solve, ExtremeScalesStayCertified) {
  SplitMix64 rng(5);
  for (int i = 0; i < 5000; ++i) {
    const std::size_t k = 2 + rng.below(9);
    std::vector<double> c(k);
    const double scale = std::pow(10.0, 6 * rng.uniform() - 1);
    for (auto& v : c) v = scale * rng.uniform();
    const double eta = std::pow(10.0, 5 * rng.uniform() - 4);
    const double floor = std::vector<double>{0.0, 1e-4, 0.5 / static_cast<double>(k)}[rng.below(3)];
    const auto pot = kinds(k)[i % 5];
    const auto s = solve({c, pot, eta, floor, 1 + rng.below(1000000)});
    EXPECT_LE(s.certificate.simplex_residual, 1e-10);
    EXPECT_LE(s.certificate.stationarity_residual * eta, 1e-8 * (1 + std::abs(s.certificate.multiplier) * eta));
    EXPECT_GE(s.distribution.min_entry(), floor - 1e-12);
  }
}

TEST(Solve, NegentropyUnderflowIsCertified) {
  const std::vector<double> cost = {0.0, 5000.0, 20.0};
  const auto s = solve({cost, Potential::negentropy(), 1.0, 0.0, 1});
  EXPECT_EQ(s.distribution[1], 0.0);
  expect_certified(s);
}

TEST(Solve, RejectsInvalidProblems) {
  const std::vector<double> one = {0.0};
  const std::vector<double> two = {0.0, 1.0};
  const std::vector<double> bad = {0.0, NAN};
  EXPECT_THROW(solve({one, Potential::tsallis_half(), 1.0, 0.0, 1}), std::invalid_argument);
  EXPECT_THROW(solve({two, Potential::tsallis_half(), 0.0, 0.0, 1}), std::invalid_argument);
  EXPECT_THROW(solve({two, Potential::tsallis_half(), 1.0, 0.6, 1}), std::invalid_argument);
  EXPECT_THROW(solve({bad, Potential::tsallis_half(), 1.0, 0.0, 1}), std::invalid_argument);
}

TEST(Certify, DetectsWrongSolution) {
  const std::vector<double> cost = {0.0, 1.0, 2.0};
  const FtrlProblem problem{cost, Potential::log_barrier(), 1.0, 0.0, 1};
  const auto s = solve(problem);
  const std::vector<double> wrong = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  const auto cert = certify(problem, wrong, s.certificate.multiplier);
  EXPECT_GT(cert.stationarity_residual + cert.complementarity_residual, 1e-3);
}
