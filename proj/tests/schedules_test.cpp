#include <gtest/gtest.h>

#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>
#include <vector>

#include "ftrl_bandits/random.hpp"
#include "ftrl_bandits/schedules.hpp"

using namespace ftrl_bandits;
using Big = boost::multiprecision::cpp_dec_float_50;

namespace {
const std::string kData = TEST_DATA_DIR;
}

TEST(AdaptiveRate, Examples) {
  AdaptiveRateState s{2.5, 0.0};
  EXPECT_EQ(s.rate(), 2.5);
  s = adaptive_rate_update(s, 1.0, 0.5, 4.0);
  EXPECT_DOUBLE_EQ(s.accumulator, 1.0);
  EXPECT_DOUBLE_EQ(s.rate(), 2.5 / std::sqrt(2.0));
}

TEST(AdaptiveRate, MonotoneAndValidated) {
  SplitMix64 rng(1);
  AdaptiveRateState s{1.0, 0.0};
  double prev_rate = s.rate(), prev_acc = 0.0;
  for (int i = 0; i < 1000; ++i) {
    s = adaptive_rate_update(s, rng.uniform(), 0.01 + 0.99 * rng.uniform(), 0.1 + rng.uniform());
    EXPECT_GE(s.accumulator, prev_acc);
    EXPECT_LE(s.rate(), prev_rate);
    prev_acc = s.accumulator;
    prev_rate = s.rate();
  }
  EXPECT_THROW(adaptive_rate_update(s, 0.5, 0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(adaptive_rate_update(s, 0.5, 0.5, 0.0), std::invalid_argument);
  EXPECT_THROW(adaptive_rate_update(s, 1.5, 0.5, 1.0), std::invalid_argument);
}

TEST(EtaZero, ArbitraryPrecision) {
  const Big root2 = sqrt(Big(2));
  // q = 1: k^{1/4} sqrt(22 / (3 sqrt 2)); k = 16 gives 2 sqrt(...).
  const Big expected16 = 2 * sqrt(Big(22) / (3 * root2));
  EXPECT_NEAR(eta_zero_hybrid(16, 1.0), expected16.convert_to<double>(), 1e-14);
  const Big general = pow(Big(5), Big("0.25")) * sqrt(Big(13) / (3 * root2) + Big(3) / (root2 * Big("0.5")));
  EXPECT_NEAR(eta_zero_hybrid(5, 0.5), general.convert_to<double>(), 1e-14);
  EXPECT_NEAR(eta_zero_hybrid(1, 1.0), sqrt(Big(22) / (3 * root2)).convert_to<double>(), 1e-14);
  const Big known = pow(Big(3), Big("0.25")) * sqrt(Big(3)) / pow(Big(2), Big("0.25"));
  EXPECT_NEAR(eta_zero_known_horizon(3), known.convert_to<double>(), 1e-14);
  EXPECT_THROW(eta_zero_hybrid(2, 0.0), std::invalid_argument);
}

TEST(ChoppedFloor, Examples) {
  EXPECT_DOUBLE_EQ(chopped_floor(1, 2), 0.5);
  EXPECT_DOUBLE_EQ(chopped_floor(100, 5), 0.01);
  for (std::uint64_t t : {1ULL, 7ULL, 1000ULL, 5000ULL}) EXPECT_DOUBLE_EQ(chopped_floor(t, 5, 1000), 0.001);
  EXPECT_DOUBLE_EQ(chopped_floor(1, 5, 3), 0.2);
}

TEST(ChoppedFloor, NonincreasingAndFeasible) {
  for (std::size_t k : {2u, 3u, 7u}) {
    double prev = 1.0;
    for (std::uint64_t t = 1; t < 500; ++t) {
      const double f = chopped_floor(t, k);
      EXPECT_LE(f, prev);
      EXPECT_LE(f * static_cast<double>(k), 1.0 + 1e-15);
      prev = f;
    }
  }
  EXPECT_THROW(chopped_floor(0, 2), std::invalid_argument);
  EXPECT_THROW(chopped_floor(1, 1), std::invalid_argument);
}

TEST(MixingGamma, Examples) {
  EXPECT_EQ(inf_mixing_gamma(1), 0.5);
  EXPECT_EQ(inf_mixing_gamma(2), 0.5);
  const Big three = log(Big(3)) * log(log(Big(3))) / 3;
  EXPECT_NEAR(inf_mixing_gamma(3), three.convert_to<double>(), 1e-16);
  EXPECT_NEAR(inf_mixing_gamma(3), 0.0345, 1e-4);
  EXPECT_NEAR(inf_mixing_gamma(16), std::log(16.0) * std::log(std::log(16.0)) / 16.0, 1e-16);
  for (std::uint64_t t = 3; t < 100000; t += 7) {
    const double g = inf_mixing_gamma(t);
    EXPECT_GT(g, 0.0);
    EXPECT_LT(g, 1.0);
  }
}

TEST(MixingGamma, SumGrowsLikeLogSquaredLogLog) {
  double sum = 0.0;
  std::uint64_t t = 0;
  for (std::uint64_t n : {1000ULL, 10000ULL, 100000ULL, 1000000ULL}) {
    while (t < n) sum += inf_mixing_gamma(++t);
    const double ln = std::log(static_cast<double>(n));
    EXPECT_LE(sum / (ln * ln * std::log(ln)), 1.0) << n;
  }
}

TEST(SlowSetFunction, IteratedLogValues) {
  const auto f = SlowSetFunction::iterated_log2();
  EXPECT_EQ(f(1), 1u);
  EXPECT_EQ(f(3), 1u);
  EXPECT_EQ(f(4), 2u);
  EXPECT_EQ(f(15), 2u);
  EXPECT_EQ(f(16), 3u);
  EXPECT_EQ(f(255), 3u);
  EXPECT_EQ(f(256), 4u);
  EXPECT_EQ(f(65535), 4u);
  EXPECT_EQ(f(65536), 5u);
  EXPECT_EQ(f(1000000), 5u);
  for (std::uint64_t n = 2; n < 5000; ++n) {
    const double direct = std::floor(std::log2(std::log2(static_cast<double>(n)))) + 1.0;
    EXPECT_EQ(static_cast<double>(f(n)), std::max(1.0, direct)) << n;
  }
  EXPECT_EQ(f.first_time(1), 1.0);
  EXPECT_EQ(f.first_time(2), 4.0);
  EXPECT_EQ(f.first_time(5), 65536.0);
}

TEST(SlowSetFunction, TabulatedFromCsv) {
  const auto f = SlowSetFunction::from_csv(kData + "/slow_set_table.csv");
  EXPECT_TRUE(f.is_tabulated());
  EXPECT_EQ(f.domain_limit(), 20u);
  EXPECT_EQ(f(16), 3u);
  EXPECT_EQ(f.first_time(2), 4.0);
  EXPECT_TRUE(std::isinf(f.first_time(4)));
  EXPECT_THROW(f(21), std::out_of_range);
}

TEST(SlowSetFunction, RejectsInvalidTables) {
  for (const char* name : {"slow_set_skips.csv", "slow_set_bad_start.csv", "slow_set_gap.csv",
                           "slow_set_decreasing.csv"}) {
    EXPECT_ANY_THROW(SlowSetFunction::from_csv(kData + "/" + name)) << name;
  }
  EXPECT_THROW(SlowSetFunction::tabulated({}), std::invalid_argument);
}

TEST(SlowSetSchedule, FirstRoundAlwaysExplores) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = slow_set_schedule(SlowSetFunction::iterated_log2(), seed, 1000);
    ASSERT_FALSE(s.rounds.empty());
    EXPECT_EQ(s.rounds.front(), 1u);
    EXPECT_EQ(s.sample_index.front(), 1u);
    EXPECT_TRUE(s.summable);
  }
}

TEST(SlowSetSchedule, DeterministicPerSeed) {
  const auto f = SlowSetFunction::iterated_log2();
  const auto a = slow_set_schedule(f, 7, 1000000);
  const auto b = slow_set_schedule(f, 7, 1000000);
  EXPECT_EQ(a.rounds, b.rounds);
  EXPECT_EQ(a.sample_index, b.sample_index);
  bool any_different = false;
  for (std::uint64_t seed = 8; seed < 20; ++seed) {
    any_different = any_different || slow_set_schedule(f, seed, 1000000).rounds != a.rounds;
  }
  EXPECT_TRUE(any_different);
}

TEST(SlowSetSchedule, RoundsDistinctSortedInRange) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = slow_set_schedule(SlowSetFunction::iterated_log2(), seed, 100000);
    for (std::size_t i = 0; i < s.rounds.size(); ++i) {
      EXPECT_GE(s.rounds[i], 1u);
      EXPECT_LE(s.rounds[i], 100000u);
      if (i > 0) {
        EXPECT_LT(s.rounds[i - 1], s.rounds[i]);
      }
      EXPECT_LE(static_cast<double>(s.rounds[i]), SlowSetFunction::iterated_log2().first_time(s.sample_index[i]));
    }
  }
}

TEST(SlowSetSchedule, ExplorationCountTracksF) {
  // |E intersected with [n]| / f(n) <= 2 for every n >= 16 in at least 95% of seeds.
  const auto f = SlowSetFunction::iterated_log2();
  int good = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const auto s = slow_set_schedule(f, seed, 1000000);
    bool ok = true;
    for (std::size_t i = 0; i < s.rounds.size(); ++i) {
      const std::uint64_t n = std::max<std::uint64_t>(s.rounds[i], 16);
      std::size_t count = 0;
      for (std::uint64_t r : s.rounds) count += r <= n ? 1 : 0;
      if (static_cast<double>(count) > 2.0 * static_cast<double>(f(n))) ok = false;
    }
    good += ok ? 1 : 0;
  }
  EXPECT_GE(good, 190);
}

TEST(SlowSetSchedule, TabulatedRangeAndSummabilityWarning) {
  const auto table = SlowSetFunction::from_csv(kData + "/slow_set_table.csv");
  const auto s = slow_set_schedule(table, 3, 20);
  EXPECT_FALSE(s.rounds.empty());
  EXPECT_THROW(slow_set_schedule(table, 3, 21), std::invalid_argument);

  const auto linear = SlowSetFunction::from_csv(kData + "/slow_set_linear.csv");
  const auto w = slow_set_schedule(linear, 3, 200);
  EXPECT_FALSE(w.summable);
  EXPECT_FALSE(w.warning.empty());
}

TEST(SqrtSumInequality, Examples) {
  for (double b : {0.5, 1.0, 10.0}) {
    const std::vector<double> single = {b};
    EXPECT_TRUE(check_sqrt_sum_inequality(single, b));
    const std::vector<double> zeros(50, 0.0);
    EXPECT_TRUE(check_sqrt_sum_inequality(zeros, b));
  }
  const std::vector<double> bad = {0.5, 2.0};
  EXPECT_THROW(check_sqrt_sum_inequality(bad, 1.0), std::invalid_argument);
}

TEST(SqrtSumInequality, Fuzz) {
  SplitMix64 rng(11);
  for (int i = 0; i < 10000; ++i) {
    const double b = std::vector<double>{0.5, 1.0, 10.0}[i % 3];
    std::vector<double> x(1 + rng.below(1000));
    for (auto& v : x) v = b * rng.uniform();
    ASSERT_TRUE(check_sqrt_sum_inequality(x, b));
  }
}
