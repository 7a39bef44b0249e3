#pragma once

// Learning rates, exploration rates and feasible-set floors.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "ftrl_bandits/csv.hpp"
#include "ftrl_bandits/random.hpp"

namespace ftrl_bandits {

// -- adaptive learning rate ---------------------------------------------------

/// eta_t = eta0 / sqrt(1 + sum_{s<t} lhat_s^2 / f_s''(P_{s,A_s})).
struct AdaptiveRateState {
  double eta0 = 1.0;
  double accumulator = 0.0;

  double rate() const noexcept { return eta0 / std::sqrt(1.0 + accumulator); }
};

/// Adds loss^2 / (p^2 hess) to the accumulator; the returned state's rate
/// applies to the next round.
inline AdaptiveRateState adaptive_rate_update(AdaptiveRateState state, double loss, double p,
                                              double hess) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("adaptive_rate_update: p outside (0,1]");
  if (!(hess > 0.0)) throw std::invalid_argument("adaptive_rate_update: hessian must be positive");
  if (!(loss >= 0.0 && loss <= 1.0)) throw std::invalid_argument("adaptive_rate_update: loss outside [0,1]");
  state.accumulator += (loss * loss) / (p * p * hess);
  return state;
}

inline double eta_zero_hybrid(double arms, double q) {
  if (!(q > 0.0)) throw std::invalid_argument("eta_zero_hybrid: q must be positive");
  const double root2 = std::sqrt(2.0);
  return std::pow(arms, 0.25) * std::sqrt(13.0 / (3.0 * root2) + 3.0 / (root2 * q));
}

inline double eta_zero_known_horizon(double arms) {
  return std::pow(arms, 0.25) * std::sqrt(3.0) / std::pow(2.0, 0.25);
}

// -- constraint floors and exploration ----------------------------------------

/// Floor of the chopped simplex: min(1/t, 1/k), or min(1/n, 1/k) when the
/// horizon is fixed. The 1/k cap keeps the set nonempty for t < k.
inline double chopped_floor(std::uint64_t t, std::size_t arms,
                            std::optional<std::uint64_t> known_horizon = std::nullopt) {
  if (t < 1) throw std::invalid_argument("chopped_floor: t must be >= 1");
  if (arms < 2) throw std::invalid_argument("chopped_floor: need k >= 2");
  const double denom = static_cast<double>(known_horizon ? *known_horizon : t);
  return std::min(1.0 / denom, 1.0 / static_cast<double>(arms));
}

/// gamma_t = log(t) loglog(t) / t for t >= 3, clamped to (0, 1];
/// gamma_1 = gamma_2 = 1/2.
inline double inf_mixing_gamma(std::uint64_t t) {
  if (t < 1) throw std::invalid_argument("inf_mixing_gamma: t must be >= 1");
  if (t < 3) return 0.5;
  const double td = static_cast<double>(t);
  const double g = std::log(td) * std::log(std::log(td)) / td;
  return std::clamp(g, std::numeric_limits<double>::min(), 1.0);
}

// -- slow exploration set -----------------------------------------------------

/// Nondecreasing unbounded f : N -> N with f(1) = 1, and its first-hitting
/// times tau(m) = min{t : f(t) = m}.
class SlowSetFunction {
 public:
  /// f(n) = max(1, floor(log2 log2 n) + 1); tau(1) = 1, tau(m) = 2^(2^(m-1)).
  static SlowSetFunction iterated_log2() { return SlowSetFunction{}; }

  /// values[n-1] = f(n) for n = 1..values.size().
  static SlowSetFunction tabulated(std::vector<std::uint64_t> values) {
    if (values.empty()) throw std::invalid_argument("SlowSetFunction: empty table");
    if (values.front() != 1) throw std::invalid_argument("SlowSetFunction: f(1) must equal 1");
    for (std::size_t i = 1; i < values.size(); ++i) {
      if (values[i] < values[i - 1]) {
        throw std::invalid_argument("SlowSetFunction: f decreases at n = " + std::to_string(i + 1));
      }
      if (values[i] > values[i - 1] + 1) {
        throw std::invalid_argument("SlowSetFunction: f skips a value at n = " +
                                    std::to_string(i + 1));
      }
    }
    SlowSetFunction f;
    f.table_ = std::move(values);
    return f;
  }

  /// Two-column CSV with header: n,f(n), n = 1, 2, ... consecutively.
  static SlowSetFunction from_csv(const std::string& path) {
    const csv::Table table = csv::read_file(path);
    if (table.header.size() != 2) throw std::runtime_error(path + ": expected two columns n,f");
    std::vector<std::uint64_t> values;
    values.reserve(table.rows.size());
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      const std::string where = path + " row " + std::to_string(r + 2);
      const std::uint64_t n = csv::parse_uint(table.rows[r][0], where);
      if (n != r + 1) throw std::runtime_error(where + ": expected n = " + std::to_string(r + 1));
      values.push_back(csv::parse_uint(table.rows[r][1], where));
    }
    return tabulated(std::move(values));
  }

  bool is_tabulated() const noexcept { return !table_.empty(); }

  /// Largest n for which f is known.
  std::uint64_t domain_limit() const noexcept {
    return is_tabulated() ? table_.size() : std::numeric_limits<std::uint64_t>::max();
  }

  std::uint64_t operator()(std::uint64_t n) const {
    if (n < 1) throw std::invalid_argument("SlowSetFunction: n must be >= 1");
    if (is_tabulated()) {
      if (n > table_.size()) throw std::out_of_range("SlowSetFunction: n beyond table");
      return table_[n - 1];
    }
    if (n < 4) return 1;
    // floor(log2 log2 n) = floor(log2(bit_width(n) - 1)) for n >= 4.
    const auto log2n = static_cast<std::uint64_t>(std::bit_width(n) - 1);
    return static_cast<std::uint64_t>(std::bit_width(log2n) - 1) + 1;
  }

  /// tau(m) as a double; +inf when unknown (tabulated beyond its range) or
  /// beyond double range.
  double first_time(std::uint64_t m) const {
    if (m < 1) throw std::invalid_argument("SlowSetFunction: m must be >= 1");
    if (is_tabulated()) {
      const auto it = std::lower_bound(table_.begin(), table_.end(), m);
      if (it == table_.end()) return std::numeric_limits<double>::infinity();
      return static_cast<double>(it - table_.begin() + 1);
    }
    if (m == 1) return 1.0;
    return std::exp2(std::exp2(static_cast<double>(m - 1)));
  }

 private:
  SlowSetFunction() = default;
  std::vector<std::uint64_t> table_;
};

struct SlowSetSchedule {
  /// Sorted exploration rounds E intersected with [1, n].
  std::vector<std::uint64_t> rounds;
  /// sample_index[j] is the m with E_m = rounds[j].
  std::vector<std::uint64_t> sample_index;
  /// Whether the partial sums of sum_m sum_{j>m} tau(m)/tau(j) had
  /// stabilised over the known range of tau.
  bool summable = true;
  std::string warning;

  bool contains(std::uint64_t t) const {
    return std::binary_search(rounds.begin(), rounds.end(), t);
  }
};

namespace detail {

/// Partial sums S(M) = sum_{m < j <= M} tau(m)/tau(j); stabilised when the
/// final increment is below 1e-6 relative.
inline bool slow_set_summable(const SlowSetFunction& f, std::string& warning) {
  std::vector<double> taus;
  for (std::uint64_t m = 1; m <= 4096; ++m) {
    const double tau = f.first_time(m);
    if (!std::isfinite(tau)) break;
    taus.push_back(tau);
  }
  if (taus.size() < 2) {
    warning = "slow-set function: fewer than two known hitting times; summability unchecked";
    return false;
  }
  double total = 0.0;
  double last_increment = 0.0;
  for (std::size_t j = 1; j < taus.size(); ++j) {
    double increment = 0.0;
    for (std::size_t m = 0; m < j; ++m) increment += taus[m] / taus[j];
    total += increment;
    last_increment = increment;
  }
  if (last_increment > 1e-6 * total) {
    warning = "slow-set function: partial sums of tau(m)/tau(j) still growing (last relative increase " +
              csv::format_double(last_increment / total) + "); exploration-count guarantee may fail";
    return false;
  }
  return true;
}

}  // namespace detail

/// Realises E intersected with [1, n], where E_m is uniform on
/// {1..tau(m)} minus {E_1..E_{m-1}}, sampled sequentially. Only whether
/// E_m <= n matters for later indices, so E_m beyond n is drawn as a
/// Bernoulli event with the exact probability and never materialised.
/// Indices with unknown tau (tabulated f past its table) are skipped.
inline SlowSetSchedule slow_set_schedule(const SlowSetFunction& f, std::uint64_t seed,
                                         std::uint64_t horizon) {
  if (horizon < 1) throw std::invalid_argument("slow_set_schedule: horizon must be >= 1");
  if (f.is_tabulated() && horizon > f.domain_limit()) {
    throw std::invalid_argument("slow_set_schedule: horizon beyond tabulated range");
  }
  SlowSetSchedule schedule;
  schedule.summable = detail::slow_set_summable(f, schedule.warning);

  SplitMix64 rng(substream(seed, 0x51057E7ULL));
  std::unordered_set<std::uint64_t> chosen;  // realised E_m <= horizon
  const double n = static_cast<double>(horizon);
  for (std::uint64_t m = 1;; ++m) {
    const double tau = f.first_time(m);
    if (!std::isfinite(tau)) break;
    const double population = tau - static_cast<double>(m - 1);
    const double window = std::min(tau, n);
    const double free_in_window = window - static_cast<double>(chosen.size());
    if (tau > n) {
      if (free_in_window <= 0.0 || !(rng.uniform() * population < free_in_window)) continue;
    }
    const auto upper = static_cast<std::uint64_t>(window);
    std::uint64_t e = 0;
    do {
      e = 1 + rng.below(upper);
    } while (chosen.count(e) != 0);
    chosen.insert(e);
    schedule.rounds.push_back(e);
    schedule.sample_index.push_back(m);
  }
  std::vector<std::size_t> order(schedule.rounds.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return schedule.rounds[a] < schedule.rounds[b]; });
  SlowSetSchedule sorted = schedule;
  for (std::size_t i = 0; i < order.size(); ++i) {
    sorted.rounds[i] = schedule.rounds[order[i]];
    sorted.sample_index[i] = schedule.sample_index[order[i]];
  }
  return sorted;
}

// -- square-root sum inequality -----------------------------------------------

/// Checks sum_t x_t / sqrt(1 + sum_{s<t} x_s) <= 4 sqrt(1 + sum_t x_t / 2) + B
/// for x_t in [0, B].
inline bool check_sqrt_sum_inequality(std::span<const double> x, double bound) {
  if (!(bound >= 0.0)) throw std::invalid_argument("check_sqrt_sum_inequality: B must be >= 0");
  double prefix = 0.0;
  double lhs = 0.0;
  for (double v : x) {
    if (!(v >= 0.0 && v <= bound)) {
      throw std::invalid_argument("check_sqrt_sum_inequality: entry outside [0, B]");
    }
    lhs += v / std::sqrt(1.0 + prefix);
    prefix += v;
  }
  return lhs <= 4.0 * std::sqrt(1.0 + 0.5 * prefix) + bound;
}

}  // namespace ftrl_bandits
