#pragma once

// Bandit policies. Each FTRL policy composes a potential, a learning-rate
// rule, a feasible-set floor and (for explored_inf) uniform mixing:
//
//   exp3_fixed                negentropy, fixed eta
//   inf_fixed                 1/2-Tsallis, fixed eta
//   logbarrier_fixed          log barrier, fixed eta
//   hybrid_inf_anytime        hybrid(q), adaptive eta, floor min(1/t, 1/k)
//   hybrid_inf_known_horizon  hybrid(log n), adaptive eta, floor min(1/n, 1/k)
//   explored_inf              1/2-Tsallis with eta_t = sqrt(1/t), mixed with
//                             gamma_t of uniform
//   slow_explorer             uniform play on a sparse random set E, greedy on
//                             exploration-sample means elsewhere
//
// Fixed rates default to eta = eta_scale / sqrt(n).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ftrl_bandits/core.hpp"
#include "ftrl_bandits/potentials.hpp"
#include "ftrl_bandits/schedules.hpp"
#include "ftrl_bandits/solver.hpp"

namespace ftrl_bandits {

enum class PolicyKind {
  exp3_fixed,
  inf_fixed,
  logbarrier_fixed,
  hybrid_inf_anytime,
  hybrid_inf_known_horizon,
  explored_inf,
  slow_explorer,
};

inline std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::exp3_fixed: return "exp3_fixed";
    case PolicyKind::inf_fixed: return "inf_fixed";
    case PolicyKind::logbarrier_fixed: return "logbarrier_fixed";
    case PolicyKind::hybrid_inf_anytime: return "hybrid_inf_anytime";
    case PolicyKind::hybrid_inf_known_horizon: return "hybrid_inf_known_horizon";
    case PolicyKind::explored_inf: return "explored_inf";
    case PolicyKind::slow_explorer: return "slow_explorer";
  }
  return "unknown";
}

inline PolicyKind policy_kind_from_string(std::string_view name) {
  for (auto kind : {PolicyKind::exp3_fixed, PolicyKind::inf_fixed, PolicyKind::logbarrier_fixed,
                    PolicyKind::hybrid_inf_anytime, PolicyKind::hybrid_inf_known_horizon,
                    PolicyKind::explored_inf, PolicyKind::slow_explorer}) {
    if (to_string(kind) == name) return kind;
  }
  throw std::invalid_argument("unknown policy kind '" + std::string(name) + "'");
}

inline bool is_fixed_rate(PolicyKind kind) {
  return kind == PolicyKind::exp3_fixed || kind == PolicyKind::inf_fixed ||
         kind == PolicyKind::logbarrier_fixed;
}

struct PolicyConfig {
  PolicyKind kind = PolicyKind::hybrid_inf_anytime;
  /// Fixed-rate kinds: explicit eta; otherwise eta = eta_scale / sqrt(n).
  std::optional<double> eta;
  double eta_scale = 1.0;
  /// hybrid_inf_anytime only.
  double q = 1.0;
  /// slow_explorer only; defaults to the iterated logarithm.
  std::optional<SlowSetFunction> slow_set;
};

class Policy {
 public:
  /// `horizon` is the run length n (read by the fixed-rate and known-horizon
  /// kinds and by slow_explorer); `seed` drives slow_explorer's exploration set.
  Policy(const PolicyConfig& config, std::size_t arms, std::uint64_t horizon,
         std::uint64_t seed = 0)
      : config_(config), arms_(arms), horizon_(horizon), estimates_(arms, 0.0),
        play_counts_(arms, 0) {
    if (arms_ < 2) throw std::invalid_argument("Policy: need at least two arms");
    if (horizon_ < 1) throw std::invalid_argument("Policy: horizon must be >= 1");
    switch (config_.kind) {
      case PolicyKind::exp3_fixed: potential_ = Potential::negentropy(); break;
      case PolicyKind::inf_fixed:
      case PolicyKind::explored_inf: potential_ = Potential::tsallis_half(); break;
      case PolicyKind::logbarrier_fixed: potential_ = Potential::log_barrier(); break;
      case PolicyKind::hybrid_inf_anytime:
        potential_ = Potential::hybrid(arms_, config_.q);
        rate_.eta0 = eta_zero_hybrid(static_cast<double>(arms_), config_.q);
        break;
      case PolicyKind::hybrid_inf_known_horizon:
        potential_ = Potential::hybrid_known_horizon(arms_, horizon_);
        rate_.eta0 = eta_zero_known_horizon(static_cast<double>(arms_));
        break;
      case PolicyKind::slow_explorer: {
        const SlowSetFunction f = config_.slow_set.value_or(SlowSetFunction::iterated_log2());
        schedule_ = slow_set_schedule(f, seed, horizon_);
        slow_set_ = f;
        std::uint64_t largest = 0;
        for (std::uint64_t j : schedule_.sample_index) largest = std::max(largest, j);
        sample_arm_.assign(largest + 1, 0);
        sample_value_.assign(largest + 1, 0.0);
        sample_seen_.assign(largest + 1, false);
        break;
      }
    }
    if (is_fixed_rate(config_.kind)) {
      fixed_eta_ = config_.eta.value_or(config_.eta_scale / std::sqrt(static_cast<double>(horizon_)));
      if (!(fixed_eta_ > 0.0)) throw std::invalid_argument("Policy: fixed eta must be positive");
    }
    distribution_ = ProbabilityVector::uniform(arms_);
  }

  PolicyKind kind() const noexcept { return config_.kind; }
  std::size_t arms() const noexcept { return arms_; }
  /// Index of the round the next call to next_distribution() serves.
  std::uint64_t round() const noexcept { return t_; }
  std::span<const double> estimates() const noexcept { return estimates_; }
  std::span<const std::uint64_t> play_counts() const noexcept { return play_counts_; }
  const AdaptiveRateState& rate_state() const noexcept { return rate_; }
  const RunDiagnostics& diagnostics() const noexcept { return diagnostics_; }
  const SlowSetSchedule& exploration_schedule() const noexcept { return schedule_; }
  /// Pre-mixing FTRL iterate of the current round (equal to the sampling
  /// distribution for every kind except explored_inf).
  std::span<const double> ftrl_iterate() const noexcept { return iterate_; }

  /// Learning rate in force for the current round (1 for slow_explorer).
  double learning_rate() const noexcept {
    switch (config_.kind) {
      case PolicyKind::hybrid_inf_anytime:
      case PolicyKind::hybrid_inf_known_horizon: return rate_.rate();
      case PolicyKind::explored_inf: return std::sqrt(1.0 / static_cast<double>(t_));
      case PolicyKind::slow_explorer: return 1.0;
      default: return fixed_eta_;
    }
  }

  const ProbabilityVector& next_distribution() {
    if (pending_) return distribution_;
    std::vector<double> p = std::move(distribution_).release();
    double floor = 0.0;
    switch (config_.kind) {
      case PolicyKind::exp3_fixed:
      case PolicyKind::inf_fixed:
      case PolicyKind::logbarrier_fixed:
        solve_into({estimates_, potential_, fixed_eta_, 0.0, t_}, p);
        iterate_ = p;
        break;
      case PolicyKind::hybrid_inf_anytime:
      case PolicyKind::hybrid_inf_known_horizon: {
        const std::optional<std::uint64_t> known =
            config_.kind == PolicyKind::hybrid_inf_known_horizon ? std::optional(horizon_)
                                                                 : std::nullopt;
        floor = chopped_floor(t_, arms_, known);
        solve_into({estimates_, potential_, rate_.rate(), floor, t_}, p);
        iterate_ = p;
        break;
      }
      case PolicyKind::explored_inf: explored_inf_step(p); break;
      case PolicyKind::slow_explorer: slow_explorer_step(p); break;
    }
    distribution_ = ProbabilityVector(std::move(p), floor);
    pending_ = true;
    return distribution_;
  }

  void observe(std::size_t action, double loss) {
    if (!pending_) throw std::logic_error("Policy::observe called before next_distribution");
    if (action >= arms_) throw std::out_of_range("Policy::observe: action out of range");
    if (!(loss >= 0.0 && loss <= 1.0)) throw std::invalid_argument("Policy::observe: loss outside [0,1]");
    ++play_counts_[action];
    if (config_.kind == PolicyKind::slow_explorer) {
      if (exploring_) {
        const std::uint64_t j = schedule_.sample_index[next_exploration_ - 1];
        record_sample(j, action, static_cast<double>(arms_) * loss);
        ++diagnostics_.exploration_rounds;
      }
    } else {
      const double p = distribution_[action];
      if (!(p > 0.0)) throw std::domain_error("Policy::observe: played arm has zero probability");
      estimates_[action] += loss / p;
      if (config_.kind == PolicyKind::hybrid_inf_anytime ||
          config_.kind == PolicyKind::hybrid_inf_known_horizon) {
        rate_ = adaptive_rate_update(rate_, loss, p, hessian(potential_, p, t_));
      }
    }
    diagnostics_.final_learning_rate = learning_rate();
    pending_ = false;
    ++t_;
  }

 private:
  void explored_inf_step(std::vector<double>& p) {
    const double eta = std::sqrt(1.0 / static_cast<double>(t_));
    solve_into({estimates_, potential_, eta, 0.0, t_}, iterate_);
    // P~_i <= 1 / (eta^2 (L_i - L_1)^2) whenever L_i > L_1.
    for (std::size_t i = 1; i < arms_; ++i) {
      const double gap = estimates_[i] - estimates_[0];
      if (gap > 0.0) {
        ++diagnostics_.ratio_bound_checks;
        const double bound = 1.0 / (eta * eta * gap * gap);
        if (iterate_[i] > bound * (1.0 + 1e-9) + 1e-15) ++diagnostics_.ratio_bound_violations;
      }
    }
    const double gamma = inf_mixing_gamma(t_);
    const double share = gamma / static_cast<double>(arms_);
    p.resize(arms_);
    for (std::size_t i = 0; i < arms_; ++i) p[i] = (1.0 - gamma) * iterate_[i] + share;
  }

  void record_sample(std::uint64_t j, std::size_t arm, double value) {
    sample_arm_[j] = arm;
    sample_value_[j] = value;
    sample_seen_[j] = true;
  }

  /// theta_m = (1/m) sum_{j<=m} X_j with X_j = k loss at E_j on the played arm.
  void refresh_means(std::uint64_t m) {
    if (m == means_index_) return;
    means_.assign(arms_, 0.0);
    std::uint64_t used = 0;
    for (std::uint64_t j = 1; j <= m && j < sample_seen_.size(); ++j) {
      if (!sample_seen_[j]) continue;
      means_[sample_arm_[j]] += sample_value_[j];
      ++used;
    }
    if (used > 0) {
      for (double& v : means_) v /= static_cast<double>(used);
    }
    means_used_ = used;
    means_index_ = m;
  }

  void slow_explorer_step(std::vector<double>& p) {
    p.assign(arms_, 0.0);
    exploring_ = next_exploration_ < schedule_.rounds.size() &&
                 schedule_.rounds[next_exploration_] == t_;
    if (exploring_) ++next_exploration_;
    std::size_t leader = 0;
    bool have_estimates = false;
    if (t_ > 1) {
      refresh_means((*slow_set_)(t_ - 1));
      have_estimates = means_used_ > 0;
      if (have_estimates) {
        leader = static_cast<std::size_t>(std::min_element(means_.begin(), means_.end()) -
                                          means_.begin());
        const double rival = *std::min_element(means_.begin() + 1, means_.end());
        if (means_[0] >= rival) diagnostics_.last_misranked_round = t_;
      } else {
        diagnostics_.last_misranked_round = t_;
      }
    }
    if (exploring_ || !have_estimates) {
      std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(arms_));
    } else {
      p[leader] = 1.0;
    }
    iterate_ = p;
  }

  PolicyConfig config_;
  std::size_t arms_;
  std::uint64_t horizon_;
  std::uint64_t t_ = 1;
  Potential potential_;
  double fixed_eta_ = 0.0;
  AdaptiveRateState rate_;
  std::vector<double> estimates_;
  std::vector<std::uint64_t> play_counts_;
  std::vector<double> iterate_;
  ProbabilityVector distribution_;
  bool pending_ = false;
  RunDiagnostics diagnostics_;

  // slow_explorer
  std::optional<SlowSetFunction> slow_set_;
  SlowSetSchedule schedule_;
  std::size_t next_exploration_ = 0;
  bool exploring_ = false;
  std::vector<std::size_t> sample_arm_;
  std::vector<double> sample_value_;
  std::vector<bool> sample_seen_;
  std::vector<double> means_;
  std::uint64_t means_index_ = 0;
  std::uint64_t means_used_ = 0;
};

// -- regret ceilings ----------------------------------------------------------

/// Anytime hybrid INF with q = 1.
inline double corollary2_bound(double arms, double horizon, double best_arm_loss) {
  if (!(horizon >= 3.0)) throw std::invalid_argument("corollary2_bound: n must be >= 3");
  if (!(best_arm_loss >= 0.0)) throw std::invalid_argument("corollary2_bound: L_n1 must be >= 0");
  const double k = arms;
  const double ln = std::log(horizon);
  return 19.0 * k * k + 22.0 * k * ln * ln + 2.0 * k * ln +
         6.5 * ln *
             std::sqrt(k * best_arm_loss + 19.0 * k * k * k + 2.0 * k * k * ln +
                       11.2 * k * k * ln * ln);
}

/// Hybrid INF tuned for a known horizon.
inline double corollary3_bound(double arms, double horizon, double best_arm_loss) {
  if (!(horizon >= 3.0)) throw std::invalid_argument("corollary3_bound: n must be >= 3");
  if (!(best_arm_loss >= 0.0)) throw std::invalid_argument("corollary3_bound: L_n1 must be >= 0");
  const double k = arms;
  const double ln = std::log(horizon);
  return k + 9.1 * k * ln +
         4.2 * std::sqrt(k * best_arm_loss * ln + 2.0 * std::sqrt(k) + 6.0 * k * k * ln * ln);
}

}  // namespace ftrl_bandits
