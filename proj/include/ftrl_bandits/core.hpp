#pragma once

// Domain types shared by every module: loss vectors, sampling
// distributions, importance-weighted estimates and interaction traces.
//
// Arms are 0-based throughout; arm 0 is the arm the environments make
// optimal.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ftrl_bandits {

inline constexpr double kSumTolerance = 1e-10;
inline constexpr double kFloorTolerance = 1e-12;

/// Loss vector in [0,1]^k, k >= 2.
class LossVector {
 public:
  LossVector() = default;
  explicit LossVector(std::vector<double> entries) : entries_(std::move(entries)) {
    if (entries_.size() < 2) {
      throw std::invalid_argument("LossVector: need at least two arms");
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      const double v = entries_[i];
      if (!(v >= 0.0 && v <= 1.0)) {
        throw std::invalid_argument("LossVector: entry " + std::to_string(i) +
                                    " = " + std::to_string(v) +
                                    " outside [0,1]");
      }
    }
  }

  std::size_t size() const noexcept { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  std::span<const double> entries() const noexcept { return entries_; }

  friend bool operator==(const LossVector&, const LossVector&) = default;

 private:
  std::vector<double> entries_;
};

/// Point of the simplex, optionally restricted to [floor, 1]^k.
class ProbabilityVector {
 public:
  ProbabilityVector() = default;
  ProbabilityVector(std::vector<double> entries, double floor)
      : entries_(std::move(entries)), floor_(floor) {
    if (entries_.size() < 2) {
      throw std::invalid_argument("ProbabilityVector: need at least two arms");
    }
    if (!(floor_ >= 0.0)) {
      throw std::invalid_argument("ProbabilityVector: negative floor");
    }
    double sum = 0.0;
    for (double p : entries_) {
      if (!(p >= floor_ - kFloorTolerance && p <= 1.0)) {
        throw std::invalid_argument("ProbabilityVector: entry " +
                                    std::to_string(p) + " violates [" +
                                    std::to_string(floor_) + ", 1]");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
      throw std::invalid_argument("ProbabilityVector: entries sum to " +
                                  std::to_string(sum));
    }
  }

  static ProbabilityVector uniform(std::size_t k) {
    return ProbabilityVector(std::vector<double>(k, 1.0 / static_cast<double>(k)), 0.0);
  }

  std::size_t size() const noexcept { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  double floor() const noexcept { return floor_; }
  std::span<const double> entries() const noexcept { return entries_; }
  double min_entry() const { return *std::min_element(entries_.begin(), entries_.end()); }

  /// Moves the storage out so a caller can refill it without reallocating.
  std::vector<double> release() && noexcept { return std::move(entries_); }

  /// Inverse-CDF sampling with a single uniform u in [0,1). Arms with zero
  /// probability are never returned.
  std::size_t sample(double u) const noexcept {
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (entries_[i] <= 0.0) continue;
      last_positive = i;
      cumulative += entries_[i];
      if (u < cumulative) return i;
    }
    return last_positive;
  }

  friend bool operator==(const ProbabilityVector&, const ProbabilityVector&) = default;

 private:
  std::vector<double> entries_;
  double floor_ = 0.0;
};

/// Nonnegative loss estimates: a single-round estimate or a running sum.
class EstimateVector {
 public:
  EstimateVector() = default;
  explicit EstimateVector(std::size_t k) : entries_(k, 0.0) {}
  explicit EstimateVector(std::vector<double> entries) : entries_(std::move(entries)) {
    for (double v : entries_) {
      if (!(v >= 0.0)) throw std::invalid_argument("EstimateVector: negative or NaN entry");
    }
  }

  std::size_t size() const noexcept { return entries_.size(); }
  double operator[](std::size_t i) const { return entries_[i]; }
  std::span<const double> entries() const noexcept { return entries_; }

  /// Adds a nonnegative amount to one coordinate.
  void add_at(std::size_t i, double amount) {
    if (!(amount >= 0.0)) throw std::invalid_argument("EstimateVector: negative increment");
    entries_.at(i) += amount;
  }

  EstimateVector& operator+=(const EstimateVector& other) {
    if (other.size() != size()) throw std::invalid_argument("EstimateVector: size mismatch");
    for (std::size_t i = 0; i < size(); ++i) entries_[i] += other.entries_[i];
    return *this;
  }

  friend bool operator==(const EstimateVector&, const EstimateVector&) = default;

 private:
  std::vector<double> entries_;
};

/// Importance-weighted estimate: zero except at `action`, where it is
/// loss[action] / dist[action].
inline EstimateVector importance_weighted_estimate(const LossVector& loss,
                                                   std::size_t action,
                                                   const ProbabilityVector& dist) {
  if (loss.size() != dist.size()) {
    throw std::invalid_argument("importance_weighted_estimate: size mismatch");
  }
  if (action >= loss.size()) {
    throw std::out_of_range("importance_weighted_estimate: action out of range");
  }
  if (!(dist[action] > 0.0)) {
    throw std::domain_error(
        "importance_weighted_estimate: played arm has zero probability");
  }
  EstimateVector out(loss.size());
  out.add_at(action, loss[action] / dist[action]);
  return out;
}

struct RoundRecord {
  std::uint64_t t = 0;
  std::size_t action = 0;
  double loss_incurred = 0.0;
  ProbabilityVector distribution;
  /// Learning rate in force at round t. Policies without one record 1.
  double learning_rate = 1.0;
};

/// Per-policy counters that the acceptance checks read.
struct RunDiagnostics {
  std::uint64_t exploration_rounds = 0;
  /// Last round at which the optimal arm did not strictly lead the
  /// exploration-sample ranking (slow explorer only).
  std::uint64_t last_misranked_round = 0;
  std::uint64_t ratio_bound_checks = 0;
  std::uint64_t ratio_bound_violations = 0;
  double final_learning_rate = 0.0;
};

struct RunRecord {
  std::uint64_t seed = 0;
  std::uint64_t horizon = 0;
  std::size_t arms = 0;
  std::optional<std::vector<RoundRecord>> trace;
  double random_regret = 0.0;
  /// min_i L_{n,i}; equals L_{n,1} whenever arm 0 is optimal.
  double cumulative_best_arm_loss = 0.0;
  std::size_t best_arm = 0;
  RunDiagnostics diagnostics;
};

/// Cumulative losses L_{n,i} of a loss sequence.
inline std::vector<double> cumulative_losses(std::span<const LossVector> losses) {
  if (losses.empty()) throw std::invalid_argument("cumulative_losses: empty sequence");
  std::vector<double> total(losses.front().size(), 0.0);
  for (const auto& l : losses) {
    if (l.size() != total.size()) throw std::invalid_argument("cumulative_losses: ragged sequence");
    for (std::size_t i = 0; i < total.size(); ++i) total[i] += l[i];
  }
  return total;
}

/// Random regret: sum_t loss_t[A_t] - min_i L_{n,i}.
inline double random_regret(std::span<const RoundRecord> trace,
                            std::span<const LossVector> losses) {
  if (trace.size() != losses.size()) {
    throw std::invalid_argument("random_regret: trace has " +
                                std::to_string(trace.size()) + " rounds, losses " +
                                std::to_string(losses.size()));
  }
  if (trace.empty()) throw std::invalid_argument("random_regret: empty trace");
  double incurred = 0.0;
  for (std::size_t t = 0; t < trace.size(); ++t) {
    if (trace[t].action >= losses[t].size()) {
      throw std::out_of_range("random_regret: action out of range");
    }
    incurred += losses[t][trace[t].action];
  }
  const auto totals = cumulative_losses(losses);
  return incurred - *std::min_element(totals.begin(), totals.end());
}

}  // namespace ftrl_bandits
