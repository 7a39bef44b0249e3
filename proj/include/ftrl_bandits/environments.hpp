#pragma once

// Oblivious loss sequences. Every loss is a pure function of the
// environment descriptor (including its seed) and the round index, so any
// two learners facing the same environment see the same losses.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include "ftrl_bandits/core.hpp"
#include "ftrl_bandits/csv.hpp"
#include "ftrl_bandits/random.hpp"

namespace ftrl_bandits {

enum class EnvironmentKind { stochastic_bernoulli, variance_adversary, linearly_separable, file_replay };

inline std::string_view to_string(EnvironmentKind kind) {
  switch (kind) {
    case EnvironmentKind::stochastic_bernoulli: return "stochastic_bernoulli";
    case EnvironmentKind::variance_adversary: return "variance_adversary";
    case EnvironmentKind::linearly_separable: return "linearly_separable";
    case EnvironmentKind::file_replay: return "file_replay";
  }
  return "unknown";
}

struct StochasticBernoulli {
  std::vector<double> means;
  std::uint64_t seed = 0;
};

/// Two arms, horizon n divisible by 4:
///   t <= n/2: (alpha, 0);   t > n/2: (0, 1).
struct VarianceAdversary {
  double alpha = 0.25;
  std::uint64_t horizon = 4;
  std::uint64_t requested_horizon = 4;
};

/// loss_1 = 0 (or uniform on [0, 1 - max gap]); loss_i = clip(loss_1 + gap_{i-1} + noise)
/// with noise uniform on [-gap/2, gap/2] when enabled, so every round
/// separates arm i from arm 1 by at least gap_{i-1}/2.
struct LinearlySeparable {
  std::vector<double> gaps;
  bool random_base = true;
  bool noise = true;
  std::uint64_t seed = 0;
};

struct FileReplay {
  std::string path;
  std::size_t arms = 0;
  std::shared_ptr<const std::vector<double>> losses;  // row-major, rounds x arms

  std::uint64_t rounds() const { return losses->size() / arms; }
};

class Environment {
 public:
  static Environment stochastic_bernoulli(std::vector<double> means, std::uint64_t seed) {
    if (means.size() < 2) throw std::invalid_argument("stochastic_bernoulli: need at least two arms");
    for (double m : means) {
      if (!(m >= 0.0 && m <= 1.0)) throw std::invalid_argument("stochastic_bernoulli: mean outside [0,1]");
    }
    return Environment(StochasticBernoulli{std::move(means), seed}, 0);
  }

  static Environment variance_adversary(double alpha, std::uint64_t horizon) {
    if (!(alpha >= 0.0 && alpha <= 0.5)) {
      throw std::invalid_argument("variance_adversary: alpha must lie in [0, 1/2]");
    }
    if (horizon < 4) throw std::invalid_argument("variance_adversary: horizon must be >= 4");
    return Environment(VarianceAdversary{alpha, horizon - horizon % 4, horizon}, 0);
  }

  static Environment linearly_separable(std::vector<double> gaps, bool random_base, bool noise,
                                        std::uint64_t seed) {
    if (gaps.empty()) throw std::invalid_argument("linearly_separable: need at least one gap");
    for (double g : gaps) {
      if (!(g > 0.0 && g <= 1.0)) throw std::invalid_argument("linearly_separable: gap outside (0,1]");
    }
    return Environment(LinearlySeparable{std::move(gaps), random_base, noise, seed}, 0);
  }

  /// Loss rows from a CSV with a header naming the k >= 2 arm columns.
  /// Values outside [0,1] are rejected, not clipped.
  static Environment file_replay(const std::string& path) {
    const csv::Table table = csv::read_file(path);
    const std::size_t k = table.header.size();
    if (k < 2) throw std::runtime_error(path + ": need at least two loss columns");
    if (table.rows.empty()) throw std::runtime_error(path + ": no rounds");
    auto data = std::make_shared<std::vector<double>>();
    data->reserve(table.rows.size() * k);
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
      for (std::size_t i = 0; i < k; ++i) {
        const std::string where = path + " round " + std::to_string(r + 1) + " column " +
                                  table.header[i];
        const double v = csv::parse_double(table.rows[r][i], where);
        if (!(v >= 0.0 && v <= 1.0)) {
          throw std::runtime_error(where + ": loss " + table.rows[r][i] + " outside [0,1]");
        }
        data->push_back(v);
      }
    }
    return Environment(FileReplay{path, k, std::move(data)}, 0);
  }

  EnvironmentKind kind() const noexcept { return static_cast<EnvironmentKind>(params_.index()); }
  std::string_view name() const noexcept { return to_string(kind()); }

  std::size_t arms() const noexcept {
    return std::visit(
        [](const auto& p) -> std::size_t {
          using T = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<T, StochasticBernoulli>) return p.means.size();
          else if constexpr (std::is_same_v<T, VarianceAdversary>) return 2;
          else if constexpr (std::is_same_v<T, LinearlySeparable>) return p.gaps.size() + 1;
          else return p.arms;
        },
        params_);
  }

  /// Largest valid round, or 0 when unbounded.
  std::uint64_t horizon_limit() const noexcept {
    if (const auto* a = std::get_if<VarianceAdversary>(&params_)) return a->horizon;
    if (const auto* f = std::get_if<FileReplay>(&params_)) return f->rounds();
    return 0;
  }

  const auto& parameters() const noexcept { return params_; }

  /// Writes the losses of round t (1-based) into `out` (size k).
  void loss_into(std::uint64_t t, std::span<double> out) const {
    if (t < 1) throw std::out_of_range("loss_at: rounds start at 1");
    const std::uint64_t limit = horizon_limit();
    if (limit != 0 && t > limit) {
      throw std::out_of_range("loss_at: round " + std::to_string(t) + " beyond horizon " +
                              std::to_string(limit));
    }
    std::visit([&](const auto& p) { fill(p, t, out); }, params_);
  }

  LossVector loss_at(std::uint64_t t) const {
    std::vector<double> out(arms());
    loss_into(t, out);
    return LossVector(std::move(out));
  }

 private:
  using Parameters = std::variant<StochasticBernoulli, VarianceAdversary, LinearlySeparable, FileReplay>;

  template <typename P>
  Environment(P params, int) : params_(std::move(params)) {}

  static void fill(const StochasticBernoulli& p, std::uint64_t t, std::span<double> out) {
    const std::uint64_t key = substream(p.seed, 0xBE2A0ULL);
    const std::uint64_t k = p.means.size();
    for (std::uint64_t i = 0; i < k; ++i) {
      out[i] = counter_uniform(key, t * k + i) < p.means[i] ? 1.0 : 0.0;
    }
  }

  static void fill(const VarianceAdversary& p, std::uint64_t t, std::span<double> out) {
    if (2 * t <= p.horizon) {
      out[0] = p.alpha;
      out[1] = 0.0;
    } else {
      out[0] = 0.0;
      out[1] = 1.0;
    }
  }

  static void fill(const LinearlySeparable& p, std::uint64_t t, std::span<double> out) {
    const std::uint64_t key = substream(p.seed, 0x5E9A2ULL);
    const std::uint64_t k = p.gaps.size() + 1;
    const double widest = *std::max_element(p.gaps.begin(), p.gaps.end());
    const double base = p.random_base ? counter_uniform(key, t * k) * (1.0 - widest) : 0.0;
    out[0] = base;
    for (std::uint64_t i = 1; i < k; ++i) {
      const double gap = p.gaps[i - 1];
      const double jitter = p.noise ? (counter_uniform(key, t * k + i) - 0.5) * gap : 0.0;
      out[i] = std::clamp(base + gap + jitter, 0.0, 1.0);
    }
  }

  static void fill(const FileReplay& p, std::uint64_t t, std::span<double> out) {
    const double* row = p.losses->data() + (t - 1) * p.arms;
    std::copy(row, row + p.arms, out.begin());
  }

  Parameters params_;
};

struct BestArm {
  std::size_t arm = 0;
  double cumulative_loss = 0.0;
};

/// Minimising arm (lowest index on ties) and its cumulative loss over n rounds.
inline BestArm best_arm_cumulative(const Environment& env, std::uint64_t horizon) {
  if (horizon < 1) throw std::invalid_argument("best_arm_cumulative: horizon must be >= 1");
  const std::size_t k = env.arms();
  std::vector<double> totals(k, 0.0);
  std::vector<double> row(k);
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    env.loss_into(t, row);
    for (std::size_t i = 0; i < k; ++i) totals[i] += row[i];
  }
  const auto it = std::min_element(totals.begin(), totals.end());
  return {static_cast<std::size_t>(it - totals.begin()), *it};
}

}  // namespace ftrl_bandits
