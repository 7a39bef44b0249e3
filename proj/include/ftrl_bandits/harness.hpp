#pragma once

// Replicated experiments: configuration, execution, statistics and CSV
// output.
//
// Replication r at horizon n runs with seed replication_seed(master, n, r).
// From that run seed three independent streams are derived with
// substream(): 1 for the environment, 2 for the policy's own randomness
// (slow_explorer's exploration set) and 3 for action sampling.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "ftrl_bandits/core.hpp"
#include "ftrl_bandits/csv.hpp"
#include "ftrl_bandits/environments.hpp"
#include "ftrl_bandits/policies.hpp"
#include "ftrl_bandits/random.hpp"

namespace ftrl_bandits {

using json = nlohmann::json;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EnvironmentConfig {
  EnvironmentKind kind = EnvironmentKind::stochastic_bernoulli;
  std::vector<double> means;
  double alpha = 0.25;
  std::vector<double> gaps;
  bool random_base = true;
  bool noise = true;
  std::string path;
  std::optional<Environment> replay;  // loaded once for file_replay

  std::size_t arms() const {
    switch (kind) {
      case EnvironmentKind::stochastic_bernoulli: return means.size();
      case EnvironmentKind::variance_adversary: return 2;
      case EnvironmentKind::linearly_separable: return gaps.size() + 1;
      case EnvironmentKind::file_replay: return replay ? replay->arms() : 0;
    }
    return 0;
  }
};

inline Environment make_environment(const EnvironmentConfig& cfg, std::uint64_t horizon,
                                    std::uint64_t seed) {
  switch (cfg.kind) {
    case EnvironmentKind::stochastic_bernoulli: return Environment::stochastic_bernoulli(cfg.means, seed);
    case EnvironmentKind::variance_adversary: return Environment::variance_adversary(cfg.alpha, horizon);
    case EnvironmentKind::linearly_separable:
      return Environment::linearly_separable(cfg.gaps, cfg.random_base, cfg.noise, seed);
    case EnvironmentKind::file_replay:
      if (!cfg.replay) throw ConfigError("file_replay environment was not loaded");
      return *cfg.replay;
  }
  throw ConfigError("unknown environment kind");
}

struct ExperimentConfig {
  PolicyConfig policy;
  EnvironmentConfig environment;
  std::vector<std::uint64_t> horizons;
  std::uint64_t replications = 1;
  std::uint64_t seed = 0;
  bool trace = false;
  /// Output directory; empty means no files are written.
  std::string output;
  /// Worker threads; 0 means hardware concurrency.
  unsigned threads = 0;
};

// -- configuration parsing ----------------------------------------------------

namespace detail {

inline const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) throw ConfigError(where + "." + key + ": required field missing");
  return obj.at(key);
}

inline double number_at(const json& value, const std::string& where) {
  if (!value.is_number()) throw ConfigError(where + ": expected a number");
  return value.get<double>();
}

inline std::uint64_t count_at(const json& value, const std::string& where) {
  if (!value.is_number_integer() || value.get<std::int64_t>() < 0) {
    throw ConfigError(where + ": expected a nonnegative integer");
  }
  return value.get<std::uint64_t>();
}

inline std::vector<double> numbers_at(const json& value, const std::string& where) {
  if (!value.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < value.size(); ++i) {
    out.push_back(number_at(value[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

inline bool bool_at(const json& value, const std::string& where) {
  if (!value.is_boolean()) throw ConfigError(where + ": expected true or false");
  return value.get<bool>();
}

inline std::string string_at(const json& value, const std::string& where) {
  if (!value.is_string()) throw ConfigError(where + ": expected a string");
  return value.get<std::string>();
}

}  // namespace detail

inline PolicyConfig parse_policy_config(const json& j, const std::string& where = "policy") {
  PolicyConfig cfg;
  const std::string kind = detail::string_at(detail::require(j, "kind", where), where + ".kind");
  try {
    cfg.kind = policy_kind_from_string(kind);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(where + ".kind: " + e.what());
  }
  if (j.contains("eta")) {
    cfg.eta = detail::number_at(j["eta"], where + ".eta");
    if (!(*cfg.eta > 0.0)) throw ConfigError(where + ".eta: must be positive");
  }
  if (j.contains("eta_scale")) {
    cfg.eta_scale = detail::number_at(j["eta_scale"], where + ".eta_scale");
    if (!(cfg.eta_scale > 0.0)) throw ConfigError(where + ".eta_scale: must be positive");
  }
  if (j.contains("q")) {
    cfg.q = detail::number_at(j["q"], where + ".q");
    if (!(cfg.q > 0.0)) throw ConfigError(where + ".q: must be positive");
  }
  if (j.contains("slow_set_csv")) {
    const std::string path = detail::string_at(j["slow_set_csv"], where + ".slow_set_csv");
    try {
      cfg.slow_set = SlowSetFunction::from_csv(path);
    } catch (const std::exception& e) {
      throw ConfigError(where + ".slow_set_csv: " + e.what());
    }
  }
  return cfg;
}

inline EnvironmentConfig parse_environment_config(const json& j, const std::string& where = "environment") {
  EnvironmentConfig cfg;
  const std::string kind = detail::string_at(detail::require(j, "kind", where), where + ".kind");
  if (kind == "stochastic_bernoulli") {
    cfg.kind = EnvironmentKind::stochastic_bernoulli;
    cfg.means = detail::numbers_at(detail::require(j, "means", where), where + ".means");
    if (cfg.means.size() < 2) throw ConfigError(where + ".means: need at least two arms");
    for (std::size_t i = 0; i < cfg.means.size(); ++i) {
      if (!(cfg.means[i] >= 0.0 && cfg.means[i] <= 1.0)) {
        throw ConfigError(where + ".means[" + std::to_string(i) + "]: must lie in [0,1]");
      }
    }
  } else if (kind == "variance_adversary") {
    cfg.kind = EnvironmentKind::variance_adversary;
    cfg.alpha = detail::number_at(detail::require(j, "alpha", where), where + ".alpha");
    if (!(cfg.alpha >= 0.0 && cfg.alpha <= 0.5)) throw ConfigError(where + ".alpha: must lie in [0, 0.5]");
  } else if (kind == "linearly_separable") {
    cfg.kind = EnvironmentKind::linearly_separable;
    cfg.gaps = detail::numbers_at(detail::require(j, "gaps", where), where + ".gaps");
    if (cfg.gaps.empty()) throw ConfigError(where + ".gaps: need at least one gap");
    for (std::size_t i = 0; i < cfg.gaps.size(); ++i) {
      if (!(cfg.gaps[i] > 0.0 && cfg.gaps[i] <= 1.0)) {
        throw ConfigError(where + ".gaps[" + std::to_string(i) + "]: must lie in (0,1]");
      }
    }
    if (j.contains("random_base")) cfg.random_base = detail::bool_at(j["random_base"], where + ".random_base");
    if (j.contains("noise")) cfg.noise = detail::bool_at(j["noise"], where + ".noise");
  } else if (kind == "file_replay") {
    cfg.kind = EnvironmentKind::file_replay;
    cfg.path = detail::string_at(detail::require(j, "path", where), where + ".path");
    try {
      cfg.replay = Environment::file_replay(cfg.path);
    } catch (const std::exception& e) {
      throw ConfigError(where + ".path: " + e.what());
    }
  } else {
    throw ConfigError(where + ".kind: unknown environment kind '" + kind + "'");
  }
  return cfg;
}

inline ExperimentConfig parse_experiment_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig cfg;
  cfg.policy = parse_policy_config(detail::require(j, "policy", "config"));
  cfg.environment = parse_environment_config(detail::require(j, "environment", "config"));

  const json& horizons = detail::require(j, "horizons", "config");
  if (!horizons.is_array() || horizons.empty()) throw ConfigError("config.horizons: expected a nonempty array");
  for (std::size_t i = 0; i < horizons.size(); ++i) {
    const std::string where = "config.horizons[" + std::to_string(i) + "]";
    const std::uint64_t n = detail::count_at(horizons[i], where);
    if (n < 1) throw ConfigError(where + ": must be >= 1");
    if (!cfg.horizons.empty() && n <= cfg.horizons.back()) throw ConfigError(where + ": horizons must be strictly increasing");
    const bool hybrid = cfg.policy.kind == PolicyKind::hybrid_inf_anytime ||
                        cfg.policy.kind == PolicyKind::hybrid_inf_known_horizon;
    if (hybrid && n < 3) throw ConfigError(where + ": hybrid policies need n >= 3");
    if (cfg.environment.kind == EnvironmentKind::variance_adversary && n < 4) {
      throw ConfigError(where + ": variance_adversary needs n >= 4");
    }
    if (cfg.environment.kind == EnvironmentKind::file_replay && n > cfg.environment.replay->horizon_limit()) {
      throw ConfigError(where + ": exceeds the " + std::to_string(cfg.environment.replay->horizon_limit()) +
                        " rounds in " + cfg.environment.path);
    }
    if (cfg.policy.slow_set && n > cfg.policy.slow_set->domain_limit()) {
      throw ConfigError(where + ": exceeds the tabulated slow-set range");
    }
    cfg.horizons.push_back(n);
  }
  if (j.contains("replications")) {
    cfg.replications = detail::count_at(j["replications"], "config.replications");
    if (cfg.replications < 1) throw ConfigError("config.replications: must be >= 1");
  }
  if (j.contains("seed")) cfg.seed = detail::count_at(j["seed"], "config.seed");
  if (j.contains("trace")) cfg.trace = detail::bool_at(j["trace"], "config.trace");
  if (j.contains("output")) cfg.output = detail::string_at(j["output"], "config.output");
  if (j.contains("threads")) cfg.threads = static_cast<unsigned>(detail::count_at(j["threads"], "config.threads"));
  return cfg;
}

// -- single runs ----------------------------------------------------------------

inline RunRecord run_single(const PolicyConfig& policy_cfg, const Environment& env,
                            std::uint64_t horizon, std::uint64_t seed, bool keep_trace = false) {
  const std::size_t k = env.arms();
  Policy policy(policy_cfg, k, horizon, substream(seed, 2));
  SplitMix64 rng(substream(seed, 3));
  std::vector<double> row(k);
  std::vector<double> totals(k, 0.0);
  double incurred = 0.0;
  RunRecord record;
  record.seed = seed;
  record.horizon = horizon;
  record.arms = k;
  if (keep_trace) {
    record.trace.emplace();
    record.trace->reserve(horizon);
  }
  for (std::uint64_t t = 1; t <= horizon; ++t) {
    env.loss_into(t, row);
    for (std::size_t i = 0; i < k; ++i) totals[i] += row[i];
    const ProbabilityVector& dist = policy.next_distribution();
    const std::size_t action = dist.sample(rng.uniform());
    const double loss = row[action];
    incurred += loss;
    if (keep_trace) record.trace->push_back({t, action, loss, dist, policy.learning_rate()});
    policy.observe(action, loss);
  }
  const auto best = std::min_element(totals.begin(), totals.end());
  record.best_arm = static_cast<std::size_t>(best - totals.begin());
  record.cumulative_best_arm_loss = *best;
  record.random_regret = incurred - *best;
  record.diagnostics = policy.diagnostics();
  return record;
}

/// Runs `count` independent jobs on up to `threads` workers; results are
/// stored by index so the outcome does not depend on scheduling.
template <typename Job>
auto parallel_map(std::size_t count, unsigned threads, Job job) {
  using Result = decltype(job(std::size_t{0}));
  std::vector<std::optional<Result>> results(count);
  unsigned workers = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, count));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t i = next++; i < count && !failed; i = next++) {
      try {
        results[i].emplace(job(i));
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  std::vector<Result> out;
  out.reserve(count);
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

// -- statistics -----------------------------------------------------------------

/// OLS slope of log(value) against log(n).
inline double fit_loglog_slope(std::span<const std::pair<double, double>> pairs) {
  if (pairs.size() < 3) throw std::invalid_argument("fit_loglog_slope: need at least three points");
  double sx = 0.0, sy = 0.0;
  for (const auto& [n, v] : pairs) {
    if (!(n > 0.0) || !(v > 0.0)) throw std::invalid_argument("fit_loglog_slope: values must be positive");
    sx += std::log(n);
    sy += std::log(v);
  }
  const double m = static_cast<double>(pairs.size());
  const double mx = sx / m, my = sy / m;
  double sxx = 0.0, sxy = 0.0;
  for (const auto& [n, v] : pairs) {
    const double dx = std::log(n) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(v) - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_loglog_slope: horizons must not all coincide");
  return sxy / sxx;
}

struct HorizonSummary {
  std::uint64_t horizon = 0;
  double mean_regret = 0.0;
  double var_regret = 0.0;
  double stderr_regret = 0.0;
  double tail_probability = 0.0;
  double mean_best_arm_loss = 0.0;
  std::optional<double> bound;
};

struct ExperimentSummary {
  std::string policy;
  std::string environment;
  std::size_t arms = 0;
  std::vector<HorizonSummary> horizons;
  /// Slopes are NaN when fewer than three horizons have positive values.
  double variance_slope = std::numeric_limits<double>::quiet_NaN();
  double regret_slope = std::numeric_limits<double>::quiet_NaN();
  std::vector<RunRecord> runs;  // in (horizon, replication) order
};

inline HorizonSummary summarize(std::uint64_t horizon, std::span<const RunRecord> runs,
                                const PolicyConfig& policy, std::size_t arms) {
  HorizonSummary s;
  s.horizon = horizon;
  const double count = static_cast<double>(runs.size());
  double loss_sum = 0.0;
  double tail = 0.0;
  for (const auto& r : runs) {
    s.mean_regret += r.random_regret;
    loss_sum += r.cumulative_best_arm_loss;
    if (r.random_regret >= static_cast<double>(horizon) / 4.0) tail += 1.0;
  }
  s.mean_regret /= count;
  s.mean_best_arm_loss = loss_sum / count;
  s.tail_probability = tail / count;
  if (runs.size() > 1) {
    double ss = 0.0;
    for (const auto& r : runs) ss += (r.random_regret - s.mean_regret) * (r.random_regret - s.mean_regret);
    s.var_regret = ss / (count - 1.0);
  }
  s.stderr_regret = std::sqrt(s.var_regret / count);
  if (horizon >= 3) {
    const auto k = static_cast<double>(arms);
    const auto n = static_cast<double>(horizon);
    if (policy.kind == PolicyKind::hybrid_inf_anytime && policy.q == 1.0) {
      s.bound = corollary2_bound(k, n, s.mean_best_arm_loss);
    } else if (policy.kind == PolicyKind::hybrid_inf_known_horizon) {
      s.bound = corollary3_bound(k, n, s.mean_best_arm_loss);
    }
  }
  return s;
}

// -- CSV output -----------------------------------------------------------------

inline constexpr const char* kRunsHeader = "seed,n,k,policy,env,random_regret,best_arm_loss";
inline constexpr const char* kSummaryHeader = "n,mean_regret,var_regret,stderr,tail_prob,bound_value";

inline void write_runs_csv(std::ostream& out, const ExperimentSummary& summary) {
  out << kRunsHeader << '\n';
  for (const auto& r : summary.runs) {
    out << r.seed << ',' << r.horizon << ',' << r.arms << ',' << summary.policy << ','
        << summary.environment << ',' << csv::format_double(r.random_regret) << ','
        << csv::format_double(r.cumulative_best_arm_loss) << '\n';
  }
}

inline void write_summary_csv(std::ostream& out, const ExperimentSummary& summary) {
  out << kSummaryHeader << '\n';
  for (const auto& h : summary.horizons) {
    out << h.horizon << ',' << csv::format_double(h.mean_regret) << ','
        << csv::format_double(h.var_regret) << ',' << csv::format_double(h.stderr_regret) << ','
        << csv::format_double(h.tail_probability) << ','
        << (h.bound ? csv::format_double(*h.bound) : std::string()) << '\n';
  }
}

inline void write_trace_csv(std::ostream& out, const ExperimentSummary& summary) {
  out << "seed,n,t,action,loss,learning_rate,distribution\n";
  for (const auto& r : summary.runs) {
    if (!r.trace) continue;
    for (const auto& round : *r.trace) {
      out << r.seed << ',' << r.horizon << ',' << round.t << ',' << round.action << ','
          << csv::format_double(round.loss_incurred) << ','
          << csv::format_double(round.learning_rate) << ',';
      for (std::size_t i = 0; i < round.distribution.size(); ++i) {
        out << (i ? ";" : "") << csv::format_double(round.distribution[i]);
      }
      out << '\n';
    }
  }
}

/// Writes runs.csv and summary.csv (and traces.csv when traces were kept)
/// into `directory`.
inline void write_experiment_files(const std::filesystem::path& directory,
                                   const ExperimentSummary& summary) {
  std::filesystem::create_directories(directory);
  auto open = [&](const char* name) {
    std::ofstream out(directory / name, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (directory / name).string());
    return out;
  };
  {
    auto out = open("runs.csv");
    write_runs_csv(out, summary);
  }
  {
    auto out = open("summary.csv");
    write_summary_csv(out, summary);
  }
  const bool traced = std::any_of(summary.runs.begin(), summary.runs.end(),
                                  [](const RunRecord& r) { return r.trace.has_value(); });
  if (traced) {
    auto out = open("traces.csv");
    write_trace_csv(out, summary);
  }
}

// -- experiments ----------------------------------------------------------------

inline ExperimentSummary run_experiment(const ExperimentConfig& cfg) {
  if (cfg.horizons.empty()) throw ConfigError("config.horizons: expected a nonempty array");
  if (cfg.replications < 1) throw ConfigError("config.replications: must be >= 1");
  ExperimentSummary summary;
  summary.policy = std::string(to_string(cfg.policy.kind));
  summary.environment = std::string(to_string(cfg.environment.kind));
  summary.arms = cfg.environment.arms();

  struct Job {
    std::uint64_t horizon;
    std::uint64_t replication;
  };
  std::vector<Job> jobs;
  for (std::uint64_t n : cfg.horizons) {
    for (std::uint64_t r = 0; r < cfg.replications; ++r) jobs.push_back({n, r});
  }
  summary.runs = parallel_map(jobs.size(), cfg.threads, [&](std::size_t i) {
    const std::uint64_t seed = replication_seed(cfg.seed, jobs[i].horizon, jobs[i].replication);
    const Environment env = make_environment(cfg.environment, jobs[i].horizon, substream(seed, 1));
    const std::uint64_t limit = env.horizon_limit();
    const std::uint64_t n = limit != 0 ? std::min(limit, jobs[i].horizon) : jobs[i].horizon;
    return run_single(cfg.policy, env, n, seed, cfg.trace);
  });

  std::vector<std::pair<double, double>> variances, regrets;
  for (std::size_t h = 0; h < cfg.horizons.size(); ++h) {
    const std::span<const RunRecord> block(summary.runs.data() + h * cfg.replications, cfg.replications);
    HorizonSummary s = summarize(block.front().horizon, block, cfg.policy, summary.arms);
    if (s.var_regret > 0.0) variances.emplace_back(static_cast<double>(s.horizon), s.var_regret);
    if (s.mean_regret > 0.0) regrets.emplace_back(static_cast<double>(s.horizon), s.mean_regret);
    summary.horizons.push_back(s);
  }
  if (variances.size() >= 3) summary.variance_slope = fit_loglog_slope(variances);
  if (regrets.size() >= 3) summary.regret_slope = fit_loglog_slope(regrets);

  if (!cfg.output.empty()) write_experiment_files(cfg.output, summary);
  return summary;
}

// -- sweeps ---------------------------------------------------------------------

struct SweepPoint {
  std::string label;  // "policy.eta_scale=0.5;environment.alpha=0.1"
  json config;
};

/// Expands the optional "sweep" object ({"dotted.path": [values...]}) into
/// the cartesian product of configurations, first key varying slowest.
inline std::vector<SweepPoint> expand_sweep(const json& base) {
  json stripped = base;
  json axes = json::object();
  if (stripped.contains("sweep")) {
    axes = stripped["sweep"];
    stripped.erase("sweep");
    if (!axes.is_object()) throw ConfigError("config.sweep: expected an object of value lists");
  }
  std::vector<SweepPoint> points{{"", stripped}};
  for (auto it = axes.begin(); it != axes.end(); ++it) {
    if (!it.value().is_array() || it.value().empty()) {
      throw ConfigError("config.sweep." + it.key() + ": expected a nonempty array");
    }
    const json::json_pointer pointer("/" + [&] {
      std::string p = it.key();
      std::replace(p.begin(), p.end(), '.', '/');
      return p;
    }());
    std::vector<SweepPoint> expanded;
    for (const auto& point : points) {
      for (const auto& value : it.value()) {
        SweepPoint next = point;
        next.config[pointer] = value;
        next.label += (next.label.empty() ? "" : ";") + it.key() + "=" + value.dump();
        expanded.push_back(std::move(next));
      }
    }
    points = std::move(expanded);
  }
  return points;
}

}  // namespace ftrl_bandits
