// Command-line front end: run, sweep and verify.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "ftrl_bandits/acceptance.hpp"
#include "ftrl_bandits/harness.hpp"

namespace fb = ftrl_bandits;

namespace {

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw fb::ConfigError("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw fb::ConfigError(path + ": " + e.what());
  }
}

void print_summary(const fb::ExperimentSummary& s, const std::string& label) {
  std::cerr << (label.empty() ? "" : label + ": ") << s.policy << " on " << s.environment
            << " (k=" << s.arms << ")\n";
  for (const auto& h : s.horizons) {
    std::cerr << "  n=" << h.horizon << " mean=" << h.mean_regret << " var=" << h.var_regret
              << " tail=" << h.tail_probability;
    if (h.bound) std::cerr << " bound=" << *h.bound;
    std::cerr << '\n';
  }
  if (!std::isnan(s.variance_slope)) std::cerr << "  variance slope " << s.variance_slope << '\n';
  if (!std::isnan(s.regret_slope)) std::cerr << "  regret slope " << s.regret_slope << '\n';
}

void warn_slow_set(const fb::ExperimentConfig& cfg) {
  if (cfg.policy.kind != fb::PolicyKind::slow_explorer) return;
  const auto f = cfg.policy.slow_set.value_or(fb::SlowSetFunction::iterated_log2());
  std::string warning;
  if (!fb::detail::slow_set_summable(f, warning)) std::cerr << "warning: " << warning << '\n';
}

int run_config(const nlohmann::json& j, const std::string& label) {
  fb::ExperimentConfig cfg = fb::parse_experiment_config(j);
  warn_slow_set(cfg);
  if (cfg.output.empty()) cfg.output = "results";
  const fb::ExperimentSummary s = fb::run_experiment(cfg);
  print_summary(s, label);
  std::cerr << "  wrote " << cfg.output << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FTRL bandit experiments"};
  app.require_subcommand(1);

  std::string run_path;
  auto* run = app.add_subcommand("run", "Run one experiment configuration");
  run->add_option("config", run_path, "JSON configuration")->required()->check(CLI::ExistingFile);

  std::string sweep_path;
  auto* sweep = app.add_subcommand("sweep", "Run the cartesian product of a configuration's sweep lists");
  sweep->add_option("config", sweep_path, "JSON configuration with a \"sweep\" object")
      ->required()
      ->check(CLI::ExistingFile);

  fb::acceptance::Options verify_options;
  std::string verify_output = verify_options.output.string();
  auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
  verify->add_option("--output", verify_output, "Directory for the suite's CSV files")->capture_default_str();
  verify->add_option("--seed", verify_options.seed, "Master seed")->capture_default_str();
  verify->add_option("--threads", verify_options.threads, "Worker threads (0 = all cores)")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return run_config(load_json(run_path), "");
    if (*sweep) {
      const nlohmann::json base = load_json(sweep_path);
      const std::string root = base.value("output", std::string("results"));
      for (const auto& point : fb::expand_sweep(base)) {
        nlohmann::json cfg = point.config;
        std::string dir;
        for (char c : point.label) {
          if (c == '"') continue;
          dir += (c == ';' || c == '/' || c == ' ') ? '_' : c;
        }
        cfg["output"] = (std::filesystem::path(root) / (dir.empty() ? "base" : dir)).string();
        run_config(cfg, point.label);
      }
      return 0;
    }
    if (*verify) {
      verify_options.output = verify_output;
      return fb::acceptance::run_and_report(verify_options, std::cout);
    }
  } catch (const fb::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
