#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierfolio/agents.hpp"
#include "hierfolio/calendar.hpp"
#include "hierfolio/data_ingest.hpp"
#include "hierfolio/errors.hpp"
#include "hierfolio/hierarchy.hpp"
#include "hierfolio/portfolio_env.hpp"

namespace hierfolio {

inline constexpr std::string_view kEnvPrefix = "HIERFOLIO_";

struct ConfigIssue {
  std::string path;  // dotted key path, e.g. "reward.alpha2"
  std::string message;
};

// Every problem found in a config document, each with its key path.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<ConfigIssue> issues);
  const std::vector<ConfigIssue>& issues() const noexcept { return issues_; }

 private:
  std::vector<ConfigIssue> issues_;
};

enum class SentimentSource { simulate, file };

struct SentimentConfig {
  SentimentSource source = SentimentSource::simulate;
  std::filesystem::path path;  // file source only
  std::uint64_t seed = 0;
  double lambda = 0.0;
};

struct BacktestConfig {
  double risk_free = 0.0;
  bool equal_weight_buy_and_hold = false;
  std::string index = "GSPC";
  bool log_scale = true;
};

struct RunConfig {
  std::filesystem::path prices;
  FillKind fill = FillKind::forward;
  SentimentConfig sentiment;
  std::vector<std::string> universe;
  Window train;
  Window test;
  RewardParams reward;
  std::vector<Algorithm> algorithms;
  std::vector<ObservationMode> modes;
  int episodes = 300;
  AgentHyperparams hyper;
  std::vector<std::uint64_t> seeds;
  AggregatorConfig hierarchy;  // seed is derived per level
  double feature_risk_free = 0.0;
  BacktestConfig backtest;
  std::filesystem::path output_dir;
  std::uint64_t global_seed = 42;
  std::size_t threads = 1;

  nlohmann::json normalized;  // validated document with every default filled in
};

// "a..b" (inclusive, a <= b) or a comma list "0,2,5".
std::vector<std::uint64_t> parse_seed_range(std::string_view text);

// Defaults for every key; user documents are merged over this.
nlohmann::json default_config_document();

using EnvMap = std::map<std::string, std::string>;

// HIERFOLIO_REWARD__ALPHA2=3 sets reward.alpha2. Values are read as JSON
// when they parse, otherwise as strings.
EnvMap collect_env_overrides();

// Validates `doc`; relative paths resolve against `base_dir`.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                       const EnvMap& env = {});
RunConfig load_config(const std::filesystem::path& path, const EnvMap& env = {});

}  // namespace hierfolio
