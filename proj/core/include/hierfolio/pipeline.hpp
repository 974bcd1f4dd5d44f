#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierfolio/backtest.hpp"
#include "hierfolio/config.hpp"
#include "hierfolio/market.hpp"

namespace hierfolio {

struct ArtifactEntry {
  std::string path;  // relative to the output directory, '/' separated
  std::string sha256;
  friend bool operator==(const ArtifactEntry&, const ArtifactEntry&) = default;
};

struct StageRecord {
  std::string name;
  std::string fingerprint;
  std::vector<ArtifactEntry> outputs;
};

// Stage fingerprints and artifact hashes; no timestamps.
struct Manifest {
  std::vector<StageRecord> stages;  // pipeline order

  const StageRecord* find(const std::string& stage) const;
  void put(StageRecord record, const std::vector<std::string>& order);
  std::vector<ArtifactEntry> artifacts() const;  // sorted by path
};

nlohmann::json to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);
Manifest load_manifest(const std::filesystem::path& path);  // missing file -> empty manifest
void save_manifest(const std::filesystem::path& path, const Manifest& m);

// Artifacts whose file is missing or whose hash differs from the manifest.
std::vector<std::string> verify_manifest(const std::filesystem::path& output_dir);

struct StageOutcome {
  std::string name;
  bool cached = false;
};

// Runs pipeline stages against a validated config. Every stage reads its
// inputs from the output directory, so stages can be resumed one by one.
class Pipeline {
 public:
  explicit Pipeline(RunConfig config, std::ostream* log = nullptr);

  // ingest, sentiment, features, train-base, train-meta:<mode>..., train-super, backtest, report
  std::vector<std::string> stage_names() const;
  StageOutcome run_stage(const std::string& name);
  std::vector<StageOutcome> run_all();

  const RunConfig& config() const { return config_; }
  std::filesystem::path manifest_path() const { return config_.output_dir / "manifest.json"; }

  // Market built from the ingest and sentiment artifacts.
  std::shared_ptr<const MarketData> load_market() const;

  // Backtests "equal", "equal:buy_and_hold", "asset:TICKER" or a policy or
  // aggregator checkpoint (aggregators pull base policies from this run).
  BacktestReport backtest_policy(const std::string& policy, const Window& window) const;

 private:
  std::vector<std::string> dependencies(const std::string& stage) const;
  std::string fingerprint(const std::string& stage, const Manifest& manifest) const;
  std::vector<std::string> execute(const std::string& stage);
  std::filesystem::path out(const std::string& rel) const { return config_.output_dir / rel; }

  std::vector<std::string> run_ingest();
  std::vector<std::string> run_sentiment();
  std::vector<std::string> run_features();
  std::vector<std::string> run_train_base();
  std::vector<std::string> run_train_meta(ObservationMode mode);
  std::vector<std::string> run_train_super();
  std::vector<std::string> run_backtest();
  std::vector<std::string> run_report();

  RunConfig config_;
  std::ostream* log_;
};

}  // namespace hierfolio
