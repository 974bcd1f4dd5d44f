#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "hierfolio/agents.hpp"
#include "hierfolio/backtest.hpp"
#include "hierfolio/config.hpp"
#include "hierfolio/data_ingest.hpp"
#include "hierfolio/errors.hpp"
#include "hierfolio/pipeline.hpp"
#include "hierfolio/sentiment.hpp"
#include "hierfolio/synthetic.hpp"

namespace fs = std::filesystem;
using namespace hierfolio;

namespace {

RunConfig config_from(const std::string& path) { return load_config(path, collect_env_overrides()); }

std::vector<std::string> split_tickers(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string t; std::getline(ss, t, ',');) {
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << text;
}

int run_stage(const std::string& config, const std::string& stage) {
  Pipeline p(config_from(config), &std::cerr);
  p.run_stage(stage);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical portfolio engine: ingest, train, aggregate and backtest"};
  app.require_subcommand(1);
  std::string config;

  auto* validate = app.add_subcommand("validate-config", "Validate a config and echo it with defaults filled in");
  validate->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);

  std::string prices, fill = "forward", tickers, out_path;
  auto* ingest = app.add_subcommand("ingest", "Load, align and fill the price panel");
  ingest->add_option("--config", config, "Run config (JSON)")->check(CLI::ExistingFile);
  ingest->add_option("--prices", prices, "Price CSV (standalone mode)")->check(CLI::ExistingFile);
  ingest->add_option("--fill", fill, "Interior gap fill: forward|backward|linear");
  ingest->add_option("--tickers", tickers, "Comma-separated universe (default: 14-asset universe)");
  ingest->add_option("--out", out_path, "Cleaned CSV destination (standalone mode)");

  std::uint64_t seed = 0;
  double lambda = 0.0;
  std::string sentiment_file;
  auto* sentiment = app.add_subcommand("sentiment", "Monthly sentiment scores");
  sentiment->require_subcommand(0, 1);
  sentiment->add_option("--config", config, "Run config (JSON)")->check(CLI::ExistingFile);
  auto* simulate = sentiment->add_subcommand("simulate", "Simulate scores from a price CSV (gaps are forward-filled)");
  simulate->add_option("--prices", prices, "Price CSV")->required()->check(CLI::ExistingFile);
  simulate->add_option("--tickers", tickers, "Comma-separated universe (default: 14-asset universe)");
  simulate->add_option("--seed", seed, "Noise seed");
  simulate->add_option("--lambda", lambda, "Weight on the next-month return signal, in [0, 1]");
  simulate->add_option("--out", out_path, "Output CSV")->required();
  auto* svalidate = sentiment->add_subcommand("validate", "Check a sentiment CSV against the schema");
  svalidate->add_option("file", sentiment_file, "Sentiment CSV")->required()->check(CLI::ExistingFile);

  auto* features = app.add_subcommand("features", "Emit per-month observation vectors");
  features->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);

  std::string algo, mode, seeds;
  auto* train_base = app.add_subcommand("train-base", "Train the base-agent seed battery");
  train_base->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  train_base->add_option("--algo", algo, "Only this algorithm: ppo|sac|ddpg|td3");
  train_base->add_option("--mode", mode, "Only this observation mode: metrics|nlp");
  train_base->add_option("--seeds", seeds, "Only these seeds, e.g. 0..4");

  auto* train_meta = app.add_subcommand("train-meta", "Train one meta-agent");
  train_meta->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  train_meta->add_option("--mode", mode, "metrics|nlp")->required();

  auto* train_super = app.add_subcommand("train-super", "Train the super-agent");
  train_super->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);

  std::string policy, window;
  auto* backtest = app.add_subcommand("backtest", "Backtest all policies, or one with --policy");
  backtest->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);
  backtest->add_option("--policy", policy, "Checkpoint path, equal, equal:buy_and_hold or asset:TICKER");
  backtest->add_option("--window", window, "YYYY-MM:YYYY-MM (default: test window)");
  backtest->add_option("--out", out_path, "Report JSON destination (with --policy)");

  auto* report = app.add_subcommand("report", "Render summary tables and equity charts");
  report->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);

  auto* run = app.add_subcommand("run", "Run every stage, reusing up-to-date artifacts");
  run->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);

  auto* verify = app.add_subcommand("verify", "Check artifact hashes against the run manifest");
  verify->add_option("--config", config, "Run config (JSON)")->required()->check(CLI::ExistingFile);

  std::uint64_t synth_seed = 7;
  auto* synth = app.add_subcommand("synth", "Write the synthetic 14-asset price panel");
  synth->add_option("--seed", synth_seed, "Generator seed");
  synth->add_option("--out", out_path, "Output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) {
      std::cout << config_from(config).normalized.dump(2) << '\n';
      return 0;
    }
    if (ingest->parsed()) {
      if (!config.empty()) return run_stage(config, "ingest");
      if (prices.empty() || out_path.empty()) throw Error("ingest needs --config, or --prices and --out");
      const auto universe = tickers.empty() ? default_universe() : split_tickers(tickers);
      const auto dense = fill_missing(load_price_table(prices, universe), FillPolicy{parse_fill_kind(fill)});
      std::ostringstream csv;
      write_price_csv(csv, dense);
      write_file(out_path, csv.str());
      std::cerr << fmt::format("{} rows x {} assets -> {}\n", dense.n_dates(), dense.n_assets(), out_path);
      return 0;
    }
    if (sentiment->parsed()) {
      if (svalidate->parsed()) {
        const auto table = load_sentiment_table(sentiment_file);
        std::cout << fmt::format("ok: {} cells\n", table.size());
        return 0;
      }
      if (simulate->parsed()) {
        const auto universe = tickers.empty() ? default_universe() : split_tickers(tickers);
        const auto dense = fill_missing(load_price_table(prices, universe), {});
        std::vector<MonthId> months;
        for (const auto& d : dense.calendar) {
          if (months.empty() || months.back() != MonthId::of(d)) months.push_back(MonthId::of(d));
        }
        std::ostringstream csv;
        write_sentiment_csv(csv, simulate_sentiment(dense, months, seed, lambda));
        write_file(out_path, csv.str());
        return 0;
      }
      if (config.empty()) throw Error("sentiment needs --config or a simulate/validate subcommand");
      return run_stage(config, "sentiment");
    }
    if (features->parsed()) return run_stage(config, "features");
    if (train_base->parsed()) {
      if (algo.empty() && mode.empty() && seeds.empty()) return run_stage(config, "train-base");
      // Ad-hoc subset: policies land in the run directory but the manifest is untouched.
      const RunConfig cfg = config_from(config);
      Pipeline p(cfg, &std::cerr);
      const auto market = p.load_market();
      BatteryPlan plan;
      plan.algorithms = algo.empty() ? cfg.algorithms : std::vector<Algorithm>{parse_algorithm(algo)};
      plan.modes = mode.empty() ? cfg.modes : std::vector<ObservationMode>{parse_mode(mode)};
      plan.seeds = seeds.empty() ? cfg.seeds : parse_seed_range(seeds);
      plan.hyper = cfg.hyper;
      plan.episodes = cfg.episodes;
      plan.global_seed = cfg.global_seed;
      plan.threads = cfg.threads;
      const auto set = run_seed_battery(plan, [&](ObservationMode m) -> EnvFactory {
        return [&, m] { return PortfolioEnv(market, cfg.train, m, cfg.reward); };
      });
      int failures = 0;
      fs::create_directories(cfg.output_dir / "policies");
      for (const auto& cell : set.cells) {
        if (!cell.policy) {
          std::cerr << fmt::format("{} failed: {}\n", cell.spec.id(), cell.error);
          ++failures;
          continue;
        }
        const auto path = cfg.output_dir / "policies" / (cell.spec.id() + ".json");
        save_policy(path, *cell.policy);
        std::cout << fmt::format("{} train roi/yr {:.4f} -> {}\n", cell.spec.id(), cell.report->metrics.roi,
                                 path.string());
      }
      return failures == 0 ? 0 : 1;
    }
    if (train_meta->parsed()) return run_stage(config, "train-meta:" + std::string(to_string(parse_mode(mode))));
    if (train_super->parsed()) return run_stage(config, "train-super");
    if (backtest->parsed()) {
      if (policy.empty()) return run_stage(config, "backtest");
      const RunConfig cfg = config_from(config);
      const Pipeline p(cfg, &std::cerr);
      const auto r = p.backtest_policy(policy, window.empty() ? cfg.test : Window::parse(window));
      const auto text = to_json(r).dump(2) + "\n";
      if (out_path.empty()) {
        std::cout << text;
      } else {
        write_file(out_path, text);
      }
      std::cerr << fmt::format("{} {}: roi/yr {:.4f} sharpe {:.3f} vol {:.4f} mdd {:.4f}\n", r.policy_id,
                               r.window.str(), r.metrics.roi, r.metrics.sharpe, r.metrics.vol, r.metrics.mdd);
      return 0;
    }
    if (report->parsed()) return run_stage(config, "report");
    if (run->parsed()) {
      Pipeline p(config_from(config), &std::cerr);
      p.run_all();
      return 0;
    }
    if (verify->parsed()) {
      const auto bad = verify_manifest(config_from(config).output_dir);
      for (const auto& b : bad) std::cout << "modified or missing: " << b << '\n';
      if (bad.empty()) std::cout << "all artifacts match the manifest\n";
      return bad.empty() ? 0 : 1;
    }
    if (synth->parsed()) {
      SyntheticUniverseOptions opts;
      opts.seed = synth_seed;
      std::ostringstream csv;
      write_price_csv(csv, synthetic_universe(opts));
      write_file(out_path, csv.str());
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
