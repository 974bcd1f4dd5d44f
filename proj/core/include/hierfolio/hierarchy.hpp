#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierfolio/agents.hpp"
#include "hierfolio/market.hpp"
#include "hierfolio/neural.hpp"
#include "hierfolio/portfolio_env.hpp"

namespace hierfolio {

enum class AggregatorLevel { meta_metrics, meta_nlp, super };

AggregatorLevel parse_level(std::string_view name);
std::string_view to_string(AggregatorLevel level);
AggregatorLevel meta_level_for(ObservationMode mode);

struct ContributorRef {
  std::string id;
  std::string checksum;
  friend bool operator==(const ContributorRef&, const ContributorRef&) = default;
};

// Anything that proposes an allocation for a decision month.
struct Contributor {
  ContributorRef ref;
  std::function<PortfolioWeights(std::size_t month_index)> act;
};

// A base policy acting on its own mode's observation of month k-1.
Contributor policy_contributor(const Policy& policy, const MarketData& market);

// Decisions of every contributor for one month, in configured order.
struct DecisionPanel {
  std::size_t month_index = 0;
  MonthId month;
  std::vector<std::string> contributors;
  std::vector<PortfolioWeights> weights;

  std::size_t n_assets() const { return weights.empty() ? 0 : weights.front().size(); }
  // X_t: contributor weight vectors laid end to end.
  Vec concatenated() const;
};

// Throws DomainError naming the contributor that failed or disagreed on N.
DecisionPanel build_panel(std::span<const Contributor> contributors, const MarketData& market,
                          std::size_t month_index);
std::vector<DecisionPanel> build_panels(std::span<const Contributor> contributors,
                                        const MarketData& market, const DecisionRange& range);

struct LookaheadSample {
  std::size_t month_index = 0;
  Vec x;
  std::vector<double> w_star;
  std::string chosen;
  std::size_t chosen_index = 0;
  double lookahead_reward = 0.0;
};

// Labels each panel month t with the contributor whose weights, held for
// months t..t+H-1, earn the largest summed step reward. Months whose
// horizon would pass `last_month_index` are dropped.
std::vector<LookaheadSample> collect_imitation_dataset(std::span<const DecisionPanel> panels,
                                                       const MarketData& market,
                                                       const RewardParams& params,
                                                       std::size_t horizon,
                                                       std::size_t last_month_index);

struct AggregatorConfig {
  int epochs = 200;
  std::size_t batch_size = 32;
  std::size_t horizon = 3;
  double learning_rate = 1e-3;
  std::size_t hidden = 64;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const AggregatorConfig&, const AggregatorConfig&) = default;
};

nlohmann::json to_json(const AggregatorConfig& cfg);
AggregatorConfig aggregator_config_from_json(const nlohmann::json& j);

struct AggregatorModel {
  AggregatorLevel level = AggregatorLevel::super;
  Mlp3 net;
  std::vector<ContributorRef> manifest;
  std::size_t n_assets = 0;
  AggregatorConfig config;
  std::string training_window;
  double final_loss = 0.0;

  std::string id() const { return std::string(to_string(level)); }
  PortfolioWeights act(const Vec& x) const;
  // Refuses panels whose contributor ids differ from the manifest.
  PortfolioWeights act(const DecisionPanel& panel) const;
  // Throws DomainError naming this level on any id, order or checksum mismatch.
  void check_manifest(std::span<const ContributorRef> refs) const;
  std::string checksum() const;

  friend bool operator==(const AggregatorModel&, const AggregatorModel&) = default;
};

// Weights into hidden layer 1 are drawn per contributor from a stream keyed
// by its id, so the initial function does not depend on panel order.
AggregatorModel init_aggregator(AggregatorLevel level, std::vector<ContributorRef> manifest,
                                std::size_t n_assets, const AggregatorConfig& config);

struct AggregatorTrainLog {
  std::vector<double> epoch_loss;
};

// Seeded shuffled minibatch Adam on mse(forward(x), w_star).
AggregatorModel train_aggregator(std::span<const LookaheadSample> samples, AggregatorLevel level,
                                 std::vector<ContributorRef> manifest, std::size_t n_assets,
                                 const AggregatorConfig& config,
                                 AggregatorTrainLog* log = nullptr);

// Contributor view of an aggregator fed by `inputs` (checked against its manifest).
Contributor aggregator_contributor(const AggregatorModel& model, std::vector<Contributor> inputs,
                                   const MarketData& market);

nlohmann::json to_json(const AggregatorModel& model);
AggregatorModel aggregator_from_json(const nlohmann::json& j);
void save_aggregator(const std::filesystem::path& path, const AggregatorModel& model);
AggregatorModel load_aggregator(const std::filesystem::path& path);

struct Hierarchy {
  AggregatorModel super;
  std::vector<AggregatorModel> metas;  // super-manifest order
  std::vector<Policy> bases;
};

// bases -> meta panels -> metas -> super panel -> super.
PortfolioWeights hierarchy_act(const Hierarchy& h, const MarketData& market,
                               std::size_t month_index);

}  // namespace hierfolio
