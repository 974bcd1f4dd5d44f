#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierfolio/backtest.hpp"
#include "hierfolio/features.hpp"
#include "hierfolio/neural.hpp"
#include "hierfolio/portfolio_env.hpp"
#include "hierfolio/rng.hpp"

namespace hierfolio {

enum class Algorithm { ppo, sac, ddpg, td3 };

Algorithm parse_algorithm(std::string_view name);
std::string_view to_string(Algorithm algo);

struct AgentHyperparams {
  std::size_t hidden = 64;
  double actor_lr = 3e-4;
  double critic_lr = 1e-3;
  double gamma = 0.99;
  std::size_t batch_size = 64;

  // ppo
  double clip_epsilon = 0.2;
  double gae_lambda = 0.95;
  int ppo_epochs = 4;
  double init_log_std = -0.5;

  // sac
  double entropy_weight = 0.05;

  // ddpg / td3
  double exploration_std = 0.1;
  double tau = 0.005;
  int policy_delay = 2;
  double target_noise = 0.2;
  double target_noise_clip = 0.5;

  // off-policy shared
  std::size_t replay_capacity = 100000;
  std::size_t warmup_steps = 128;
  std::size_t update_every = 1;

  friend bool operator==(const AgentHyperparams&, const AgentHyperparams&) = default;
};

struct AgentSpec {
  Algorithm algorithm = Algorithm::ppo;
  ObservationMode mode = ObservationMode::metrics;
  std::uint64_t seed = 0;         // battery seed (0, 1, 2, ...)
  std::uint64_t global_seed = 0;  // run-level seed mixed into the RNG stream
  AgentHyperparams hyper;

  void validate() const;
  std::string id() const;  // e.g. "ppo_metrics_seed3"
  std::uint64_t rng_seed() const;

  friend bool operator==(const AgentSpec&, const AgentSpec&) = default;
};

nlohmann::json to_json(const AgentSpec& spec);
AgentSpec agent_spec_from_json(const nlohmann::json& j);

// Deterministic inference wrapper around a trained actor network.
// ppo actors emit unconstrained means; sac/ddpg/td3 actors are squashed
// through tanh. Either way the result is projected onto the simplex.
struct Policy {
  AgentSpec spec;
  Mlp3 actor;
  std::size_t n_assets = 0;
  std::string training_window;

  std::vector<double> raw_action(const Vec& observation) const;
  // Throws DomainError on a mode or length mismatch.
  PortfolioWeights act(const ObservationVector& observation) const;
  std::string checksum() const;

  friend bool operator==(const Policy&, const Policy&) = default;
};

nlohmann::json to_json(const Policy& policy);
Policy policy_from_json(const nlohmann::json& j);
void save_policy(const std::filesystem::path& path, const Policy& policy);
Policy load_policy(const std::filesystem::path& path);

struct TrainingLog {
  std::vector<double> mean_episode_reward;  // one entry per training episode
};

// Optional instrumentation used by tests to observe internal updates.
struct TrainingProbe {
  // Every simplex action sent to the environment (training and rollout).
  std::function<void(std::span<const double>)> on_action;
  // twin-critic target: (q1', q2', value used in the Bellman target)
  std::function<void(double, double, double)> on_twin_target;
};

using EnvFactory = std::function<PortfolioEnv()>;

// Trains one agent for `episodes` passes over the environment window.
// Throws DivergenceError if a loss or gradient turns non-finite.
Policy train_base_agent(const AgentSpec& spec, const EnvFactory& make_env, int episodes,
                        TrainingLog* log = nullptr, const TrainingProbe* probe = nullptr);

// PPO per-sample objective min(r*A, clip(r, 1-eps, 1+eps)*A) and its
// derivative in r. When the clipped branch is active the derivative is 0.
struct ClippedSurrogate {
  double value = 0.0;
  double d_ratio = 0.0;
  bool clipped = false;
};
ClippedSurrogate ppo_clipped_surrogate(double ratio, double advantage, double epsilon);

struct Transition {
  Vec observation;
  Vec action;  // raw action in [-1, 1]^N
  double reward = 0.0;
  Vec next_observation;
  bool done = false;
};

class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  // Uniform sampling with replacement.
  std::vector<std::size_t> sample_indices(std::size_t batch, Rng& rng) const;
  const Transition& operator[](std::size_t i) const { return items_[i]; }
  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> items_;
};

// Index of the median element by value; the lower median for even counts.
std::size_t median_index(std::span<const double> values);

struct BatteryCell {
  AgentSpec spec;
  std::optional<Policy> policy;
  std::optional<BacktestReport> report;  // over the training window
  std::string error;
};

struct PolicySet {
  std::vector<BatteryCell> cells;

  std::vector<const BatteryCell*> cells_for(Algorithm algo, ObservationMode mode) const;
  // Successful cell with the median training-window ROI for (algo, mode).
  const BatteryCell* median_cell(Algorithm algo, ObservationMode mode) const;
};

struct BatteryPlan {
  std::vector<Algorithm> algorithms;
  std::vector<ObservationMode> modes;
  std::vector<std::uint64_t> seeds;
  AgentHyperparams hyper;
  int episodes = 300;
  std::uint64_t global_seed = 0;
  std::size_t threads = 1;
};

// Trains every (algorithm, mode, seed) combination. Failures are recorded
// per cell and do not stop the battery.
PolicySet run_seed_battery(const BatteryPlan& plan,
                           const std::function<EnvFactory(ObservationMode)>& env_for_mode);

}  // namespace hierfolio
