#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "hierfolio/calendar.hpp"
#include "hierfolio/features.hpp"
#include "hierfolio/market.hpp"

namespace hierfolio {

inline constexpr double kSimplexTol = 1e-6;

struct RewardParams {
  double alpha1 = 1.0;
  double alpha2 = 2.0;
  double alpha3 = 0.5;

  // Throws DomainError when any alpha is negative or all are zero.
  static RewardParams make(double alpha1, double alpha2, double alpha3);
  void validate() const;
};

// Long-only allocation: nonnegative, sums to 1 within kSimplexTol.
class PortfolioWeights {
 public:
  PortfolioWeights() = default;
  explicit PortfolioWeights(std::vector<double> w);  // validates

  static PortfolioWeights uniform(std::size_t n);
  static PortfolioWeights unit(std::size_t n, std::size_t asset);

  std::span<const double> values() const { return w_; }
  const std::vector<double>& vector() const { return w_; }
  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }

  friend bool operator==(const PortfolioWeights&, const PortfolioWeights&) = default;

 private:
  std::vector<double> w_;
};

bool on_simplex(std::span<const double> w, double tol = kSimplexTol);

// Clamp negatives to 0 and renormalize; an all-zero result becomes uniform.
PortfolioWeights project_to_simplex(std::span<const double> raw);

struct StepDiagnostics {
  double roi = 0.0;
  double mdd = 0.0;
  double sigma = 0.0;
};

// Holds `weights` fixed from the slice boundary through month end.
StepDiagnostics month_outcome(const MonthlySlice& slice, std::span<const double> weights);
double reward_of(const RewardParams& params, const StepDiagnostics& d);

struct EnvState {
  std::size_t month = 0;  // market month index of the next decision
  PortfolioWeights weights;
  double value = 1.0;
  ObservationVector observation;
};

struct StepOutcome {
  EnvState next;
  double reward = 0.0;
  StepDiagnostics diagnostics;
  bool done = false;
};

// Monthly rebalancing environment over the decision months of a window.
// The observation for decision month k is the vector of month k-1; the
// step return is realized over month k's prices.
class PortfolioEnv {
 public:
  PortfolioEnv(std::shared_ptr<const MarketData> market, Window window, ObservationMode mode,
               RewardParams params);

  EnvState reset() const;
  StepOutcome step(const EnvState& state, const PortfolioWeights& weights) const;

  std::size_t n_assets() const { return market_->n_assets(); }
  std::size_t episode_length() const { return range_.size(); }
  std::size_t observation_dim() const;
  const DecisionRange& range() const { return range_; }
  const MarketData& market() const { return *market_; }
  const RewardParams& params() const { return params_; }
  ObservationMode mode() const { return mode_; }
  const Window& window() const { return window_; }

 private:
  std::shared_ptr<const MarketData> market_;
  Window window_;
  ObservationMode mode_;
  RewardParams params_;
  DecisionRange range_;
};

struct TrajectoryStep {
  ObservationVector observation;
  PortfolioWeights weights;
  double reward = 0.0;
  StepDiagnostics diagnostics;
};

struct Trajectory {
  std::vector<TrajectoryStep> steps;
  double final_value = 1.0;
};

using RawPolicy = std::function<std::vector<double>(const ObservationVector&)>;

// Projects every policy output onto the simplex before stepping.
Trajectory episode_rollout(const PortfolioEnv& env, const RawPolicy& policy);

}  // namespace hierfolio
