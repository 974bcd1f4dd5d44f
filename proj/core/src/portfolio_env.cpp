#include "hierfolio/portfolio_env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "hierfolio/errors.hpp"

namespace hierfolio {

RewardParams RewardParams::make(double alpha1, double alpha2, double alpha3) {
  RewardParams p{alpha1, alpha2, alpha3};
  p.validate();
  return p;
}

void RewardParams::validate() const {
  if (!(alpha1 >= 0.0) || !(alpha2 >= 0.0) || !(alpha3 >= 0.0)) {
    throw DomainError(fmt::format("reward weights must be nonnegative (got {}, {}, {})", alpha1,
                                  alpha2, alpha3));
  }
  if (alpha1 == 0.0 && alpha2 == 0.0 && alpha3 == 0.0) {
    throw DomainError("reward weights must not all be zero");
  }
}

bool on_simplex(std::span<const double> w, double tol) {
  if (w.empty()) return false;
  double sum = 0.0;
  for (double x : w) {
    if (!std::isfinite(x) || x < 0.0) return false;
    sum += x;
  }
  return std::abs(sum - 1.0) <= tol;
}

PortfolioWeights::PortfolioWeights(std::vector<double> w) : w_(std::move(w)) {
  if (!on_simplex(w_)) {
    throw DomainError("portfolio weights must be nonnegative and sum to 1");
  }
}

PortfolioWeights PortfolioWeights::uniform(std::size_t n) {
  if (n == 0) throw DomainError("uniform weights need at least one asset");
  return PortfolioWeights(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

PortfolioWeights PortfolioWeights::unit(std::size_t n, std::size_t asset) {
  if (asset >= n) throw DomainError("unit weight asset index out of range");
  std::vector<double> w(n, 0.0);
  w[asset] = 1.0;
  return PortfolioWeights(std::move(w));
}

PortfolioWeights project_to_simplex(std::span<const double> raw) {
  if (raw.empty()) throw DomainError("project_to_simplex: empty action");
  std::vector<double> w(raw.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (!std::isfinite(raw[i])) throw DomainError("project_to_simplex: non-finite action entry");
    w[i] = std::max(raw[i], 0.0);
    sum += w[i];
  }
  if (!(sum > 0.0)) return PortfolioWeights::uniform(raw.size());
  for (double& x : w) x /= sum;
  return PortfolioWeights(std::move(w));
}

StepDiagnostics month_outcome(const MonthlySlice& slice, std::span<const double> weights) {
  const std::size_t n = slice.n_assets;
  if (weights.size() != n) {
    throw DomainError(fmt::format("weights have {} entries, market has {} assets", weights.size(), n));
  }
  double total = 0.0;
  for (double w : weights) total += w;
  std::vector<double> path;
  path.reserve(slice.n_days() + 1);
  path.push_back(1.0);
  for (std::size_t d = 0; d < slice.n_days(); ++d) {
    double v = 0.0;
    for (std::size_t a = 0; a < n; ++a) v += weights[a] * (slice.price(d, a) / slice.boundary[a]);
    path.push_back(v / total);
  }
  StepDiagnostics diag;
  diag.roi = path.back() - 1.0;
  diag.mdd = max_drawdown(path);
  const auto r = daily_returns(path);
  diag.sigma = r.size() >= 2 ? sample_std(r) : 0.0;
  return diag;
}

double reward_of(const RewardParams& params, const StepDiagnostics& d) {
  return params.alpha1 * d.roi - params.alpha2 * d.mdd - params.alpha3 * d.sigma;
}

PortfolioEnv::PortfolioEnv(std::shared_ptr<const MarketData> market, Window window,
                           ObservationMode mode, RewardParams params)
    : market_(std::move(market)), window_(window), mode_(mode), params_(params) {
  if (!market_) throw DomainError("environment needs market data");
  params_.validate();
  if (market_->n_assets() < 2) throw DomainError("environment needs at least two assets");
  if (!market_->has_mode(mode_)) {
    throw DomainError(fmt::format("market has no {} observations", to_string(mode_)));
  }
  range_ = decision_range(*market_, window_);
}

std::size_t PortfolioEnv::observation_dim() const {
  return observation_length(mode_, market_->n_assets());
}

EnvState PortfolioEnv::reset() const {
  EnvState s;
  s.month = range_.first;
  s.weights = PortfolioWeights::uniform(n_assets());
  s.value = 1.0;
  s.observation = market_->observation(mode_, range_.first - 1);
  return s;
}

StepOutcome PortfolioEnv::step(const EnvState& state, const PortfolioWeights& weights) const {
  if (state.month < range_.first || state.month > range_.last) {
    throw DomainError(fmt::format("step at month index {} outside the episode window", state.month));
  }
  if (weights.size() != n_assets() || !on_simplex(weights.values())) {
    throw DomainError("step: invalid portfolio weights");
  }
  StepOutcome out;
  out.diagnostics = month_outcome(market_->slices[state.month], weights.values());
  out.reward = reward_of(params_, out.diagnostics);
  out.next.month = state.month + 1;
  out.next.weights = weights;
  out.next.value = state.value * (1.0 + out.diagnostics.roi);
  out.next.observation = market_->observation(mode_, state.month);
  out.done = state.month == range_.last;
  return out;
}

Trajectory episode_rollout(const PortfolioEnv& env, const RawPolicy& policy) {
  Trajectory traj;
  EnvState state = env.reset();
  traj.steps.reserve(env.episode_length());
  for (;;) {
    const auto raw = policy(state.observation);
    const auto weights = project_to_simplex(raw);
    auto outcome = env.step(state, weights);
    traj.steps.push_back({state.observation, weights, outcome.reward, outcome.diagnostics});
    state = std::move(outcome.next);
    if (outcome.done) break;
  }
  traj.final_value = state.value;
  return traj;
}

}  // namespace hierfolio
