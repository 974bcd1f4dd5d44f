#include <gtest/gtest.h>

#include "hierfolio/errors.hpp"
#include "hierfolio/portfolio_env.hpp"
#include "hierfolio/synthetic.hpp"
#include "oracles.hpp"

using namespace hierfolio;
using V = std::vector<double>;

namespace {

MonthlySlice slice_of(const std::vector<V>& paths) {
  // paths[a] = boundary followed by daily closes
  MonthlySlice s;
  s.n_assets = paths.size();
  for (const auto& p : paths) s.boundary.push_back(p.front());
  for (std::size_t d = 1; d < paths.front().size(); ++d) {
    for (const auto& p : paths) s.daily.push_back(p[d]);
  }
  return s;
}

std::shared_ptr<const MarketData> drift(const V& rates, int months = 24) {
  return oracle::market_of(drift_market(rates, {2003, 1}, months));
}

}  // namespace

TEST(Reward, ParamsValidation) {
  EXPECT_THROW(RewardParams::make(0, 0, 0), DomainError);
  EXPECT_THROW(RewardParams::make(1, -1, 0), DomainError);
  EXPECT_NO_THROW(RewardParams::make(0, 0, 1));
}

TEST(Weights, Validation) {
  EXPECT_THROW(PortfolioWeights(V{0.5, 0.6}), DomainError);
  EXPECT_THROW(PortfolioWeights(V{1.1, -0.1}), DomainError);
  EXPECT_NO_THROW(PortfolioWeights(V{0.5, 0.5 + 1e-7}));
  EXPECT_EQ(PortfolioWeights::unit(3, 1).vector(), (V{0, 1, 0}));
}

TEST(Simplex, Examples) {
  EXPECT_EQ(project_to_simplex(V{2, 2}).vector(), (V{0.5, 0.5}));
  EXPECT_EQ(project_to_simplex(V{-1, 3}).vector(), (V{0, 1}));
  EXPECT_EQ(project_to_simplex(V{-3, -1}).vector(), (V{0.5, 0.5}));
  EXPECT_EQ(project_to_simplex(V{0.2, 0.3, 0.5}).vector(), (V{0.2, 0.3, 0.5}));
}

TEST(Simplex, RandomProjectionsAreIdempotent) {
  oracle::Gen g(5);
  for (int trial = 0; trial < 2000; ++trial) {
    V raw(1 + g.index(16));
    for (auto& v : raw) v = g.uniform(-5, 5);
    const auto w = project_to_simplex(raw);
    ASSERT_TRUE(on_simplex(w.values()));
    const auto again = project_to_simplex(w.values());
    for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_NEAR(again[i], w[i], 1e-15);
  }
}

TEST(MonthOutcome, OffsettingAssets) {
  const auto d = month_outcome(slice_of({{100, 110}, {100, 90}}), V{0.5, 0.5});
  EXPECT_EQ(d.roi, 0.0);
  EXPECT_EQ(d.mdd, 0.0);
  EXPECT_EQ(d.sigma, 0.0);
  EXPECT_EQ(reward_of({}, d), 0.0);
}

TEST(MonthOutcome, SingleAssetPath) {
  const auto d = month_outcome(slice_of({{100, 105, 110}}), V{1.0});
  EXPECT_NEAR(d.roi, 0.10, 1e-15);
  EXPECT_EQ(d.mdd, 0.0);
  EXPECT_NEAR(d.sigma, oracle::stdev({0.05, 110.0 / 105.0 - 1.0}), 1e-15);
  EXPECT_NEAR(d.sigma, 0.0016836, 1e-7);
  const double r = reward_of(RewardParams::make(1, 1, 1), d);
  EXPECT_NEAR(r, 0.10 - d.sigma, 1e-15);
  EXPECT_NEAR(r, 0.0983, 1e-4);
}

TEST(MonthOutcome, RandomPathsMatchOracle) {
  oracle::Gen g(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + g.index(5), days = 2 + g.index(20);
    std::vector<V> paths;
    for (std::size_t a = 0; a < n; ++a) paths.push_back(oracle::random_prices(g, days + 1));
    V raw(n);
    for (auto& v : raw) v = g.uniform();
    const auto w = project_to_simplex(raw);
    V path;
    for (std::size_t d = 0; d <= days; ++d) {
      double v = 0;
      for (std::size_t a = 0; a < n; ++a) v += w[a] * paths[a][d] / paths[a][0];
      path.push_back(v);
    }
    const auto out = month_outcome(slice_of(paths), w.values());
    EXPECT_NEAR(out.roi, path.back() - 1.0, 1e-12);
    EXPECT_NEAR(out.mdd, oracle::mdd(path), 1e-12);
    EXPECT_NEAR(out.sigma, oracle::stdev(oracle::returns(path)), 1e-12);
  }
}

TEST(Env, ResetIsUniform) {
  const auto t = fill_missing(synthetic_universe(), {});
  const auto market = oracle::market_of(t);
  PortfolioEnv env(market, Window::parse("2003-01:2017-12"), ObservationMode::metrics, {});
  const auto s = env.reset();
  ASSERT_EQ(s.weights.size(), 14u);
  for (double w : s.weights.values()) EXPECT_NEAR(w, 0.0714285714, 1e-9);
  EXPECT_EQ(s.value, 1.0);
  EXPECT_EQ(env.episode_length(), 179u);
  EXPECT_EQ(s.observation, market->observation(ObservationMode::metrics, s.month - 1));
  PortfolioEnv test_env(market, Window::parse("2018-01:2024-12"), ObservationMode::nlp, {});
  EXPECT_EQ(test_env.episode_length(), 84u);
}

TEST(Env, TwoAssetResetAndErrors) {
  const auto market = drift({0.02, -0.01});
  PortfolioEnv env(market, Window::parse("2003-01:2004-12"), ObservationMode::metrics, {});
  EXPECT_EQ(env.reset().weights.vector(), (V{0.5, 0.5}));
  EXPECT_EQ(env.range().first, 1u);
  EXPECT_THROW(PortfolioEnv(market, Window::parse("2010-01:2010-12"), ObservationMode::metrics, {}),
               DomainError);
  const auto s = env.reset();
  EXPECT_THROW(env.step(s, PortfolioWeights(V{1.0 / 3, 1.0 / 3, 1.0 / 3})), DomainError);
}

TEST(Env, ConstantPricesGiveZeroReward) {
  const auto market = drift({0.0, 0.0, 0.0});
  PortfolioEnv env(market, Window::parse("2003-01:2004-12"), ObservationMode::nlp, {});
  oracle::Gen g(3);
  const auto traj = episode_rollout(env, [&](const ObservationVector&) {
    return V{g.uniform(), g.uniform(), g.uniform()};
  });
  ASSERT_EQ(traj.steps.size(), 23u);
  for (const auto& s : traj.steps) EXPECT_EQ(s.reward, 0.0);
  EXPECT_EQ(traj.final_value, 1.0);
}

TEST(Env, ValueCompoundsStepReturns) {
  const auto t = fill_missing(synthetic_universe(), {});
  const auto market = oracle::market_of(t);
  PortfolioEnv env(market, Window::parse("2018-01:2024-12"), ObservationMode::metrics, {});
  oracle::Gen g(8);
  const auto traj = episode_rollout(env, [&](const ObservationVector& o) {
    V raw(14);
    for (auto& v : raw) v = g.uniform(-1, 1) + 0.0 * o.values[0];
    return raw;
  });
  double value = 1.0;
  for (const auto& s : traj.steps) {
    value *= 1.0 + s.diagnostics.roi;
    EXPECT_TRUE(on_simplex(s.weights.values()));
    EXPECT_NEAR(s.reward, s.diagnostics.roi - 2 * s.diagnostics.mdd - 0.5 * s.diagnostics.sigma, 1e-15);
  }
  EXPECT_NEAR(traj.final_value, value, 1e-12);
}

TEST(Env, ObservationsComeFromThePreviousMonth) {
  const auto market = drift({0.02, -0.01});
  PortfolioEnv env(market, Window::parse("2003-06:2004-03"), ObservationMode::metrics, {});
  auto s = env.reset();
  for (;;) {
    EXPECT_EQ(s.observation.month, market->month(s.month - 1));
    auto out = env.step(s, PortfolioWeights::uniform(2));
    if (out.done) break;
    s = out.next;
  }
}
