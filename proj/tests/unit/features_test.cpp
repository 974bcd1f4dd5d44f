#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "hierfolio/errors.hpp"
#include "hierfolio/features.hpp"
#include "hierfolio/synthetic.hpp"
#include "oracles.hpp"

using namespace hierfolio;
using V = std::vector<double>;

TEST(DailyReturns, Examples) {
  EXPECT_NEAR(daily_returns(V{100, 110})[0], 0.10, 1e-15);
  const auto r = daily_returns(V{100, 110, 99});
  EXPECT_NEAR(r[0], 0.10, 1e-15);
  EXPECT_NEAR(r[1], -0.10, 1e-15);
  EXPECT_EQ(daily_returns(V{50, 50, 50}), (V{0, 0}));
  EXPECT_THROW(daily_returns(V{1, 0}), DomainError);
  EXPECT_THROW(daily_returns(V{1}), DomainError);
}

TEST(Sharpe, Examples) {
  EXPECT_NEAR(sharpe_ratio(V{0.01, 0.02, 0.03}), 2.0, 1e-12);
  EXPECT_EQ(sharpe_ratio(V{0.01, 0.01, 0.01}), 0.0);
  EXPECT_THROW(sharpe_ratio(V{0.01}), DomainError);
}

TEST(Sortino, Examples) {
  EXPECT_EQ(sortino_ratio(V{0.01, 0.02}), 0.0);
  EXPECT_EQ(sortino_ratio(V{0.02, -0.02}), 0.0);
  EXPECT_THROW(sortino_ratio(V{0.01}), DomainError);
}

TEST(MaxDrawdown, Examples) {
  EXPECT_NEAR(max_drawdown(V{100, 120, 90}), 0.25, 1e-15);
  EXPECT_NEAR(max_drawdown(V{100, 120, 90, 130, 80}), 50.0 / 130.0, 1e-15);
  EXPECT_EQ(max_drawdown(V{1, 2, 3}), 0.0);
}

TEST(Calmar, Examples) {
  const V up{100, 101, 103};
  EXPECT_EQ(calmar_ratio(daily_returns(up), up), 0.0);
  const V p{100, 120, 90};
  EXPECT_NEAR(calmar_ratio(daily_returns(p), p), -0.4, 1e-12);
  const V flat{5, 5, 5};
  EXPECT_EQ(calmar_ratio(daily_returns(flat), flat), 0.0);
}

TEST(Volatility, Examples) {
  EXPECT_NEAR(volatility(V{0.01, 0.03}), 0.02 / std::sqrt(2.0), 1e-15);
  EXPECT_EQ(volatility(V{0.02, 0.02, 0.02}), 0.0);
  EXPECT_THROW(volatility(V{0.02}), DomainError);
}

TEST(Metrics, RandomSeriesMatchBruteForce) {
  oracle::Gen g(101);
  for (int trial = 0; trial < 100; ++trial) {
    const auto p = oracle::random_prices(g, 2 + g.index(60));
    const auto r = daily_returns(p);
    const auto ro = oracle::returns(p);
    for (std::size_t i = 0; i < r.size(); ++i) ASSERT_NEAR(r[i], ro[i], 1e-15);
    if (r.size() >= 2) {
      const double rf = g.uniform(-0.001, 0.001);
      EXPECT_NEAR(sharpe_ratio(r, rf), oracle::sharpe(ro, rf), 1e-9);
      EXPECT_NEAR(sortino_ratio(r, rf), oracle::sortino(ro, rf), 1e-9);
      EXPECT_NEAR(volatility(r), oracle::stdev(ro), 1e-12);
    }
    EXPECT_NEAR(max_drawdown(p), oracle::mdd(p), 1e-12);
    EXPECT_NEAR(calmar_ratio(r, p), oracle::calmar(p), 1e-9);
  }
}

TEST(Metrics, AssetScaleInvariance) {
  oracle::Gen g(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto p = oracle::random_prices(g, 25);
    auto q = p;
    const double c = g.uniform(0.01, 100.0);
    for (auto& v : q) v *= c;
    const auto rp = daily_returns(p), rq = daily_returns(q);
    EXPECT_NEAR(sharpe_ratio(rp), sharpe_ratio(rq), 1e-9);
    EXPECT_NEAR(sortino_ratio(rp), sortino_ratio(rq), 1e-9);
    EXPECT_NEAR(max_drawdown(p), max_drawdown(q), 1e-9);
    EXPECT_NEAR(volatility(rp), volatility(rq), 1e-9);
  }
}

TEST(Correlation, Examples) {
  const std::vector<V> r{{0.01, -0.02, 0.03}, {0.02, -0.04, 0.06}, {0.0, 0.0, 0.0}};
  const auto c = correlation_matrix(r);
  ASSERT_EQ(c.n, 3u);
  EXPECT_NEAR(c.at(0, 1), 1.0, 1e-12);
  EXPECT_EQ(c.at(0, 0), 1.0);
  EXPECT_EQ(c.at(2, 2), 1.0);
  EXPECT_EQ(c.at(2, 0), 0.0);
  EXPECT_EQ(c.at(1, 2), 0.0);
  EXPECT_THROW(correlation_matrix(std::vector<V>{{0.1, 0.2}, {0.1}}), DomainError);
}

TEST(Correlation, RandomMatricesAgreeAndArePsd) {
  oracle::Gen g(44);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 2 + g.index(6), len = 5 + g.index(20);
    std::vector<V> r(n);
    for (auto& s : r) s = oracle::returns(oracle::random_prices(g, len + 1));
    const auto c = correlation_matrix(r);
    Eigen::MatrixXd m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        m(i, j) = c.at(i, j);
        EXPECT_NEAR(c.at(i, j), c.at(j, i), 1e-12);
        EXPECT_LE(std::abs(c.at(i, j)), 1.0);
        if (i != j) EXPECT_NEAR(c.at(i, j), oracle::corr(r[i], r[j]), 1e-9);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-8);
  }
}

TEST(Observation, LayoutLengthsForFourteenAssets) {
  EXPECT_EQ(observation_length(ObservationMode::metrics, 14), 266u);
  EXPECT_EQ(observation_length(ObservationMode::nlp, 14), 28u);
}

TEST(Observation, LayoutIsABijection) {
  for (auto mode : {ObservationMode::metrics, ObservationMode::nlp}) {
    for (std::size_t n : {1u, 2u, 14u}) {
      std::vector<int> hits(observation_length(mode, n), 0);
      for (const auto& s : observation_layout(mode, n)) {
        for (std::size_t i = 0; i < s.length; ++i) ++hits.at(s.offset + i);
      }
      for (int h : hits) EXPECT_EQ(h, 1);
    }
  }
}

TEST(Observation, TwoAssetConcatenationOrder) {
  MonthlySlice slice;
  slice.n_assets = 2;
  slice.boundary = {1, 1};
  slice.daily = {1, 1, 1, 1};
  MonthlyMetrics m{{1, 2}, {3, 4}, {5, 6}, {7, 8}, {9, 10}};
  CorrelationBlock c{2, {1, 0.5, 0.5, 1}};
  const V sentiment{-0.5, 0.25};
  EXPECT_EQ(build_observation(slice, m, c, nullptr, ObservationMode::metrics).values,
            (V{1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 1, 0.5, 0.5, 1}));
  EXPECT_EQ(build_observation(slice, m, c, &sentiment, ObservationMode::nlp).values, (V{9, 10, -0.5, 0.25}));
  EXPECT_THROW(build_observation(slice, m, c, nullptr, ObservationMode::nlp), DomainError);
}

TEST(Observation, MonthlyMetricsMatchOracleOnSyntheticMonths) {
  const auto t = fill_missing(synthetic_universe(), {});
  const auto slices = monthly_partition(t);
  for (std::size_t k = 1; k < slices.size(); k += 37) {
    const auto m = compute_monthly_metrics(slices[k]);
    for (std::size_t a = 0; a < t.n_assets(); ++a) {
      const auto p = slices[k].asset_path(a);
      const auto r = oracle::returns(p);
      EXPECT_NEAR(m.sharpe[a], oracle::sharpe(r), 1e-9);
      EXPECT_NEAR(m.sortino[a], oracle::sortino(r), 1e-9);
      EXPECT_NEAR(m.calmar[a], oracle::calmar(p), 1e-9);
      EXPECT_NEAR(m.max_drawdown[a], oracle::mdd(p), 1e-12);
      EXPECT_NEAR(m.volatility[a], oracle::stdev(r), 1e-12);
    }
  }
}
