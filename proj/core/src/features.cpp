#include "hierfolio/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "hierfolio/errors.hpp"

namespace hierfolio {

std::vector<double> daily_returns(std::span<const double> prices) {
  if (prices.size() < 2) throw DomainError("daily_returns: need at least two prices");
  for (double p : prices) {
    if (!(p > 0.0)) throw DomainError(fmt::format("daily_returns: nonpositive price {}", p));
  }
  std::vector<double> out(prices.size() - 1);
  for (std::size_t t = 1; t < prices.size(); ++t) out[t - 1] = prices[t] / prices[t - 1] - 1.0;
  return out;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("mean of empty series");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
  if (xs.size() < 2) throw DomainError("sample_std: need at least two values");
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double sharpe_ratio(std::span<const double> returns, double risk_free) {
  if (returns.size() < 2) throw DomainError("sharpe_ratio: need at least two returns");
  const double sd = sample_std(returns);
  if (sd < kDegenerateEps) return 0.0;
  return (mean(returns) - risk_free) / sd;
}

double sortino_ratio(std::span<const double> returns, double risk_free) {
  if (returns.size() < 2) throw DomainError("sortino_ratio: need at least two returns");
  double downside = 0.0;
  for (double r : returns) {
    const double d = std::min(r - risk_free, 0.0);
    downside += d * d;
  }
  const double dd = std::sqrt(downside / static_cast<double>(returns.size()));
  if (dd < kDegenerateEps) return 0.0;
  return (mean(returns) - risk_free) / dd;
}

double max_drawdown(std::span<const double> prices) {
  if (prices.empty()) throw DomainError("max_drawdown: empty series");
  double peak = prices.front();
  double worst = 0.0;
  for (double p : prices) {
    if (!(p > 0.0)) throw DomainError(fmt::format("max_drawdown: nonpositive value {}", p));
    peak = std::max(peak, p);
    worst = std::max(worst, (peak - p) / peak);
  }
  return worst;
}

double calmar_ratio(std::span<const double> returns, std::span<const double> prices) {
  if (prices.size() < 2 || returns.size() + 1 != prices.size()) {
    throw DomainError("calmar_ratio: returns must be the one-step returns of prices");
  }
  const double mdd = max_drawdown(prices);
  if (mdd < kDegenerateEps) return 0.0;
  return (prices.back() / prices.front() - 1.0) / mdd;
}

double volatility(std::span<const double> returns) {
  if (returns.size() < 2) throw DomainError("volatility: need at least two returns");
  return sample_std(returns);
}

MonthlyMetrics compute_monthly_metrics(const MonthlySlice& slice, double risk_free) {
  MonthlyMetrics m;
  const std::size_t n = slice.n_assets;
  m.sharpe.resize(n);
  m.sortino.resize(n);
  m.calmar.resize(n);
  m.max_drawdown.resize(n);
  m.volatility.resize(n);
  for (std::size_t a = 0; a < n; ++a) {
    const auto path = slice.asset_path(a);
    const auto r = daily_returns(path);
    m.max_drawdown[a] = max_drawdown(path);
    m.calmar[a] = calmar_ratio(r, path);
    // a one-session month has a single return; its dispersion metrics are 0
    if (r.size() >= 2) {
      m.sharpe[a] = sharpe_ratio(r, risk_free);
      m.sortino[a] = sortino_ratio(r, risk_free);
      m.volatility[a] = volatility(r);
    }
  }
  return m;
}

CorrelationBlock correlation_matrix(std::span<const std::vector<double>> returns) {
  const std::size_t n = returns.size();
  CorrelationBlock block;
  block.n = n;
  block.values.assign(n * n, 0.0);
  if (n == 0) return block;
  const std::size_t len = returns.front().size();
  for (const auto& r : returns) {
    if (r.size() != len) throw DomainError("correlation_matrix: return series lengths differ");
  }
  if (len < 2) throw DomainError("correlation_matrix: need at least two returns per asset");

  std::vector<std::vector<double>> centered(n, std::vector<double>(len));
  std::vector<double> norm(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = mean(returns[i]);
    double ss = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      centered[i][t] = returns[i][t] - m;
      ss += centered[i][t] * centered[i][t];
    }
    norm[i] = std::sqrt(ss);
  }
  const double tiny = kDegenerateEps * std::sqrt(static_cast<double>(len - 1));
  for (std::size_t i = 0; i < n; ++i) {
    block.values[i * n + i] = 1.0;
    for (std::size_t j = i + 1; j < n; ++j) {
      double c = 0.0;
      if (norm[i] >= tiny && norm[j] >= tiny) {
        double dot = 0.0;
        for (std::size_t t = 0; t < len; ++t) dot += centered[i][t] * centered[j][t];
        c = std::clamp(dot / (norm[i] * norm[j]), -1.0, 1.0);
      }
      block.values[i * n + j] = c;
      block.values[j * n + i] = c;
    }
  }
  return block;
}

CorrelationBlock correlation_matrix(const MonthlySlice& slice) {
  std::vector<std::vector<double>> returns;
  returns.reserve(slice.n_assets);
  for (std::size_t a = 0; a < slice.n_assets; ++a) returns.push_back(daily_returns(slice.asset_path(a)));
  if (!returns.empty() && returns.front().size() < 2) {
    CorrelationBlock identity;
    identity.n = slice.n_assets;
    identity.values.assign(identity.n * identity.n, 0.0);
    for (std::size_t i = 0; i < identity.n; ++i) identity.values[i * identity.n + i] = 1.0;
    return identity;
  }
  return correlation_matrix(returns);
}

ObservationMode parse_mode(std::string_view name) {
  if (name == "metrics") return ObservationMode::metrics;
  if (name == "nlp") return ObservationMode::nlp;
  throw DomainError(fmt::format("unknown observation mode '{}' (metrics|nlp)", name));
}

std::string_view to_string(ObservationMode mode) {
  return mode == ObservationMode::metrics ? "metrics" : "nlp";
}

std::size_t observation_length(ObservationMode mode, std::size_t n_assets) {
  return mode == ObservationMode::metrics ? 5 * n_assets + n_assets * n_assets : 2 * n_assets;
}

std::vector<LayoutSegment> observation_layout(ObservationMode mode, std::size_t n) {
  std::vector<LayoutSegment> out;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::size_t len) {
    out.push_back({std::move(name), offset, len});
    offset += len;
  };
  if (mode == ObservationMode::metrics) {
    add("sharpe", n);
    add("sortino", n);
    add("calmar", n);
    add("max_drawdown", n);
    add("volatility", n);
    add("correlation", n * n);
  } else {
    add("volatility", n);
    add("sentiment", n);
  }
  return out;
}

ObservationVector build_observation(const MonthlySlice& slice, const MonthlyMetrics& metrics,
                                    const CorrelationBlock& corr,
                                    const std::vector<double>* sentiment, ObservationMode mode) {
  const std::size_t n = metrics.n_assets();
  if (n != slice.n_assets || corr.n != n) {
    throw DomainError("build_observation: asset counts of slice, metrics and correlation differ");
  }
  ObservationVector obs;
  obs.mode = mode;
  obs.month = slice.month;
  obs.values.reserve(observation_length(mode, n));
  auto append = [&](const std::vector<double>& v) { obs.values.insert(obs.values.end(), v.begin(), v.end()); };
  if (mode == ObservationMode::metrics) {
    append(metrics.sharpe);
    append(metrics.sortino);
    append(metrics.calmar);
    append(metrics.max_drawdown);
    append(metrics.volatility);
    append(corr.values);
  } else {
    if (sentiment == nullptr) throw DomainError("build_observation: nlp mode requires sentiment scores");
    if (sentiment->size() != n) throw DomainError("build_observation: sentiment length mismatch");
    append(metrics.volatility);
    append(*sentiment);
  }
  return obs;
}

}  // namespace hierfolio
