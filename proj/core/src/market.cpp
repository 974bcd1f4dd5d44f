#include "hierfolio/market.hpp"

#include <fmt/format.h>

#include "hierfolio/errors.hpp"

namespace hierfolio {

std::optional<std::size_t> MarketData::find_month(const MonthId& m) const {
  for (std::size_t k = 0; k < slices.size(); ++k) {
    if (slices[k].month == m) return k;
  }
  return std::nullopt;
}

bool MarketData::has_mode(ObservationMode mode) const {
  return mode == ObservationMode::metrics ? !metrics_obs.empty() : !nlp_obs.empty();
}

const ObservationVector& MarketData::observation(ObservationMode mode, std::size_t k) const {
  if (!has_mode(mode)) {
    throw DomainError(fmt::format("market has no {} observations", to_string(mode)));
  }
  const auto& obs = mode == ObservationMode::metrics ? metrics_obs : nlp_obs;
  if (k >= obs.size()) throw DomainError(fmt::format("observation month index {} out of range", k));
  return obs[k];
}

MarketData build_market(const PriceTable& dense, const SentimentTable* sentiment, double risk_free) {
  MarketData market;
  market.tickers = dense.tickers;
  market.slices = monthly_partition(dense);
  market.metrics_obs.reserve(market.slices.size());
  for (const auto& slice : market.slices) {
    const auto metrics = compute_monthly_metrics(slice, risk_free);
    const auto corr = correlation_matrix(slice);
    market.metrics_obs.push_back(build_observation(slice, metrics, corr, nullptr, ObservationMode::metrics));
    if (sentiment != nullptr) {
      const auto scores = sentiment->scores(slice.month, market.tickers);
      market.nlp_obs.push_back(build_observation(slice, metrics, corr, &scores, ObservationMode::nlp));
    }
  }
  return market;
}

DecisionRange decision_range(const MarketData& market, const Window& window) {
  if (market.slices.empty()) throw DomainError("market has no months");
  const MonthId first = market.slices.front().month;
  const MonthId last = market.slices.back().month;
  if (window.start < first || last < window.end) {
    throw DomainError(fmt::format("window {} outside data range {}:{}", window.str(), first.str(),
                                  last.str()));
  }
  std::optional<std::size_t> lo;
  std::size_t hi = 0;
  for (std::size_t k = 1; k < market.slices.size(); ++k) {
    if (window.contains(market.slices[k].month)) {
      if (!lo) lo = k;
      hi = k;
    }
  }
  if (!lo) throw DomainError(fmt::format("window {} contains no decision months", window.str()));
  return {*lo, hi};
}

}  // namespace hierfolio
