#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hierfolio/calendar.hpp"
#include "hierfolio/data_ingest.hpp"
#include "hierfolio/features.hpp"
#include "hierfolio/sentiment.hpp"

namespace hierfolio {

// Monthly view of a dense price table: slices plus per-month observation
// vectors for each available mode. Observation k is computed from slice k
// (and month k's sentiment) only.
struct MarketData {
  std::vector<std::string> tickers;
  std::vector<MonthlySlice> slices;
  std::vector<ObservationVector> metrics_obs;
  std::vector<ObservationVector> nlp_obs;  // empty when no sentiment was supplied

  std::size_t n_assets() const { return tickers.size(); }
  std::size_t n_months() const { return slices.size(); }
  const MonthId& month(std::size_t k) const { return slices[k].month; }
  std::optional<std::size_t> find_month(const MonthId& m) const;
  bool has_mode(ObservationMode mode) const;
  const ObservationVector& observation(ObservationMode mode, std::size_t k) const;
};

MarketData build_market(const PriceTable& dense, const SentimentTable* sentiment,
                        double risk_free = 0.0);

// Decision months of `window`: every month in the window that has a
// predecessor month in the data (the predecessor supplies the observation).
// Throws DomainError if the window does not intersect the data.
struct DecisionRange {
  std::size_t first = 0;  // month index of the first decision
  std::size_t last = 0;   // inclusive
  std::size_t size() const { return last - first + 1; }
};

DecisionRange decision_range(const MarketData& market, const Window& window);

}  // namespace hierfolio
