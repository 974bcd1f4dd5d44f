#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hierfolio/calendar.hpp"
#include "hierfolio/data_ingest.hpp"

namespace hierfolio {

// Monday to Friday dates in [first, last].
std::vector<Date> business_days(Date first, Date last);

// Fourteen index, commodity and exchange tickers used as the default universe.
std::vector<std::string> default_universe();

struct SyntheticUniverseOptions {
  std::uint64_t seed = 7;
  Date first = std::chrono::year{2003} / 1 / 1;
  Date last = std::chrono::year{2024} / 12 / 31;
  double missing_rate = 0.01;
  std::vector<std::string> tickers = default_universe();
};

// Correlated geometric random walks with a shared factor and scattered
// missing cells (never a whole column).
PriceTable synthetic_universe(const SyntheticUniverseOptions& opts = {});

// Every asset compounds at its fixed monthly rate, spread evenly over the
// business days of each month.
PriceTable drift_market(std::span<const double> monthly_returns, MonthId first, int months);

// Independent lognormal walks with the given daily volatility.
PriceTable random_walk_market(std::size_t n_assets, MonthId first, int months, double daily_vol,
                              std::uint64_t seed);

}  // namespace hierfolio
