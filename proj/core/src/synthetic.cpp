#include "hierfolio/synthetic.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "hierfolio/errors.hpp"
#include "hierfolio/rng.hpp"

namespace hierfolio {
namespace {

using std::chrono::sys_days;

Date month_start(const MonthId& m) {
  return std::chrono::year{m.year} / std::chrono::month{static_cast<unsigned>(m.month)} / 1;
}

Date month_end(const MonthId& m) {
  return std::chrono::year{m.year} / std::chrono::month{static_cast<unsigned>(m.month)} / std::chrono::last;
}

std::vector<std::string> numbered_tickers(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(fmt::format("A{}", i));
  return out;
}

}  // namespace

std::vector<Date> business_days(Date first, Date last) {
  if (!first.ok() || !last.ok()) throw DomainError("invalid calendar bounds");
  std::vector<Date> out;
  for (sys_days d = sys_days{first}; d <= sys_days{last}; d += std::chrono::days{1}) {
    if (is_weekday(Date{d})) out.emplace_back(d);
  }
  return out;
}

std::vector<std::string> default_universe() {
  return {"GSPC", "IXIC", "DJI", "FCHI", "FTSE", "STOXX50E", "HSI",
          "000001.SS", "BSESN", "NSEI", "KS11", "GC=F", "SI=F", "CL=F"};
}

PriceTable synthetic_universe(const SyntheticUniverseOptions& opts) {
  if (opts.tickers.empty()) throw DomainError("synthetic universe needs at least one ticker");
  if (!(opts.missing_rate >= 0.0 && opts.missing_rate < 0.5)) throw DomainError("missing rate must lie in [0, 0.5)");
  Rng rng(opts.seed);
  const std::size_t n = opts.tickers.size();

  std::vector<double> drift(n), beta(n), idio(n), price(n);
  for (std::size_t a = 0; a < n; ++a) {
    drift[a] = rng.uniform(0.0, 0.12) / 252.0;
    beta[a] = rng.uniform(0.2, 1.2);
    idio[a] = rng.uniform(0.05, 0.25) / std::sqrt(252.0);
    price[a] = 50.0 * std::exp(rng.uniform(0.0, 4.0));
  }

  PriceTable t;
  t.tickers = opts.tickers;
  t.calendar = business_days(opts.first, opts.last);
  t.prices.resize(t.calendar.size() * n);
  // mean-reverting log volatility of the shared factor
  const double base_log_vol = std::log(0.008);
  double log_vol = base_log_vol;
  for (std::size_t row = 0; row < t.calendar.size(); ++row) {
    log_vol = base_log_vol + 0.98 * (log_vol - base_log_vol) + rng.normal(0.0, 0.06);
    const double factor = rng.normal(0.0, std::exp(log_vol));
    for (std::size_t a = 0; a < n; ++a) {
      const double r = drift[a] + beta[a] * factor + idio[a] * rng.normal();
      price[a] *= std::exp(r);
      t.at(row, a) = price[a];
    }
  }
  for (std::size_t row = 1; row < t.calendar.size(); ++row) {
    for (std::size_t a = 0; a < n; ++a) {
      if (rng.uniform() < opts.missing_rate) t.at(row, a) = kMissing;
    }
  }
  return t;
}

PriceTable drift_market(std::span<const double> monthly_returns, MonthId first, int months) {
  if (monthly_returns.empty() || months < 2) throw DomainError("drift market needs assets and two months");
  const std::size_t n = monthly_returns.size();
  PriceTable t;
  t.tickers = numbered_tickers(n);
  std::vector<double> price(n, 100.0);
  MonthId m = first;
  for (int k = 0; k < months; ++k, m = m.next()) {
    const auto days = business_days(month_start(m), month_end(m));
    for (std::size_t d = 0; d < days.size(); ++d) {
      t.calendar.push_back(days[d]);
      for (std::size_t a = 0; a < n; ++a) {
        if (k > 0 || d > 0) price[a] *= std::pow(1.0 + monthly_returns[a], 1.0 / static_cast<double>(days.size()));
        t.prices.push_back(price[a]);
      }
    }
  }
  return t;
}

PriceTable random_walk_market(std::size_t n_assets, MonthId first, int months, double daily_vol,
                              std::uint64_t seed) {
  if (n_assets == 0 || months < 2) throw DomainError("random market needs assets and two months");
  Rng rng(seed);
  PriceTable t;
  t.tickers = numbered_tickers(n_assets);
  std::vector<double> price(n_assets, 100.0);
  MonthId m = first;
  for (int k = 0; k < months; ++k, m = m.next()) {
    for (const auto& day : business_days(month_start(m), month_end(m))) {
      t.calendar.push_back(day);
      for (std::size_t a = 0; a < n_assets; ++a) {
        price[a] *= std::exp(daily_vol * rng.normal());
        t.prices.push_back(price[a]);
      }
    }
  }
  return t;
}

}  // namespace hierfolio
