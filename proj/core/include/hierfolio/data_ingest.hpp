#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hierfolio/calendar.hpp"

namespace hierfolio {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

// Daily adjusted-close panel on a shared calendar. Missing cells hold NaN
// until `fill_missing` densifies the table. Asset order is fixed at load.
struct PriceTable {
  std::vector<std::string> tickers;
  std::vector<Date> calendar;
  std::vector<double> prices;  // row-major [date][asset]

  std::size_t n_dates() const { return calendar.size(); }
  std::size_t n_assets() const { return tickers.size(); }
  double at(std::size_t row, std::size_t asset) const {
    return prices[row * tickers.size() + asset];
  }
  double& at(std::size_t row, std::size_t asset) {
    return prices[row * tickers.size() + asset];
  }
  std::vector<double> column(std::size_t asset) const;
  std::size_t asset_index(std::string_view ticker) const;  // throws SchemaError
  bool dense() const;

  friend bool operator==(const PriceTable&, const PriceTable&);
};

enum class FillKind { forward, backward, linear };

FillKind parse_fill_kind(std::string_view name);
std::string_view to_string(FillKind kind);

// Leading gaps are always back-filled and trailing gaps forward-filled;
// `interior` selects how gaps between two observations are filled.
struct FillPolicy {
  FillKind interior = FillKind::forward;
};

// Reads the price CSV contract: `date,<ticker1>,...`, ISO dates, empty
// cell = missing. Columns are reordered to `expected_tickers`; rows are
// sorted by date. Duplicate dates are rejected.
PriceTable parse_price_csv(std::istream& in, std::span<const std::string> expected_tickers);
PriceTable load_price_table(const std::filesystem::path& path,
                            std::span<const std::string> expected_tickers);
void write_price_csv(std::ostream& out, const PriceTable& table);

PriceTable fill_missing(const PriceTable& table, FillPolicy policy);

// Min-max scaling onto [0,1]. A constant series maps to 0.5 everywhere.
std::vector<double> minmax_normalize(std::span<const double> series);
PriceTable minmax_normalize_columns(const PriceTable& table);

// One calendar month of daily prices plus the prior month's last close.
struct MonthlySlice {
  MonthId month;
  std::size_t first_row = 0;        // row in the source table
  std::size_t n_assets = 0;
  std::vector<double> boundary;     // [asset]
  std::vector<double> daily;        // row-major [day][asset]

  std::size_t n_days() const { return n_assets == 0 ? 0 : daily.size() / n_assets; }
  double price(std::size_t day, std::size_t asset) const { return daily[day * n_assets + asset]; }
  // Boundary followed by every daily close of the month.
  std::vector<double> asset_path(std::size_t asset) const;
};

// Partitions a dense table into chronological monthly slices. The first
// slice uses its own first close as boundary.
std::vector<MonthlySlice> monthly_partition(const PriceTable& table);

}  // namespace hierfolio
