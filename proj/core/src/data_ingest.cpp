#include "hierfolio/data_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_map>

#include <fmt/format.h>

#include "hierfolio/errors.hpp"

namespace hierfolio {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      return out;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
}

}  // namespace

std::vector<double> PriceTable::column(std::size_t asset) const {
  std::vector<double> out(n_dates());
  for (std::size_t r = 0; r < n_dates(); ++r) out[r] = at(r, asset);
  return out;
}

std::size_t PriceTable::asset_index(std::string_view ticker) const {
  const auto it = std::find(tickers.begin(), tickers.end(), ticker);
  if (it == tickers.end()) {
    throw SchemaError(std::string(ticker), fmt::format("unknown ticker '{}'", ticker));
  }
  return static_cast<std::size_t>(it - tickers.begin());
}

bool PriceTable::dense() const {
  return std::none_of(prices.begin(), prices.end(), [](double v) { return is_missing(v); });
}

bool operator==(const PriceTable& a, const PriceTable& b) {
  if (a.tickers != b.tickers || a.calendar != b.calendar || a.prices.size() != b.prices.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.prices.size(); ++i) {
    const double x = a.prices[i];
    const double y = b.prices[i];
    if (is_missing(x) != is_missing(y)) return false;
    if (!is_missing(x) && x != y) return false;
  }
  return true;
}

FillKind parse_fill_kind(std::string_view name) {
  if (name == "forward") return FillKind::forward;
  if (name == "backward") return FillKind::backward;
  if (name == "linear") return FillKind::linear;
  throw DomainError(fmt::format("unknown fill policy '{}' (forward|backward|linear)", name));
}

std::string_view to_string(FillKind kind) {
  switch (kind) {
    case FillKind::forward: return "forward";
    case FillKind::backward: return "backward";
    case FillKind::linear: return "linear";
  }
  return "forward";
}

PriceTable parse_price_csv(std::istream& in, std::span<const std::string> expected_tickers) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) {
    throw EmptyInputError("price file is empty");
  }
  const auto header = split_csv(line);
  if (header.empty() || header.front() != "date") {
    throw SchemaError("date", "first column of the price file must be 'date'");
  }

  // column position in file -> asset index in declared order
  std::unordered_map<std::string, std::size_t> declared;
  for (std::size_t i = 0; i < expected_tickers.size(); ++i) declared.emplace(expected_tickers[i], i);
  std::vector<std::size_t> slot(header.size(), 0);
  std::vector<bool> seen(expected_tickers.size(), false);
  for (std::size_t c = 1; c < header.size(); ++c) {
    const std::string name(header[c]);
    const auto it = declared.find(name);
    if (it == declared.end()) {
      throw SchemaError(name, fmt::format("unexpected column '{}' in price file", name));
    }
    if (seen[it->second]) {
      throw SchemaError(name, fmt::format("duplicate column '{}' in price file", name));
    }
    seen[it->second] = true;
    slot[c] = it->second;
  }
  for (std::size_t i = 0; i < expected_tickers.size(); ++i) {
    if (!seen[i]) {
      throw SchemaError(expected_tickers[i],
                        fmt::format("missing column '{}' in price file", expected_tickers[i]));
    }
  }

  const std::size_t n = expected_tickers.size();
  struct Row {
    Date date;
    std::vector<double> values;
    std::size_t source_row;
  };
  std::vector<Row> rows;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw ParseError(row_no, fmt::format("row {}: expected {} fields, found {}", row_no,
                                           header.size(), fields.size()));
    }
    Row row{{}, std::vector<double>(n, kMissing), row_no};
    try {
      row.date = parse_date(fields[0]);
    } catch (const DomainError& e) {
      throw ParseError(row_no, fmt::format("row {}: {}", row_no, e.what()));
    }
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const auto cell = fields[c];
      if (cell.empty()) continue;
      double v = 0.0;
      const auto* end = cell.data() + cell.size();
      auto [ptr, ec] = std::from_chars(cell.data(), end, v);
      if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
        throw ParseError(row_no, fmt::format("row {}: cannot parse '{}' in column '{}'", row_no,
                                             cell, header[c]));
      }
      if (v <= 0.0) {
        throw ParseError(row_no, fmt::format("row {}: nonpositive price {} in column '{}'", row_no,
                                             v, header[c]));
      }
      row.values[slot[c]] = v;
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw EmptyInputError("price file has a header but no data rows");

  std::stable_sort(rows.begin(), rows.end(),
                   [](const Row& a, const Row& b) { return a.date < b.date; });
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].date == rows[i - 1].date) {
      throw ParseError(rows[i].source_row, fmt::format("row {}: duplicate date {}",
                                                       rows[i].source_row,
                                                       format_date(rows[i].date)));
    }
  }

  PriceTable table;
  table.tickers.assign(expected_tickers.begin(), expected_tickers.end());
  table.calendar.reserve(rows.size());
  table.prices.reserve(rows.size() * n);
  for (auto& r : rows) {
    table.calendar.push_back(r.date);
    table.prices.insert(table.prices.end(), r.values.begin(), r.values.end());
  }
  return table;
}

PriceTable load_price_table(const std::filesystem::path& path,
                            std::span<const std::string> expected_tickers) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open price file {}", path.string()));
  return parse_price_csv(in, expected_tickers);
}

void write_price_csv(std::ostream& out, const PriceTable& table) {
  out << "date";
  for (const auto& t : table.tickers) out << ',' << t;
  out << '\n';
  for (std::size_t r = 0; r < table.n_dates(); ++r) {
    out << format_date(table.calendar[r]);
    for (std::size_t a = 0; a < table.n_assets(); ++a) {
      out << ',';
      const double v = table.at(r, a);
      if (!is_missing(v)) out << fmt::format("{}", v);
    }
    out << '\n';
  }
}

PriceTable fill_missing(const PriceTable& table, FillPolicy policy) {
  PriceTable out = table;
  const std::size_t rows = table.n_dates();
  for (std::size_t a = 0; a < table.n_assets(); ++a) {
    std::vector<std::size_t> observed;
    for (std::size_t r = 0; r < rows; ++r) {
      if (!is_missing(table.at(r, a))) observed.push_back(r);
    }
    if (observed.empty()) {
      throw DomainError(fmt::format("asset '{}' has no observed prices", table.tickers[a]));
    }
    for (std::size_t r = 0; r < observed.front(); ++r) out.at(r, a) = table.at(observed.front(), a);
    for (std::size_t r = observed.back() + 1; r < rows; ++r) out.at(r, a) = table.at(observed.back(), a);
    for (std::size_t k = 1; k < observed.size(); ++k) {
      const std::size_t lo = observed[k - 1];
      const std::size_t hi = observed[k];
      const double vlo = table.at(lo, a);
      const double vhi = table.at(hi, a);
      for (std::size_t r = lo + 1; r < hi; ++r) {
        switch (policy.interior) {
          case FillKind::forward: out.at(r, a) = vlo; break;
          case FillKind::backward: out.at(r, a) = vhi; break;
          case FillKind::linear: {
            const double t = static_cast<double>(r - lo) / static_cast<double>(hi - lo);
            out.at(r, a) = std::clamp(vlo + (vhi - vlo) * t, std::min(vlo, vhi), std::max(vlo, vhi));
            break;
          }
        }
      }
    }
  }
  return out;
}

std::vector<double> minmax_normalize(std::span<const double> series) {
  if (series.empty()) throw DomainError("minmax_normalize: empty series");
  const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  std::vector<double> out(series.size());
  if (!(hi > lo)) {
    std::fill(out.begin(), out.end(), 0.5);
    return out;
  }
  const double range = hi - lo;
  std::transform(series.begin(), series.end(), out.begin(),
                 [&](double v) { return (v - lo) / range; });
  return out;
}

PriceTable minmax_normalize_columns(const PriceTable& table) {
  if (!table.dense()) throw DomainError("minmax_normalize_columns requires a dense table");
  PriceTable out = table;
  for (std::size_t a = 0; a < table.n_assets(); ++a) {
    const auto scaled = minmax_normalize(table.column(a));
    for (std::size_t r = 0; r < table.n_dates(); ++r) out.at(r, a) = scaled[r];
  }
  return out;
}

std::vector<double> MonthlySlice::asset_path(std::size_t asset) const {
  std::vector<double> path;
  path.reserve(n_days() + 1);
  path.push_back(boundary[asset]);
  for (std::size_t d = 0; d < n_days(); ++d) path.push_back(price(d, asset));
  return path;
}

std::vector<MonthlySlice> monthly_partition(const PriceTable& table) {
  if (!table.dense()) throw DomainError("monthly_partition requires a dense table");
  const std::size_t n = table.n_assets();
  std::vector<MonthlySlice> slices;
  for (std::size_t r = 0; r < table.n_dates(); ++r) {
    const MonthId m = MonthId::of(table.calendar[r]);
    if (slices.empty() || slices.back().month != m) {
      MonthlySlice s;
      s.month = m;
      s.first_row = r;
      s.n_assets = n;
      const std::size_t boundary_row = slices.empty() ? r : r - 1;
      s.boundary.assign(table.prices.begin() + static_cast<std::ptrdiff_t>(boundary_row * n),
                        table.prices.begin() + static_cast<std::ptrdiff_t>((boundary_row + 1) * n));
      slices.push_back(std::move(s));
    }
    auto& daily = slices.back().daily;
    daily.insert(daily.end(), table.prices.begin() + static_cast<std::ptrdiff_t>(r * n),
                 table.prices.begin() + static_cast<std::ptrdiff_t>((r + 1) * n));
  }
  if (slices.size() < 2) {
    throw DomainError("price table must span at least two calendar months");
  }
  return slices;
}

}  // namespace hierfolio
