#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hierfolio/calendar.hpp"
#include "hierfolio/market.hpp"
#include "hierfolio/portfolio_env.hpp"

namespace hierfolio {

inline constexpr int kReportSchemaVersion = 1;

struct AnnualizedMetrics {
  double roi = 0.0;     // geometric, per year
  double sharpe = 0.0;  // (12 * mean monthly return - rf) / vol
  double vol = 0.0;     // sample std of monthly returns * sqrt(12)
  double mdd = 0.0;     // on the monthly curve

  friend bool operator==(const AnnualizedMetrics&, const AnnualizedMetrics&) = default;
};

// Requires at least 2 monthly points.
AnnualizedMetrics annualize(std::span<const double> monthly_equity, double risk_free = 0.0);

struct BacktestReport {
  std::string policy_id;
  Window window;
  std::vector<MonthId> months;                 // decision months
  std::vector<std::vector<double>> weights;    // [month][asset]
  std::vector<double> equity;                  // months.size() + 1 points, starts at 1
  AnnualizedMetrics metrics;
  nlohmann::json fingerprint = nlohmann::json::object();

  friend bool operator==(const BacktestReport&, const BacktestReport&) = default;
};

// Maps a decision month index (into MarketData) to an allocation. The
// actor must only use data up to the end of month k-1.
using Actor = std::function<PortfolioWeights(std::size_t month_index)>;

BacktestReport run_backtest(std::string policy_id, const Actor& actor, const MarketData& market,
                            const Window& window, double risk_free = 0.0,
                            nlohmann::json fingerprint = nlohmann::json::object());

enum class BenchmarkKind { equal_weight, single_asset };

struct BenchmarkSpec {
  BenchmarkKind kind = BenchmarkKind::equal_weight;
  std::string asset;         // single_asset only
  bool buy_and_hold = false; // equal_weight only: drift instead of monthly 1/N
};

// Parses "equal", "equal:buy_and_hold" or "asset:TICKER".
BenchmarkSpec parse_benchmark(std::string_view text);
Actor benchmark_actor(const BenchmarkSpec& spec, const MarketData& market, const Window& window);

nlohmann::json to_json(const BacktestReport& report);
BacktestReport report_from_json(const nlohmann::json& j);

struct ChartOptions {
  bool log_scale = true;
  double width = 960;
  double height = 540;
  double margin = 60;
  std::string title = "Equity curves";
};

// Vertical pixel coordinate of `value` for a chart spanning [lo, hi].
double chart_y(double value, double lo, double hi, const ChartOptions& opts);

void write_summary_csv(std::ostream& out, std::span<const BacktestReport> reports);
void write_equity_svg(std::ostream& out, std::span<const BacktestReport> reports,
                      const ChartOptions& opts);

struct ReportFiles {
  std::filesystem::path json;
  std::filesystem::path csv;
  std::filesystem::path svg;
};

// Writes <stem>.json, <stem>.csv and <stem>.svg into `dir`.
ReportFiles emit_report(std::span<const BacktestReport> reports, const std::filesystem::path& dir,
                        const std::string& stem, const ChartOptions& opts = {});

}  // namespace hierfolio
