#include "hierfolio/backtest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>

#include <fmt/format.h>

#include "hierfolio/errors.hpp"
#include "hierfolio/features.hpp"

namespace hierfolio {

AnnualizedMetrics annualize(std::span<const double> curve, double risk_free) {
  if (curve.size() < 2) throw DomainError("annualize: need at least two monthly points");
  for (double v : curve) {
    if (!(v > 0.0)) throw DomainError("annualize: equity curve must stay positive");
  }
  const auto months = static_cast<double>(curve.size() - 1);
  AnnualizedMetrics m;
  m.roi = std::pow(curve.back() / curve.front(), 12.0 / months) - 1.0;
  const auto r = daily_returns(curve);  // one-step returns of the monthly curve
  m.vol = r.size() >= 2 ? sample_std(r) * std::sqrt(12.0) : 0.0;
  m.sharpe = m.vol < kDegenerateEps ? 0.0 : (mean(r) * 12.0 - risk_free) / m.vol;
  m.mdd = max_drawdown(curve);
  return m;
}

BacktestReport run_backtest(std::string policy_id, const Actor& actor, const MarketData& market,
                            const Window& window, double risk_free, nlohmann::json fingerprint) {
  const auto range = decision_range(market, window);
  BacktestReport report;
  report.policy_id = std::move(policy_id);
  report.window = window;
  report.fingerprint = std::move(fingerprint);
  report.equity.reserve(range.size() + 1);
  report.equity.push_back(1.0);
  for (std::size_t k = range.first; k <= range.last; ++k) {
    const PortfolioWeights w = actor(k);
    if (w.size() != market.n_assets()) {
      throw DomainError(fmt::format("actor '{}' returned {} weights for {} assets", report.policy_id,
                                    w.size(), market.n_assets()));
    }
    const auto diag = month_outcome(market.slices[k], w.values());
    report.months.push_back(market.month(k));
    report.weights.push_back(w.vector());
    report.equity.push_back(report.equity.back() * (1.0 + diag.roi));
  }
  report.metrics = annualize(report.equity, risk_free);
  return report;
}

BenchmarkSpec parse_benchmark(std::string_view text) {
  if (text == "equal") return {BenchmarkKind::equal_weight, {}, false};
  if (text == "equal:buy_and_hold") return {BenchmarkKind::equal_weight, {}, true};
  if (text.starts_with("asset:") && text.size() > 6) {
    return {BenchmarkKind::single_asset, std::string(text.substr(6)), false};
  }
  throw DomainError(fmt::format("unknown benchmark '{}' (equal|equal:buy_and_hold|asset:TICKER)", text));
}

Actor benchmark_actor(const BenchmarkSpec& spec, const MarketData& market, const Window& window) {
  const std::size_t n = market.n_assets();
  if (spec.kind == BenchmarkKind::single_asset) {
    const auto it = std::find(market.tickers.begin(), market.tickers.end(), spec.asset);
    if (it == market.tickers.end()) {
      throw SchemaError(spec.asset, fmt::format("benchmark asset '{}' not in universe", spec.asset));
    }
    const auto w = PortfolioWeights::unit(n, static_cast<std::size_t>(it - market.tickers.begin()));
    return [w](std::size_t) { return w; };
  }
  if (!spec.buy_and_hold) {
    const auto w = PortfolioWeights::uniform(n);
    return [w](std::size_t) { return w; };
  }
  // Holdings bought at 1/N on the first decision month drift with prices;
  // month k weights use the close preceding month k.
  const std::size_t first = decision_range(market, window).first;
  return [&market, first, n](std::size_t k) {
    std::vector<double> w(n);
    const auto& start = market.slices[first].boundary;
    const auto& now = market.slices[k].boundary;
    for (std::size_t a = 0; a < n; ++a) w[a] = now[a] / start[a];
    return project_to_simplex(w);
  };
}

nlohmann::json to_json(const BacktestReport& r) {
  nlohmann::json months = nlohmann::json::array();
  for (const auto& m : r.months) months.push_back(m.str());
  return {
      {"schema", "hierfolio.backtest_report"},
      {"version", kReportSchemaVersion},
      {"policy_id", r.policy_id},
      {"window", r.window.str()},
      {"months", months},
      {"weights", r.weights},
      {"equity", r.equity},
      {"metrics",
       {{"annualized_roi", r.metrics.roi},
        {"annualized_sharpe", r.metrics.sharpe},
        {"annualized_vol", r.metrics.vol},
        {"mdd", r.metrics.mdd}}},
      {"fingerprint", r.fingerprint},
  };
}

BacktestReport report_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "hierfolio.backtest_report" ||
      j.value("version", 0) != kReportSchemaVersion) {
    throw DomainError("not a supported backtest report");
  }
  BacktestReport r;
  r.policy_id = j.at("policy_id").get<std::string>();
  r.window = Window::parse(j.at("window").get<std::string>());
  for (const auto& m : j.at("months")) r.months.push_back(MonthId::parse(m.get<std::string>()));
  r.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  r.equity = j.at("equity").get<std::vector<double>>();
  const auto& m = j.at("metrics");
  r.metrics.roi = m.at("annualized_roi").get<double>();
  r.metrics.sharpe = m.at("annualized_sharpe").get<double>();
  r.metrics.vol = m.at("annualized_vol").get<double>();
  r.metrics.mdd = m.at("mdd").get<double>();
  r.fingerprint = j.value("fingerprint", nlohmann::json::object());
  return r;
}

double chart_y(double value, double lo, double hi, const ChartOptions& opts) {
  auto t = [&](double v) { return opts.log_scale ? std::log(v) : v; };
  const double top = opts.margin;
  const double span = opts.height - 2.0 * opts.margin;
  const double tlo = t(lo);
  const double thi = t(hi);
  if (!(thi > tlo)) return top + 0.5 * span;
  return top + (1.0 - (t(value) - tlo) / (thi - tlo)) * span;
}

void write_summary_csv(std::ostream& out, std::span<const BacktestReport> reports) {
  out << "policy,window,annualized_roi,annualized_sharpe,annualized_vol,mdd\n";
  for (const auto& r : reports) {
    out << fmt::format("{},{},{},{},{},{}\n", r.policy_id, r.window.str(), r.metrics.roi,
                       r.metrics.sharpe, r.metrics.vol, r.metrics.mdd);
  }
}

void write_equity_svg(std::ostream& out, std::span<const BacktestReport> reports,
                      const ChartOptions& opts) {
  static constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                             "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  double lo = 0.0;
  double hi = 0.0;
  bool any = false;
  for (const auto& r : reports) {
    for (double v : r.equity) {
      if (!(v > 0.0)) throw DomainError("equity curves must be positive to chart");
      lo = any ? std::min(lo, v) : v;
      hi = any ? std::max(hi, v) : v;
      any = true;
    }
  }
  const double plot_w = opts.width - 2.0 * opts.margin;
  out << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\">\n",
      opts.width, opts.height);
  out << fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", opts.width, opts.height);
  out << fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"16\">{}{}</text>\n",
                     opts.margin, opts.margin / 2.0, opts.title, opts.log_scale ? " (log scale)" : "");
  out << fmt::format(
      "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>\n",
      opts.margin, opts.margin, plot_w, opts.height - 2.0 * opts.margin);
  if (any) {
    out << fmt::format("<text x=\"4\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\">{:.3g}</text>\n",
                       chart_y(hi, lo, hi, opts), hi);
    out << fmt::format("<text x=\"4\" y=\"{:.2f}\" font-family=\"sans-serif\" font-size=\"11\">{:.3g}</text>\n",
                       chart_y(lo, lo, hi, opts), lo);
  }
  for (std::size_t i = 0; i < reports.size(); ++i) {
    const auto& r = reports[i];
    const char* color = kPalette[i % std::size(kPalette)];
    out << fmt::format("<polyline data-policy=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\" points=\"",
                       r.policy_id, color);
    const std::size_t n = r.equity.size();
    for (std::size_t t = 0; t < n; ++t) {
      const double x = opts.margin + (n > 1 ? plot_w * static_cast<double>(t) / static_cast<double>(n - 1) : 0.0);
      out << fmt::format("{}{:.4f},{:.4f}", t == 0 ? "" : " ", x, chart_y(r.equity[t], lo, hi, opts));
    }
    out << "\"/>\n";
    out << fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" fill=\"{}\">{}</text>\n",
                       opts.width - opts.margin + 4.0 - 150.0, opts.margin + 16.0 * static_cast<double>(i + 1),
                       color, r.policy_id);
  }
  out << "</svg>\n";
}

ReportFiles emit_report(std::span<const BacktestReport> reports, const std::filesystem::path& dir,
                        const std::string& stem, const ChartOptions& opts) {
  if (reports.empty()) throw DomainError("emit_report: no reports");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  ReportFiles files{dir / (stem + ".json"), dir / (stem + ".csv"), dir / (stem + ".svg")};
  auto open = [](const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write {}", p.string()));
    return out;
  };
  {
    nlohmann::json doc = {{"schema", "hierfolio.report_set"}, {"version", kReportSchemaVersion}};
    doc["reports"] = nlohmann::json::array();
    for (const auto& r : reports) doc["reports"].push_back(to_json(r));
    auto out = open(files.json);
    out << doc.dump(2) << '\n';
  }
  {
    auto out = open(files.csv);
    write_summary_csv(out, reports);
  }
  {
    auto out = open(files.svg);
    write_equity_svg(out, reports, opts);
  }
  return files;
}

}  // namespace hierfolio
