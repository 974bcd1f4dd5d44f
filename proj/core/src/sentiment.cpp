#include "hierfolio/sentiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <istream>
#include <ostream>

#include <fmt/format.h>

#include "hierfolio/errors.hpp"
#include "hierfolio/features.hpp"
#include "hierfolio/rng.hpp"

namespace hierfolio {
namespace {

constexpr double kProbTol = 1e-6;

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw DomainError(fmt::format("article probability {}={} outside [0,1]", name, p));
  }
}

}  // namespace

SentimentCell aggregate_articles(std::span<const ArticleSentiment> articles) {
  if (articles.empty()) return {};
  double sum = 0.0;
  for (const auto& a : articles) {
    check_probability(a.p_positive, "p_positive");
    check_probability(a.p_negative, "p_negative");
    check_probability(a.p_neutral, "p_neutral");
    const double total = a.p_positive + a.p_negative + a.p_neutral;
    if (std::abs(total - 1.0) > kProbTol) {
      throw DomainError(fmt::format("article probabilities sum to {}, expected 1", total));
    }
    sum += a.p_positive - a.p_negative;
  }
  SentimentCell cell;
  cell.n_articles = static_cast<int>(articles.size());
  cell.score = std::clamp(sum / static_cast<double>(articles.size()), -1.0, 1.0);
  cell.no_news = false;
  return cell;
}

void SentimentTable::insert(const MonthId& month, const std::string& ticker, SentimentCell cell) {
  if (!(std::abs(cell.score) <= 1.0)) {
    throw DomainError(fmt::format("sentiment score {} for {} {} outside [-1,1]", cell.score,
                                  month.str(), ticker));
  }
  if (cell.n_articles < 0) throw DomainError("negative article count");
  const auto [it, inserted] = cells_.emplace(std::make_pair(month, ticker), cell);
  if (!inserted) {
    throw DomainError(fmt::format("duplicate sentiment cell ({}, {})", month.str(), ticker));
  }
}

SentimentCell SentimentTable::lookup(const MonthId& month, const std::string& ticker) const {
  const auto it = cells_.find({month, ticker});
  return it == cells_.end() ? SentimentCell{} : it->second;
}

std::vector<double> SentimentTable::scores(const MonthId& month,
                                           std::span<const std::string> tickers) const {
  std::vector<double> out;
  out.reserve(tickers.size());
  for (const auto& t : tickers) out.push_back(lookup(month, t).score);
  return out;
}

SentimentTable parse_sentiment_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw EmptyInputError("sentiment file is empty");
  if (trim(line) != "month,ticker,score,n_articles") {
    throw SchemaError("header", "sentiment header must be 'month,ticker,score,n_articles'");
  }
  SentimentTable table;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (;;) {
      const auto c = rest.find(',');
      f.push_back(trim(rest.substr(0, c)));
      if (c == std::string_view::npos) break;
      rest.remove_prefix(c + 1);
    }
    if (f.size() != 4) throw ParseError(row, fmt::format("row {}: expected 4 fields", row));
    try {
      const MonthId month = MonthId::parse(f[0]);
      if (f[1].empty()) throw DomainError("empty ticker");
      double score = 0.0;
      auto [p1, e1] = std::from_chars(f[2].data(), f[2].data() + f[2].size(), score);
      if (e1 != std::errc{} || p1 != f[2].data() + f[2].size()) {
        throw DomainError(fmt::format("cannot parse score '{}'", f[2]));
      }
      int n = 0;
      auto [p2, e2] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), n);
      if (e2 != std::errc{} || p2 != f[3].data() + f[3].size()) {
        throw DomainError(fmt::format("cannot parse n_articles '{}'", f[3]));
      }
      table.insert(month, std::string(f[1]), SentimentCell{score, n, n == 0});
    } catch (const DomainError& e) {
      throw ParseError(row, fmt::format("row {}: {}", row, e.what()));
    }
  }
  return table;
}

SentimentTable load_sentiment_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open sentiment file {}", path.string()));
  return parse_sentiment_csv(in);
}

void write_sentiment_csv(std::ostream& out, const SentimentTable& table) {
  out << "month,ticker,score,n_articles\n";
  for (const auto& [key, cell] : table.cells()) {
    out << key.first.str() << ',' << key.second << ',' << fmt::format("{}", cell.score) << ','
        << cell.n_articles << '\n';
  }
}

SentimentTable simulate_sentiment(const PriceTable& dense, std::span<const MonthId> months,
                                  std::uint64_t seed, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw DomainError(fmt::format("signal strength lambda={} outside [0,1]", lambda));
  }
  const auto slices = monthly_partition(dense);
  const std::size_t n = dense.n_assets();

  // monthly return of each asset; z-scored per asset over the whole table
  std::vector<std::vector<double>> monthly(n, std::vector<double>(slices.size()));
  for (std::size_t k = 0; k < slices.size(); ++k) {
    const auto& s = slices[k];
    for (std::size_t a = 0; a < n; ++a) {
      monthly[a][k] = s.price(s.n_days() - 1, a) / s.boundary[a] - 1.0;
    }
  }
  std::vector<double> mu(n, 0.0);
  std::vector<double> sd(n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    mu[a] = mean(monthly[a]);
    sd[a] = monthly[a].size() >= 2 ? sample_std(monthly[a]) : 0.0;
  }

  Rng rng(seed);
  SentimentTable table;
  for (const auto& m : months) {
    std::optional<std::size_t> next;
    for (std::size_t k = 0; k + 1 < slices.size(); ++k) {
      if (slices[k].month == m) {
        next = k + 1;
        break;
      }
    }
    for (std::size_t a = 0; a < n; ++a) {
      const double u = rng.uniform(-1.0, 1.0);
      double proxy = 0.0;
      if (next && sd[a] >= kDegenerateEps) proxy = std::tanh((monthly[a][*next] - mu[a]) / sd[a]);
      const double score = std::clamp(lambda * proxy + (1.0 - lambda) * u, -1.0, 1.0);
      table.insert(m, dense.tickers[a], SentimentCell{score, 10, false});
    }
  }
  return table;
}

}  // namespace hierfolio
