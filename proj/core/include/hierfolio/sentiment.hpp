#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hierfolio/calendar.hpp"
#include "hierfolio/data_ingest.hpp"

namespace hierfolio {

struct ArticleSentiment {
  double p_positive = 0.0;
  double p_negative = 0.0;
  double p_neutral = 1.0;
  std::string ticker;
  MonthId month;
};

struct SentimentCell {
  double score = 0.0;
  int n_articles = 0;
  bool no_news = true;

  friend bool operator==(const SentimentCell&, const SentimentCell&) = default;
};

// Mean of (p_positive - p_negative). Empty input yields a flagged 0.
SentimentCell aggregate_articles(std::span<const ArticleSentiment> articles);

// Monthly per-asset sentiment scores keyed by (month, ticker).
class SentimentTable {
 public:
  // Throws DomainError on |score| > 1, negative count or duplicate key.
  void insert(const MonthId& month, const std::string& ticker, SentimentCell cell);
  // Absent cells read as a flagged 0.
  SentimentCell lookup(const MonthId& month, const std::string& ticker) const;
  std::vector<double> scores(const MonthId& month, std::span<const std::string> tickers) const;

  std::size_t size() const { return cells_.size(); }
  const std::map<std::pair<MonthId, std::string>, SentimentCell>& cells() const { return cells_; }

  friend bool operator==(const SentimentTable&, const SentimentTable&) = default;

 private:
  std::map<std::pair<MonthId, std::string>, SentimentCell> cells_;
};

// CSV schema: `month,ticker,score,n_articles`.
SentimentTable parse_sentiment_csv(std::istream& in);
SentimentTable load_sentiment_table(const std::filesystem::path& path);
void write_sentiment_csv(std::ostream& out, const SentimentTable& table);

// score = clamp(lambda * tanh(z_next) + (1 - lambda) * u, -1, 1), with z_next
// the z-score of the asset's following-month return and u ~ U(-1, 1).
// lambda > 0 leaks future returns into the signal and exists for tests only.
SentimentTable simulate_sentiment(const PriceTable& dense, std::span<const MonthId> months,
                                  std::uint64_t seed, double lambda);

}  // namespace hierfolio
