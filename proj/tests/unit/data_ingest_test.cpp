#include <gtest/gtest.h>

#include <sstream>

#include "hierfolio/data_ingest.hpp"
#include "hierfolio/errors.hpp"
#include "hierfolio/synthetic.hpp"
#include "oracles.hpp"

using namespace hierfolio;

namespace {

PriceTable parse(const std::string& text, std::vector<std::string> tickers) {
  std::istringstream in(text);
  return parse_price_csv(in, tickers);
}

PriceTable one_column(std::vector<double> values) {
  PriceTable t;
  t.tickers = {"A"};
  auto days = business_days(parse_date("2020-01-01"), parse_date("2020-03-31"));
  days.resize(values.size());
  t.calendar = days;
  t.prices = std::move(values);
  return t;
}

}  // namespace

TEST(PriceCsv, SingleTickerTwoRows) {
  const auto t = parse("date,SPX\n2020-01-02,100\n2020-01-03,101\n", {"SPX"});
  ASSERT_EQ(t.n_dates(), 2u);
  ASSERT_EQ(t.n_assets(), 1u);
  EXPECT_EQ(format_date(t.calendar[0]), "2020-01-02");
  EXPECT_DOUBLE_EQ(t.at(1, 0), 101.0);
}

TEST(PriceCsv, MissingColumnIsNamed) {
  try {
    parse("date,GSPC\n2020-01-02,1\n", {"GSPC", "GC=F"});
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.column(), "GC=F");
  }
}

TEST(PriceCsv, ExtraColumnIsNamed) {
  try {
    parse("date,A,B\n2020-01-02,1,2\n", {"A"});
    FAIL() << "expected SchemaError";
  } catch (const SchemaError& e) {
    EXPECT_EQ(e.column(), "B");
  }
}

TEST(PriceCsv, BadNumberReportsRow) {
  try {
    parse("date,A\n2020-01-02,1\n2020-01-03,abc\n", {"A"});
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
  }
}

TEST(PriceCsv, BadDateReportsRow) {
  try {
    parse("date,A\n2020-13-02,1\n", {"A"});
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 1u);
  }
}

TEST(PriceCsv, EmptyInputIsDistinct) {
  EXPECT_THROW(parse("", {"A"}), EmptyInputError);
  EXPECT_THROW(parse("date,A\n", {"A"}), EmptyInputError);
}

TEST(PriceCsv, DuplicateDateRejected) {
  EXPECT_THROW(parse("date,A\n2020-01-02,1\n2020-01-02,2\n", {"A"}), ParseError);
}

TEST(PriceCsv, MissingCellsAreKeptAndRowsSorted) {
  const auto t = parse("date,A,B\n2020-01-03,1,\n2020-01-02,2,3\n", {"B", "A"});
  EXPECT_EQ(t.tickers, (std::vector<std::string>{"B", "A"}));
  EXPECT_EQ(format_date(t.calendar[0]), "2020-01-02");
  EXPECT_TRUE(is_missing(t.at(1, 0)));
  EXPECT_DOUBLE_EQ(t.at(1, 1), 1.0);
}

TEST(PriceCsv, FourteenTickerFixtureKeepsDeclaredOrder) {
  oracle::Gen g(3);
  const auto universe = default_universe();
  auto shuffled = universe;
  std::reverse(shuffled.begin(), shuffled.end());
  std::ostringstream csv;
  csv << "date";
  for (const auto& t : shuffled) csv << ',' << t;
  csv << '\n';
  const auto days = business_days(parse_date("2021-01-01"), parse_date("2021-12-31"));
  for (std::size_t d = 0; d < 252; ++d) {
    csv << format_date(days[d]);
    for (std::size_t a = 0; a < shuffled.size(); ++a) csv << ',' << g.uniform(1, 100);
    csv << '\n';
  }
  const auto t = parse(csv.str(), universe);
  EXPECT_EQ(t.n_dates(), 252u);
  EXPECT_EQ(t.n_assets(), 14u);
  EXPECT_EQ(t.tickers, universe);
}

TEST(PriceCsv, WriteParseRoundTripIsExact) {
  SyntheticUniverseOptions opts;
  opts.last = parse_date("2003-06-30");
  const auto t = synthetic_universe(opts);
  std::ostringstream out;
  write_price_csv(out, t);
  EXPECT_EQ(parse(out.str(), t.tickers), t);
}

TEST(FillMissing, ForwardInterior) {
  const auto f = fill_missing(one_column({10, kMissing, 14}), {FillKind::forward});
  EXPECT_EQ(f.prices, (std::vector<double>{10, 10, 14}));
}

TEST(FillMissing, LinearInterior) {
  const auto f = fill_missing(one_column({10, kMissing, 14}), {FillKind::linear});
  EXPECT_EQ(f.prices, (std::vector<double>{10, 12, 14}));
}

TEST(FillMissing, BackwardInterior) {
  const auto f = fill_missing(one_column({10, kMissing, 14}), {FillKind::backward});
  EXPECT_EQ(f.prices, (std::vector<double>{10, 14, 14}));
}

TEST(FillMissing, LeadingGapTakesNextObservation) {
  const auto f = fill_missing(one_column({kMissing, 20, 30}), {FillKind::forward});
  EXPECT_EQ(f.prices, (std::vector<double>{20, 20, 30}));
}

TEST(FillMissing, TrailingGapCarriesForward) {
  const auto f = fill_missing(one_column({5, 6, kMissing}), {FillKind::linear});
  EXPECT_EQ(f.prices, (std::vector<double>{5, 6, 6}));
}

TEST(FillMissing, EmptyAssetIsNamed) {
  PriceTable t = one_column({1, 2});
  t.tickers = {"A", "ZZ"};
  t.prices = {1, kMissing, 2, kMissing};
  try {
    fill_missing(t, {});
    FAIL();
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("ZZ"), std::string::npos);
  }
}

TEST(FillMissing, IdempotentAndBoundedOnRandomGaps) {
  oracle::Gen g(17);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(40);
    for (auto& x : v) x = g.uniform() < 0.3 ? kMissing : g.uniform(1, 50);
    v[g.index(v.size())] = 7.0;
    for (auto kind : {FillKind::forward, FillKind::backward, FillKind::linear}) {
      const auto once = fill_missing(one_column(v), {kind});
      EXPECT_TRUE(once.dense());
      EXPECT_EQ(fill_missing(once, {kind}), once);
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!is_missing(v[i])) EXPECT_EQ(once.prices[i], v[i]);
      }
      if (kind != FillKind::linear) continue;
      // interior values stay between the neighbouring observations
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!is_missing(v[i])) continue;
        std::size_t lo = i, hi = i;
        while (lo > 0 && is_missing(v[lo])) --lo;
        while (hi + 1 < v.size() && is_missing(v[hi])) ++hi;
        if (is_missing(v[lo]) || is_missing(v[hi])) continue;
        EXPECT_GE(once.prices[i], std::min(v[lo], v[hi]) - 1e-12);
        EXPECT_LE(once.prices[i], std::max(v[lo], v[hi]) + 1e-12);
      }
    }
  }
}

TEST(MinMax, Examples) {
  EXPECT_EQ(minmax_normalize(std::vector<double>{10, 20, 30}), (std::vector<double>{0, 0.5, 1}));
  EXPECT_EQ(minmax_normalize(std::vector<double>{7, 7, 7}), (std::vector<double>{0.5, 0.5, 0.5}));
  EXPECT_THROW(minmax_normalize(std::vector<double>{}), DomainError);
}

TEST(MinMax, RandomSeriesAgainstDirectRecomputation) {
  oracle::Gen g(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(100);
    for (auto& v : x) v = g.uniform(-50, 50);
    const auto y = minmax_normalize(x);
    const double lo = *std::min_element(x.begin(), x.end());
    const double hi = *std::max_element(x.begin(), x.end());
    EXPECT_EQ(*std::min_element(y.begin(), y.end()), 0.0);
    EXPECT_EQ(*std::max_element(y.begin(), y.end()), 1.0);
    const auto twice = minmax_normalize(y);
    for (std::size_t i = 0; i < x.size(); ++i) {
      EXPECT_NEAR(y[i], (x[i] - lo) / (hi - lo), 1e-12);
      EXPECT_NEAR(twice[i], y[i], 1e-12);
      for (std::size_t j = 0; j < x.size(); ++j) {
        if (x[i] < x[j]) EXPECT_LE(y[i], y[j]);
      }
    }
  }
}

TEST(MonthlyPartition, BoundaryIsPriorClose) {
  PriceTable t;
  t.tickers = {"A"};
  t.calendar = {parse_date("2020-01-30"), parse_date("2020-01-31"), parse_date("2020-02-03")};
  t.prices = {1, 2, 3};
  const auto s = monthly_partition(t);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].boundary[0], 1.0);
  EXPECT_EQ(s[1].boundary[0], 2.0);
  EXPECT_EQ(s[1].asset_path(0), (std::vector<double>{2, 3}));
}

TEST(MonthlyPartition, SliceLengthsFollowTheCalendar) {
  const auto dates = business_days(parse_date("2024-01-01"), parse_date("2024-02-29"));
  PriceTable t;
  t.tickers = {"A"};
  t.calendar = dates;
  t.prices.assign(dates.size(), 1.0);
  const auto s = monthly_partition(t);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].n_days(), 23u);
  EXPECT_EQ(s[1].n_days(), 21u);
}

TEST(MonthlyPartition, SyntheticCalendarHas264Months) {
  const auto t = fill_missing(synthetic_universe(), {});
  const auto s = monthly_partition(t);
  EXPECT_EQ(s.size(), 264u);
  EXPECT_EQ(s.front().month.str(), "2003-01");
  EXPECT_EQ(s.back().month.str(), "2024-12");
  // concatenating the slices reproduces the table
  std::vector<double> joined;
  for (const auto& m : s) joined.insert(joined.end(), m.daily.begin(), m.daily.end());
  EXPECT_EQ(joined, t.prices);
}

TEST(MonthlyPartition, SingleMonthRejected) {
  EXPECT_THROW(monthly_partition(one_column({1, 2, 3})), DomainError);
}
