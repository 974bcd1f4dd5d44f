#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>
#include <vector>

namespace hierfolio {

using Date = std::chrono::year_month_day;

// Parses `YYYY-MM-DD`. Throws DomainError on malformed or impossible dates.
Date parse_date(std::string_view text);
std::string format_date(const Date& d);
bool is_weekday(const Date& d);

// Calendar month, formatted `YYYY-MM`.
struct MonthId {
  int year = 0;
  int month = 0;  // 1..12

  static MonthId of(const Date& d);
  static MonthId parse(std::string_view text);

  std::string str() const;
  MonthId next() const;
  MonthId prev() const;
  // Months since year 0; differences give calendar month distances.
  int ordinal() const { return year * 12 + (month - 1); }

  friend auto operator<=>(const MonthId&, const MonthId&) = default;
};

// Inclusive month range `start:end`.
struct Window {
  MonthId start;
  MonthId end;

  static Window parse(std::string_view text);  // "2018-01:2024-12"
  std::string str() const;
  bool contains(const MonthId& m) const { return start <= m && m <= end; }
  int months() const { return end.ordinal() - start.ordinal() + 1; }
  bool overlaps(const Window& other) const {
    return !(end < other.start || other.end < start);
  }

  friend bool operator==(const Window&, const Window&) = default;
};

// Every month from `first` to `last` inclusive.
std::vector<MonthId> month_range(MonthId first, MonthId last);

}  // namespace hierfolio
