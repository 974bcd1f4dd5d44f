#include "hierfolio/calendar.hpp"

#include <charconv>

#include <fmt/format.h>

#include "hierfolio/errors.hpp"

namespace hierfolio {
namespace {

int parse_int(std::string_view text, std::string_view whole) {
  int value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw DomainError(fmt::format("malformed date component in '{}'", whole));
  }
  return value;
}

}  // namespace

Date parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
    throw DomainError(fmt::format("expected YYYY-MM-DD, got '{}'", text));
  }
  const int y = parse_int(text.substr(0, 4), text);
  const int m = parse_int(text.substr(5, 2), text);
  const int d = parse_int(text.substr(8, 2), text);
  Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
            std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) throw DomainError(fmt::format("invalid calendar date '{}'", text));
  return date;
}

std::string format_date(const Date& d) {
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()),
                     static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
}

bool is_weekday(const Date& d) {
  const std::chrono::weekday wd{std::chrono::sys_days{d}};
  return wd != std::chrono::Saturday && wd != std::chrono::Sunday;
}

MonthId MonthId::of(const Date& d) {
  return {static_cast<int>(d.year()), static_cast<int>(static_cast<unsigned>(d.month()))};
}

MonthId MonthId::parse(std::string_view text) {
  if (text.size() != 7 || text[4] != '-') {
    throw DomainError(fmt::format("expected YYYY-MM, got '{}'", text));
  }
  MonthId id{parse_int(text.substr(0, 4), text), parse_int(text.substr(5, 2), text)};
  if (id.month < 1 || id.month > 12) throw DomainError(fmt::format("invalid month '{}'", text));
  return id;
}

std::string MonthId::str() const { return fmt::format("{:04d}-{:02d}", year, month); }

MonthId MonthId::next() const { return month == 12 ? MonthId{year + 1, 1} : MonthId{year, month + 1}; }

MonthId MonthId::prev() const { return month == 1 ? MonthId{year - 1, 12} : MonthId{year, month - 1}; }

Window Window::parse(std::string_view text) {
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) {
    throw DomainError(fmt::format("expected START:END window, got '{}'", text));
  }
  Window w{MonthId::parse(text.substr(0, colon)), MonthId::parse(text.substr(colon + 1))};
  if (w.end < w.start) throw DomainError(fmt::format("window '{}' ends before it starts", text));
  return w;
}

std::string Window::str() const { return start.str() + ":" + end.str(); }

std::vector<MonthId> month_range(MonthId first, MonthId last) {
  std::vector<MonthId> out;
  for (MonthId m = first; m <= last; m = m.next()) out.push_back(m);
  return out;
}

}  // namespace hierfolio
