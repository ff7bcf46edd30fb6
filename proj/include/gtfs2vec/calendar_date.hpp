#pragma once

#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "gtfs2vec/detail/io.hpp"
#include "gtfs2vec/error.hpp"

namespace gtfs2vec {

using calendar_date = std::chrono::year_month_day;

namespace detail {

inline calendar_date make_date(int y, unsigned m, unsigned d,
                               std::string_view text) {
  calendar_date const date{std::chrono::year{y}, std::chrono::month{m},
                           std::chrono::day{d}};
  if (!date.ok()) {
    throw format_error("invalid calendar date: '" + std::string{text} + "'");
  }
  return date;
}

}  // namespace detail

// GTFS dates: YYYYMMDD.
inline calendar_date parse_gtfs_date(std::string_view text) {
  auto const s = detail::trim(text);
  int y{};
  unsigned m{}, d{};
  if (s.size() != 8 || !detail::parse_number(s.substr(0, 4), y) ||
      !detail::parse_number(s.substr(4, 2), m) ||
      !detail::parse_number(s.substr(6, 2), d)) {
    throw format_error("invalid GTFS date: '" + std::string{text} + "'");
  }
  return detail::make_date(y, m, d, text);
}

// ISO dates: YYYY-MM-DD.
inline calendar_date parse_iso_date(std::string_view text) {
  auto const s = detail::trim(text);
  int y{};
  unsigned m{}, d{};
  if (s.size() != 10 || s[4] != '-' || s[7] != '-' ||
      !detail::parse_number(s.substr(0, 4), y) ||
      !detail::parse_number(s.substr(5, 2), m) ||
      !detail::parse_number(s.substr(8, 2), d)) {
    throw format_error("invalid date (expected YYYY-MM-DD): '" +
                       std::string{text} + "'");
  }
  return detail::make_date(y, m, d, text);
}

inline std::string format_gtfs_date(calendar_date d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d%02u%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

inline std::string format_iso_date(calendar_date d) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

// 0 = Monday ... 6 = Sunday, matching the column order of calendar.txt.
inline unsigned weekday_index(calendar_date d) {
  return std::chrono::weekday{std::chrono::sys_days{d}}.iso_encoding() - 1;
}

inline calendar_date add_days(calendar_date d, int days) {
  return calendar_date{std::chrono::sys_days{d} + std::chrono::days{days}};
}

}  // namespace gtfs2vec
