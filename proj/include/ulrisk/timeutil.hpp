#pragma once

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <string>
#include <string_view>

#include "ulrisk/error.hpp"

namespace ulrisk {

using Minute = std::chrono::sys_time<std::chrono::minutes>;
using Hour = std::chrono::sys_time<std::chrono::hours>;
using Date = std::chrono::sys_days;

enum class Season { DJF = 0, MAM = 1, JJA = 2, SON = 3 };

namespace detail {

inline bool parse_fixed_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  const char* first = s.data() + pos;
  const char* last = first + len;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace detail

inline Date date_of(Minute t) { return std::chrono::floor<std::chrono::days>(t); }
inline Hour hour_of(Minute t) { return std::chrono::floor<std::chrono::hours>(t); }

inline unsigned month_of(Date d) {
  return static_cast<unsigned>(std::chrono::year_month_day(d).month());
}

inline Season season_of(Date d) {
  switch (month_of(d)) {
    case 12: case 1: case 2: return Season::DJF;
    case 3: case 4: case 5: return Season::MAM;
    case 6: case 7: case 8: return Season::JJA;
    default: return Season::SON;
  }
}

/// Meteorological season year: December counts toward the following winter.
inline int season_year(Date d) {
  const std::chrono::year_month_day ymd(d);
  const int y = static_cast<int>(ymd.year());
  return static_cast<unsigned>(ymd.month()) == 12 ? y + 1 : y;
}

inline std::string format_date(Date d) {
  const std::chrono::year_month_day ymd(d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

/// ISO-8601 UTC at minute resolution: YYYY-MM-DDTHH:MMZ.
inline std::string format_timestamp(Minute t) {
  const Date d = date_of(t);
  const auto minutes = (t - d).count();
  char buf[32];
  const std::chrono::year_month_day ymd(d);
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(minutes / 60), static_cast<int>(minutes % 60));
  return buf;
}

inline std::string format_hour(Hour h) { return format_timestamp(Minute(h)); }

inline Date parse_date(std::string_view s) {
  int y = 0, m = 0, d = 0;
  if (s.size() < 10 || s[4] != '-' || s[7] != '-' || !detail::parse_fixed_int(s, 0, 4, y) ||
      !detail::parse_fixed_int(s, 5, 2, m) || !detail::parse_fixed_int(s, 8, 2, d)) {
    fail(ErrorKind::BadValue, "unparsable date '" + std::string(s) + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year(y), std::chrono::month(static_cast<unsigned>(m)),
                                        std::chrono::day(static_cast<unsigned>(d))};
  if (!ymd.ok()) fail(ErrorKind::BadValue, "invalid date '" + std::string(s) + "'");
  return Date(ymd);
}

/// Accepts YYYY-MM-DD[THH:MM[:SS]][Z]; a space may replace the 'T'. Seconds are
/// truncated to the minute.
inline Minute parse_timestamp(std::string_view s) {
  const Date d = parse_date(s.substr(0, std::min<std::size_t>(s.size(), 10)));
  if (s.size() == 10) return Minute(d);
  int hh = 0, mm = 0, ss = 0;
  std::size_t pos = 11;
  const bool sep_ok = s[10] == 'T' || s[10] == ' ';
  bool ok = sep_ok && detail::parse_fixed_int(s, 11, 2, hh) && s.size() >= 16 && s[13] == ':' &&
            detail::parse_fixed_int(s, 14, 2, mm);
  pos = 16;
  if (ok && pos < s.size() && s[pos] == ':') {
    ok = detail::parse_fixed_int(s, pos + 1, 2, ss);
    pos += 3;
  }
  if (ok && pos < s.size() && s[pos] == 'Z') ++pos;
  ok = ok && pos == s.size() && hh < 24 && mm < 60 && ss < 60;
  if (!ok) fail(ErrorKind::BadValue, "unparsable timestamp '" + std::string(s) + "'");
  return Minute(d) + std::chrono::hours(hh) + std::chrono::minutes(mm);
}

}  // namespace ulrisk
