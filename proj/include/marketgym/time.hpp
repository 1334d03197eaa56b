#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace marketgym {

/// UTC instant with one-second resolution.
struct Timestamp {
  std::int64_t seconds = 0;  // since 1970-01-01T00:00:00Z

  friend constexpr auto operator<=>(Timestamp, Timestamp) = default;
};

enum class Granularity { minute, hourly, daily };

constexpr std::int64_t period_seconds(Granularity g) {
  switch (g) {
    case Granularity::minute: return 60;
    case Granularity::hourly: return 3600;
    case Granularity::daily: return 86400;
  }
  return 86400;
}

constexpr int coarseness(Granularity g) {
  return g == Granularity::minute ? 0 : g == Granularity::hourly ? 1 : 2;
}

/// Annualization constant: 252 trading days of 6.5 hours.
constexpr double periods_per_year(Granularity g) {
  switch (g) {
    case Granularity::minute: return 252.0 * 390.0;
    case Granularity::hourly: return 252.0 * 6.5;
    case Granularity::daily: return 252.0;
  }
  return 252.0;
}

inline std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::minute: return "minute";
    case Granularity::hourly: return "hourly";
    case Granularity::daily: return "daily";
  }
  return "daily";
}

inline std::optional<Granularity> parse_granularity(std::string_view s) {
  if (s == "minute") return Granularity::minute;
  if (s == "hourly") return Granularity::hourly;
  if (s == "daily") return Granularity::daily;
  return std::nullopt;
}

namespace detail {

inline bool read_digits(std::string_view s, std::size_t pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  int value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    value = value * 10 + (s[i] - '0');
  }
  out = value;
  return true;
}

}  // namespace detail

inline Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour = 0, int minute = 0,
                                int second = 0) {
  using namespace std::chrono;
  const sys_days days{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}};
  return Timestamp{days.time_since_epoch().count() * 86400LL + hour * 3600LL + minute * 60LL + second};
}

/// Accepts `YYYY-MM-DD`, `YYYY/MM/DD`, and `YYYY-MM-DD[T ]HH:MM[:SS][Z]`.
inline std::optional<Timestamp> parse_timestamp(std::string_view s) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, se = 0;
  if (s.size() < 10 || !detail::read_digits(s, 0, 4, y) || (s[4] != '-' && s[4] != '/') || s[7] != s[4] ||
      !detail::read_digits(s, 5, 2, mo) || !detail::read_digits(s, 8, 2, d))
    return std::nullopt;
  std::size_t pos = 10;
  if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
    if (!detail::read_digits(s, pos + 1, 2, h) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
        !detail::read_digits(s, pos + 4, 2, mi))
      return std::nullopt;
    pos += 6;
    if (pos < s.size() && s[pos] == ':') {
      if (!detail::read_digits(s, pos + 1, 2, se)) return std::nullopt;
      pos += 3;
    }
    if (pos < s.size() && s[pos] == 'Z') ++pos;
  }
  if (pos != s.size()) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 59) return std::nullopt;
  return make_timestamp(y, mo, d, h, mi, se);
}

inline std::int64_t day_index(Timestamp t) {
  return t.seconds >= 0 ? t.seconds / 86400 : -((-t.seconds + 86399) / 86400);
}

/// Daily instants at midnight print as a bare date; everything else as full UTC ISO-8601.
inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto days = day_index(t);
  const std::int64_t rem = t.seconds - days * 86400;
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  if (rem == 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(rem / 3600), static_cast<int>(rem % 3600 / 60), static_cast<int>(rem % 60));
  }
  return buf;
}

/// Date in the `YYYY/MM/DD` style used for report column headers.
inline std::string format_report_date(Timestamp t) {
  using namespace std::chrono;
  const year_month_day ymd{sys_days{std::chrono::days{day_index(t)}}};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d/%02u/%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

}  // namespace marketgym
