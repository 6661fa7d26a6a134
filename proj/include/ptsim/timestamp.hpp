#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <iomanip>
#include <locale>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

namespace ptsim {

// Epoch milliseconds, UTC.
using Millis = std::int64_t;

inline constexpr Millis kMillisPerSecond = 1000;
inline constexpr Millis kMillisPerHour = 3600 * kMillisPerSecond;
inline constexpr Millis kMillisPerDay = 24 * kMillisPerHour;

namespace detail {

inline bool read_digits(std::string_view s, std::size_t& pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = 0; i < n; ++i) {
    char c = s[pos + i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  pos += n;
  out = v;
  return true;
}

inline Millis civil_to_millis(int y, unsigned mo, unsigned d, int h, int mi, int s, int ms) {
  using namespace std::chrono;
  const sys_days day{year{y} / month{mo} / std::chrono::day{d}};
  return static_cast<Millis>(day.time_since_epoch().count()) * kMillisPerDay + h * kMillisPerHour +
         mi * 60 * kMillisPerSecond + s * kMillisPerSecond + ms;
}

inline Millis floor_div(Millis a, Millis b) {
  Millis q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace detail

// Parses "YYYY-MM-DD[T| ]HH:MM[:SS[.fff]][Z]". Returns nullopt on any deviation.
inline std::optional<Millis> parse_iso8601(std::string_view text) {
  using detail::read_digits;
  std::size_t pos = 0;
  int y, mo, d, h, mi, s = 0, ms = 0;
  if (!read_digits(text, pos, 4, y) || pos >= text.size() || text[pos++] != '-') return std::nullopt;
  if (!read_digits(text, pos, 2, mo) || pos >= text.size() || text[pos++] != '-') return std::nullopt;
  if (!read_digits(text, pos, 2, d)) return std::nullopt;
  if (pos >= text.size() || (text[pos] != 'T' && text[pos] != ' ')) return std::nullopt;
  ++pos;
  if (!read_digits(text, pos, 2, h) || pos >= text.size() || text[pos++] != ':') return std::nullopt;
  if (!read_digits(text, pos, 2, mi)) return std::nullopt;
  if (pos < text.size() && text[pos] == ':') {
    ++pos;
    if (!read_digits(text, pos, 2, s)) return std::nullopt;
    if (pos < text.size() && text[pos] == '.') {
      ++pos;
      std::size_t start = pos;
      int frac = 0, digits = 0;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
        if (digits < 3) {
          frac = frac * 10 + (text[pos] - '0');
          ++digits;
        }
        ++pos;
      }
      if (pos == start) return std::nullopt;
      while (digits < 3) {
        frac *= 10;
        ++digits;
      }
      ms = frac;
    }
  }
  if (pos < text.size() && text[pos] == 'Z') ++pos;
  if (pos != text.size()) return std::nullopt;
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || s > 60) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month(mo), std::chrono::day(d)};
  if (!ymd.ok()) return std::nullopt;
  return detail::civil_to_millis(y, mo, d, h, mi, s, ms);
}

// Parses with a strftime-style format (e.g. "%m/%d/%Y %H:%M"); seconds precision.
inline std::optional<Millis> parse_with_format(std::string_view text, const std::string& format) {
  std::tm tm{};
  std::istringstream in{std::string(text)};
  in.imbue(std::locale::classic());
  in >> std::get_time(&tm, format.c_str());
  if (in.fail()) return std::nullopt;
  in >> std::ws;
  if (!in.eof()) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{tm.tm_year + 1900},
                                        std::chrono::month(static_cast<unsigned>(tm.tm_mon + 1)),
                                        std::chrono::day(static_cast<unsigned>(tm.tm_mday))};
  if (!ymd.ok()) return std::nullopt;
  return detail::civil_to_millis(tm.tm_year + 1900, static_cast<unsigned>(tm.tm_mon + 1),
                                 static_cast<unsigned>(tm.tm_mday), tm.tm_hour, tm.tm_min, tm.tm_sec, 0);
}

inline std::optional<Millis> parse_timestamp(std::string_view text, const std::string& format = {}) {
  return format.empty() ? parse_iso8601(text) : parse_with_format(text, format);
}

// Canonical output form: "YYYY-MM-DDTHH:MM:SS" with ".mmm" appended when non-zero.
inline std::string format_iso8601(Millis t) {
  using namespace std::chrono;
  const Millis day = detail::floor_div(t, kMillisPerDay);
  Millis rem = t - day * kMillisPerDay;
  const year_month_day ymd{sys_days{days{day}}};
  const int h = static_cast<int>(rem / kMillisPerHour);
  rem %= kMillisPerHour;
  const int mi = static_cast<int>(rem / (60 * kMillisPerSecond));
  rem %= 60 * kMillisPerSecond;
  const int s = static_cast<int>(rem / kMillisPerSecond);
  const int ms = static_cast<int>(rem % kMillisPerSecond);
  char buf[40];
  if (ms == 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), h, mi, s);
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), h, mi, s, ms);
  }
  return buf;
}

// 0 = Sunday ... 6 = Saturday.
inline int weekday_of(Millis t) {
  using namespace std::chrono;
  return static_cast<int>(weekday{sys_days{days{detail::floor_div(t, kMillisPerDay)}}}.c_encoding());
}

inline int hour_of(Millis t) {
  return static_cast<int>((t - detail::floor_div(t, kMillisPerDay) * kMillisPerDay) / kMillisPerHour);
}

inline Millis start_of_day(Millis t) { return detail::floor_div(t, kMillisPerDay) * kMillisPerDay; }

}  // namespace ptsim
