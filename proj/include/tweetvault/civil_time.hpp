#pragma once

// Proleptic Gregorian calendar arithmetic on UTC epoch milliseconds.

#include <array>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tweetvault {

using EpochMs = std::int64_t;

inline constexpr EpochMs kMsPerSecond = 1000;
inline constexpr EpochMs kMsPerDay = 86'400'000;
inline constexpr EpochMs kMsPerWeek = 7 * kMsPerDay;

struct CivilDate {
  int year = 1970;
  int month = 1;  // 1..12
  int day = 1;    // 1..31
  friend bool operator==(const CivilDate&, const CivilDate&) = default;
};

struct CivilDateTime {
  CivilDate date;
  int hour = 0;
  int minute = 0;
  int second = 0;
  int millisecond = 0;
};

inline constexpr std::array<std::string_view, 7> kWeekdayNames = {"Sun", "Mon", "Tue", "Wed",
                                                                  "Thu", "Fri", "Sat"};
inline constexpr std::array<std::string_view, 12> kMonthNames = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                                 "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

inline constexpr bool is_leap_year(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

inline constexpr int days_in_month(int y, int m) {
  constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && is_leap_year(y) ? 29 : kDays[m - 1];
}

// Days since 1970-01-01 (H. Hinnant's algorithm).
inline constexpr std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline constexpr CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {static_cast<int>(y + (m <= 2)), static_cast<int>(m), static_cast<int>(d)};
}

inline constexpr std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  return a / b - ((a % b != 0) && ((a < 0) != (b < 0)));
}

// 0 = Sunday.
inline constexpr int weekday_from_days(std::int64_t z) {
  return static_cast<int>(z >= -4 ? (z + 4) % 7 : (z + 5) % 7 + 6);
}

inline constexpr EpochMs to_epoch_ms(const CivilDate& d) { return days_from_civil(d.year, d.month, d.day) * kMsPerDay; }

inline constexpr EpochMs to_epoch_ms(const CivilDateTime& t) {
  return to_epoch_ms(t.date) + ((t.hour * 60 + t.minute) * 60 + t.second) * kMsPerSecond + t.millisecond;
}

inline constexpr CivilDateTime to_civil(EpochMs ms) {
  const std::int64_t days = floor_div(ms, kMsPerDay);
  std::int64_t rem = ms - days * kMsPerDay;
  CivilDateTime t;
  t.date = civil_from_days(days);
  t.hour = static_cast<int>(rem / 3'600'000);
  rem %= 3'600'000;
  t.minute = static_cast<int>(rem / 60'000);
  rem %= 60'000;
  t.second = static_cast<int>(rem / 1000);
  t.millisecond = static_cast<int>(rem % 1000);
  return t;
}

struct IsoWeek {
  int year = 0;
  int week = 0;  // 1..53
};

// Days since epoch of the Monday starting the ISO week that contains day z.
inline constexpr std::int64_t iso_week_monday(std::int64_t z) {
  const int wd = weekday_from_days(z);  // 0 = Sunday
  return z - (wd == 0 ? 6 : wd - 1);
}

inline constexpr IsoWeek iso_week_of_days(std::int64_t z) {
  // The ISO year is the calendar year of the week's Thursday.
  const std::int64_t thursday = iso_week_monday(z) + 3;
  const int iso_year = civil_from_days(thursday).year;
  const std::int64_t jan1 = days_from_civil(iso_year, 1, 1);
  return {iso_year, static_cast<int>((thursday - jan1) / 7 + 1)};
}

inline constexpr IsoWeek iso_week(EpochMs ms) { return iso_week_of_days(floor_div(ms, kMsPerDay)); }

// Monday of ISO week `week` of ISO year `year`, as days since epoch.
inline constexpr std::int64_t iso_week_start_days(int year, int week) {
  const std::int64_t jan4 = days_from_civil(year, 1, 4);
  return iso_week_monday(jan4) + 7 * (week - 1);
}

// `EEE MMM dd HH:mm:ss +0000 yyyy`, always UTC.
inline std::string format_created_at(EpochMs ms) {
  const auto t = to_civil(ms);
  const int wd = weekday_from_days(floor_div(ms, kMsPerDay));
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s %s %02d %02d:%02d:%02d +0000 %04d", kWeekdayNames[wd].data(),
                kMonthNames[t.date.month - 1].data(), t.date.day, t.hour, t.minute, t.second, t.date.year);
  return buf;
}

// `YYYY-MM-DDTHH:MM:SS.mmmZ`
inline std::string format_iso8601(EpochMs ms) {
  const auto t = to_civil(ms);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", t.date.year, t.date.month, t.date.day,
                t.hour, t.minute, t.second, t.millisecond);
  return buf;
}

inline std::string format_iso_date(EpochMs ms) {
  const auto t = to_civil(ms);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", t.date.year, t.date.month, t.date.day);
  return buf;
}

class TimeParseError : public std::runtime_error {
 public:
  TimeParseError(const std::string& what, std::string input)
      : std::runtime_error(what + ": '" + input + "'"), input_(std::move(input)) {}
  const std::string& input() const { return input_; }

 private:
  std::string input_;
};

namespace detail {

inline bool read_digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
  if (pos + n > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
  }
  out = v;
  return true;
}

}  // namespace detail

// Accepts `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM[:SS[.mmm]][Z]`. A bare date means
// the start of that day; with `end_of_day` it means its last millisecond.
inline EpochMs parse_iso8601(std::string_view s, bool end_of_day = false) {
  const std::string input(s);
  CivilDateTime t;
  if (s.size() < 10 || s[4] != '-' || s[7] != '-' || !detail::read_digits(s, 0, 4, t.date.year) ||
      !detail::read_digits(s, 5, 2, t.date.month) || !detail::read_digits(s, 8, 2, t.date.day))
    throw TimeParseError("expected YYYY-MM-DD", input);
  if (t.date.month < 1 || t.date.month > 12 || t.date.day < 1 ||
      t.date.day > days_in_month(t.date.year, t.date.month))
    throw TimeParseError("date out of range", input);
  if (s.size() == 10) return to_epoch_ms(t.date) + (end_of_day ? kMsPerDay - 1 : 0);
  std::string_view rest = s.substr(10);
  if (rest.front() != 'T' && rest.front() != ' ') throw TimeParseError("expected 'T' after date", input);
  if (rest.back() == 'Z') rest.remove_suffix(1);
  if (rest.size() < 6 || rest[3] != ':' || !detail::read_digits(rest, 1, 2, t.hour) ||
      !detail::read_digits(rest, 4, 2, t.minute))
    throw TimeParseError("expected HH:MM", input);
  std::size_t pos = 6;
  if (pos < rest.size()) {
    if (rest[pos] != ':' || !detail::read_digits(rest, pos + 1, 2, t.second)) throw TimeParseError("bad seconds", input);
    pos += 3;
    if (pos < rest.size()) {
      if (rest[pos] != '.' || !detail::read_digits(rest, pos + 1, 3, t.millisecond) || pos + 4 != rest.size())
        throw TimeParseError("bad fraction", input);
    }
  }
  if (t.hour > 23 || t.minute > 59 || t.second > 59) throw TimeParseError("time out of range", input);
  return to_epoch_ms(t);
}

}  // namespace tweetvault
