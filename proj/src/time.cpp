#include "nwpkit/time.hpp"

#include <charconv>
#include <cstdio>

#include "nwpkit/errors.hpp"

namespace nwpkit {

using namespace std::chrono;

namespace {

int parse_int(std::string_view text, std::size_t pos, std::size_t len,
              std::string_view whole) {
  int value = 0;
  if (pos + len > text.size()) {
    throw ArgumentError("malformed timestamp '" + std::string(whole) + "'");
  }
  const char* first = text.data() + pos;
  auto [ptr, ec] = std::from_chars(first, first + len, value);
  if (ec != std::errc{} || ptr != first + len) {
    throw ArgumentError("malformed timestamp '" + std::string(whole) + "'");
  }
  return value;
}

}  // namespace

std::string format_iso(TimePoint t) {
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const hh_mm_ss hms{t - day};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ",
                static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()),
                static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

TimePoint parse_iso(std::string_view text) {
  std::string_view s = text;
  if (!s.empty() && (s.back() == 'Z' || s.back() == 'z')) s.remove_suffix(1);
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') {
    throw ArgumentError("malformed timestamp '" + std::string(text) + "'");
  }
  const int y = parse_int(s, 0, 4, text);
  const int mo = parse_int(s, 5, 2, text);
  const int d = parse_int(s, 8, 2, text);
  int h = 0, mi = 0, se = 0;
  if (s.size() > 10) {
    if (s[10] != 'T' && s[10] != ' ') {
      throw ArgumentError("malformed timestamp '" + std::string(text) + "'");
    }
    h = parse_int(s, 11, 2, text);
    if (s.size() > 13) {
      if (s[13] != ':') throw ArgumentError("malformed timestamp '" + std::string(text) + "'");
      mi = parse_int(s, 14, 2, text);
    }
    if (s.size() > 16) {
      if (s[16] != ':' || s.size() != 19) {
        throw ArgumentError("malformed timestamp '" + std::string(text) + "'");
      }
      se = parse_int(s, 17, 2, text);
    }
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)},
                           day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || se > 59) {
    throw ArgumentError("invalid date in timestamp '" + std::string(text) + "'");
  }
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{se};
}

TimePoint make_time(int y, unsigned mo, unsigned d, int h, int mi, int s) {
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok()) throw ArgumentError("invalid calendar date");
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s};
}

int year_of(TimePoint t) {
  return static_cast<int>(year_month_day{floor<days>(t)}.year());
}

int hour_of_day(TimePoint t) {
  return static_cast<int>(seconds_of_day(t) / 3600);
}

std::int64_t seconds_of_day(TimePoint t) {
  return (t - floor<days>(t)).count();
}

int day_of_year(TimePoint t) {
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const sys_days jan1{ymd.year() / January / 1};
  return static_cast<int>((day - jan1).count()) + 1;
}

int noleap_day_of_year(TimePoint t) {
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const int doy = day_of_year(t);
  if (!ymd.year().is_leap()) return doy;
  // Jan 1 .. Feb 28 are 1..59, Feb 29 folds onto 59, the rest shift by one.
  return doy <= 59 ? doy : doy - 1;
}

}  // namespace nwpkit
