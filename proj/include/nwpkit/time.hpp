#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <string_view>

namespace nwpkit {

using TimePoint = std::chrono::sys_seconds;
using std::chrono::hours;
using std::chrono::minutes;
using std::chrono::seconds;

/// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_iso(TimePoint t);

/// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH", "YYYY-MM-DDTHH:MM" and
/// "YYYY-MM-DDTHH:MM:SS", each with an optional trailing 'Z'. Always UTC.
TimePoint parse_iso(std::string_view text);

TimePoint make_time(int year, unsigned month, unsigned day, int hour = 0,
                    int minute = 0, int second = 0);

int year_of(TimePoint t);
int hour_of_day(TimePoint t);

/// Calendar day of year, 1..366.
int day_of_year(TimePoint t);

/// Day of year in a 365-day calendar: Feb 29 shares Feb 28's bin (59) and
/// later leap-year days shift back by one, so the result is always 1..365.
int noleap_day_of_year(TimePoint t);

/// Seconds elapsed since 00:00 UTC of the same day.
std::int64_t seconds_of_day(TimePoint t);

}  // namespace nwpkit
