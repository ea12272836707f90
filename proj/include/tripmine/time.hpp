#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace tripmine {

/// UTC instant with millisecond precision.
using Instant = std::chrono::sys_time<std::chrono::milliseconds>;
/// Calendar date (UTC).
using Date = std::chrono::sys_days;

/// Parses "YYYY-MM-DDTHH:MM:SS[.fff](Z|+HH:MM|-HH:MM)".
std::optional<Instant> try_parse_instant(std::string_view text);
/// Throwing variant; ErrorCode::ParseError on bad input.
Instant parse_instant(std::string_view text);
/// Renders ISO-8601 UTC; fractional part only when non-zero.
std::string format_instant(Instant t);

/// Accepts "YYYY-MM-DD" and the GTFS form "YYYYMMDD".
std::optional<Date> try_parse_date(std::string_view text);
Date parse_date(std::string_view text);
std::string format_date(Date d);
std::string format_gtfs_date(Date d);

Date date_of(Instant t);
Instant midnight_of(Date d);
/// 0 = Sunday ... 6 = Saturday.
unsigned weekday_index(Date d);
double seconds_between(Instant from, Instant to);
Instant add_seconds(Instant t, double seconds);

/// RFC 822 / RSS pubDate, e.g. "Sun, 17 Dec 2017 15:00:00 +0100" or "... GMT".
std::optional<Instant> try_parse_rfc822(std::string_view text);
std::string format_rfc822(Instant t);

}  // namespace tripmine
