#include "tripmine/time.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>

#include "tripmine/error.hpp"

namespace tripmine {
namespace {

using namespace std::chrono;

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
  return ec == std::errc{} && p == s.data() + pos + len;
}

std::optional<Date> make_date(int y, int m, int d) {
  year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd};
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

constexpr std::array<const char*, 7> kDayNames{"Sun", "Mon", "Tue", "Wed", "Thu", "Fri", "Sat"};
constexpr std::array<const char*, 12> kMonthNames{"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                  "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

}  // namespace

std::optional<Instant> try_parse_instant(std::string_view s) {
  s = trim(s);
  int y, mo, d, h, mi, sec;
  if (!read_int(s, 0, 4, y) || s.size() < 19 || s[4] != '-' || !read_int(s, 5, 2, mo) ||
      s[7] != '-' || !read_int(s, 8, 2, d) || (s[10] != 'T' && s[10] != ' ') ||
      !read_int(s, 11, 2, h) || s[13] != ':' || !read_int(s, 14, 2, mi) || s[16] != ':' ||
      !read_int(s, 17, 2, sec)) {
    return std::nullopt;
  }
  if (h > 23 || mi > 59 || sec > 59) return std::nullopt;
  auto date = make_date(y, mo, d);
  if (!date) return std::nullopt;

  std::size_t pos = 19;
  int millis = 0;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      if (digits < 3) millis = millis * 10 + (s[pos] - '0');
      ++digits;
      ++pos;
    }
    if (digits == 0) return std::nullopt;
    for (std::size_t k = digits; k < 3; ++k) millis *= 10;
  }

  int offset_minutes = 0;
  if (pos >= s.size()) return std::nullopt;  // zone designator required
  if (s[pos] == 'Z' || s[pos] == 'z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    int sign = s[pos] == '-' ? -1 : 1;
    int oh, om;
    if (!read_int(s, pos + 1, 2, oh)) return std::nullopt;
    std::size_t mpos = pos + 3;
    if (mpos < s.size() && s[mpos] == ':') ++mpos;
    if (!read_int(s, mpos, 2, om) || oh > 23 || om > 59) return std::nullopt;
    offset_minutes = sign * (oh * 60 + om);
    pos = mpos + 2;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;

  Instant t = Instant{*date} + hours{h} + minutes{mi} + seconds{sec} + milliseconds{millis};
  return t - minutes{offset_minutes};
}

Instant parse_instant(std::string_view text) {
  auto t = try_parse_instant(text);
  if (!t) throw Error(ErrorCode::ParseError, "invalid ISO-8601 instant", std::string(text));
  return *t;
}

std::string format_instant(Instant t) {
  auto day = floor<days>(t);
  year_month_day ymd{day};
  hh_mm_ss<milliseconds> tod{t - day};
  char buf[40];
  int ms = static_cast<int>(tod.subseconds().count());
  if (ms == 0) {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                  static_cast<int>(tod.seconds().count()));
  } else {
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(tod.hours().count()),
                  static_cast<int>(tod.minutes().count()), static_cast<int>(tod.seconds().count()),
                  ms);
  }
  return buf;
}

std::optional<Date> try_parse_date(std::string_view s) {
  s = trim(s);
  int y, m, d;
  if (s.size() == 10 && s[4] == '-' && s[7] == '-' && read_int(s, 0, 4, y) &&
      read_int(s, 5, 2, m) && read_int(s, 8, 2, d)) {
    return make_date(y, m, d);
  }
  if (s.size() == 8 && read_int(s, 0, 4, y) && read_int(s, 4, 2, m) && read_int(s, 6, 2, d)) {
    return make_date(y, m, d);
  }
  return std::nullopt;
}

Date parse_date(std::string_view text) {
  auto d = try_parse_date(text);
  if (!d) throw Error(ErrorCode::ParseError, "invalid date", std::string(text));
  return *d;
}

std::string format_date(Date d) {
  year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_gtfs_date(Date d) {
  year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d%02u%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

Date date_of(Instant t) { return floor<days>(t); }

Instant midnight_of(Date d) { return Instant{d}; }

unsigned weekday_index(Date d) { return weekday{d}.c_encoding(); }

double seconds_between(Instant from, Instant to) {
  return duration<double>(to - from).count();
}

Instant add_seconds(Instant t, double s) {
  return t + milliseconds{static_cast<long long>(std::llround(s * 1000.0))};
}

std::optional<Instant> try_parse_rfc822(std::string_view s) {
  s = trim(s);
  // Optional "Day, " prefix.
  if (auto comma = s.find(','); comma != std::string_view::npos) {
    if (comma > 9) return std::nullopt;
    s = trim(s.substr(comma + 1));
  }
  // d[d] Mon yyyy hh:mm[:ss] zone
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string_view {
    while (pos < s.size() && s[pos] == ' ') ++pos;
    std::size_t start = pos;
    while (pos < s.size() && s[pos] != ' ') ++pos;
    return s.substr(start, pos - start);
  };
  std::string_view day_tok = next_token(), mon_tok = next_token(), year_tok = next_token(),
                   time_tok = next_token(), zone_tok = next_token();
  if (!next_token().empty()) return std::nullopt;

  int d, y;
  if (day_tok.empty() || day_tok.size() > 2 || !read_int(day_tok, 0, day_tok.size(), d)) {
    return std::nullopt;
  }
  int mon = 0;
  for (std::size_t i = 0; i < kMonthNames.size(); ++i) {
    if (mon_tok == kMonthNames[i]) mon = static_cast<int>(i) + 1;
  }
  if (mon == 0) return std::nullopt;
  if (year_tok.size() == 4) {
    if (!read_int(year_tok, 0, 4, y)) return std::nullopt;
  } else if (year_tok.size() == 2) {
    if (!read_int(year_tok, 0, 2, y)) return std::nullopt;
    y += y < 70 ? 2000 : 1900;
  } else {
    return std::nullopt;
  }
  int h, mi, sec = 0;
  if (time_tok.size() != 5 && time_tok.size() != 8) return std::nullopt;
  if (!read_int(time_tok, 0, 2, h) || time_tok[2] != ':' || !read_int(time_tok, 3, 2, mi)) {
    return std::nullopt;
  }
  if (time_tok.size() == 8 && (time_tok[5] != ':' || !read_int(time_tok, 6, 2, sec))) {
    return std::nullopt;
  }
  if (h > 23 || mi > 59 || sec > 60) return std::nullopt;

  int offset = 0;
  if (zone_tok == "GMT" || zone_tok == "UT" || zone_tok == "UTC" || zone_tok == "Z") {
    offset = 0;
  } else if (zone_tok.size() == 5 && (zone_tok[0] == '+' || zone_tok[0] == '-')) {
    int oh, om;
    if (!read_int(zone_tok, 1, 2, oh) || !read_int(zone_tok, 3, 2, om)) return std::nullopt;
    offset = (zone_tok[0] == '-' ? -1 : 1) * (oh * 60 + om);
  } else {
    return std::nullopt;
  }
  auto date = make_date(y, mon, d);
  if (!date) return std::nullopt;
  return Instant{*date} + hours{h} + minutes{mi} + seconds{sec} - minutes{offset};
}

std::string format_rfc822(Instant t) {
  auto day = floor<days>(t);
  year_month_day ymd{day};
  hh_mm_ss<milliseconds> tod{t - day};
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s, %02u %s %04d %02d:%02d:%02d +0000",
                kDayNames[weekday{day}.c_encoding()], static_cast<unsigned>(ymd.day()),
                kMonthNames[static_cast<unsigned>(ymd.month()) - 1], static_cast<int>(ymd.year()),
                static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()));
  return buf;
}

}  // namespace tripmine
