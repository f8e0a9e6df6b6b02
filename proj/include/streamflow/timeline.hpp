// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "streamflow/errors.hpp"

namespace streamflow {

// Length of time with millisecond resolution. Negative durations are allowed
// in arithmetic but most callers treat them as invalid input.
class Duration {
 public:
  constexpr Duration() = default;

  static constexpr Duration milliseconds(std::int64_t ms) { return Duration(ms); }
  static constexpr Duration seconds(std::int64_t s) { return Duration(s * 1000); }
  static constexpr Duration minutes(std::int64_t m) { return Duration(m * 60'000); }
  static constexpr Duration hours(std::int64_t h) { return Duration(h * 3'600'000); }
  static constexpr Duration zero() { return Duration(0); }

  constexpr std::int64_t count_milliseconds() const { return ms_; }

  constexpr auto operator<=>(const Duration&) const = default;
  constexpr Duration operator+(Duration other) const { return Duration(ms_ + other.ms_); }
  constexpr Duration operator-(Duration other) const { return Duration(ms_ - other.ms_); }
  constexpr Duration operator*(std::int64_t k) const { return Duration(ms_ * k); }

 private:
  explicit constexpr Duration(std::int64_t ms) : ms_(ms) {}
  std::int64_t ms_ = 0;
};

// UTC instant with millisecond resolution. Totally ordered; equality is
// millisecond-exact. Stored as milliseconds since the Unix epoch, which
// covers years 1970-9999 (and far beyond) losslessly.
class Timestamp {
 public:
  constexpr Timestamp() = default;

  static constexpr Timestamp epoch() { return Timestamp(0); }
  static constexpr Timestamp from_unix_millis(std::int64_t ms) { return Timestamp(ms); }

  constexpr std::int64_t unix_millis() const { return ms_; }

  constexpr auto operator<=>(const Timestamp&) const = default;

  constexpr Timestamp operator+(Duration d) const { return Timestamp(ms_ + d.count_milliseconds()); }
  constexpr Timestamp operator-(Duration d) const { return Timestamp(ms_ - d.count_milliseconds()); }
  constexpr Duration operator-(Timestamp other) const {
    return Duration::milliseconds(ms_ - other.ms_);
  }

 private:
  explicit constexpr Timestamp(std::int64_t ms) : ms_(ms) {}
  std::int64_t ms_ = 0;
};

namespace detail {

// Days-to-civil conversions using the usual proleptic Gregorian algorithms.
struct CivilDate {
  int year;
  unsigned month;
  unsigned day;
};

constexpr std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

constexpr CivilDate civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);
  return CivilDate{static_cast<int>(y + (m <= 2)), m, d};
}

constexpr bool is_leap_year(int y) { return y % 4 == 0 && (y % 100 != 0 || y % 400 == 0); }

constexpr unsigned days_in_month(int y, unsigned m) {
  constexpr unsigned lengths[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap_year(y)) return 29;
  return lengths[m - 1];
}

inline std::int64_t floordiv(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

inline std::int64_t floormod(std::int64_t a, std::int64_t b) { return a - floordiv(a, b) * b; }

}  // namespace detail

// Formats as RFC 3339 with explicit UTC offset and fixed millisecond
// precision, e.g. "2025-06-01T00:05:00.000Z". This exact form is the
// canonical text representation used in serialized documents.
inline std::string format_timestamp(Timestamp t) {
  const std::int64_t ms = t.unix_millis();
  const std::int64_t days = detail::floordiv(ms, 86'400'000);
  const std::int64_t rem = detail::floormod(ms, 86'400'000);
  const auto date = detail::civil_from_days(days);
  const int hh = static_cast<int>(rem / 3'600'000);
  const int mm = static_cast<int>(rem / 60'000 % 60);
  const int ss = static_cast<int>(rem / 1000 % 60);
  const int frac = static_cast<int>(rem % 1000);
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", date.year, date.month,
                date.day, hh, mm, ss, frac);
  return buf;
}

// Parses RFC 3339 timestamps. The UTC offset is mandatory ("Z" or "+HH:MM").
// Fractional seconds finer than a millisecond are rejected rather than
// truncated, unless the extra digits are all zero.
inline Timestamp parse_timestamp(std::string_view text) {
  const auto fail = [&](const std::string& why) -> Timestamp {
    throw Error(ErrorCode::invalid_timestamp, why + ": '" + std::string(text) + "'");
  };
  std::size_t i = 0;
  auto read_digits = [&](std::size_t n, std::int64_t& out) {
    out = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (i >= text.size() || text[i] < '0' || text[i] > '9') return false;
      out = out * 10 + (text[i++] - '0');
    }
    return true;
  };
  auto expect = [&](char c) {
    if (i >= text.size() || text[i] != c) return false;
    ++i;
    return true;
  };

  std::int64_t year, month, day, hour, minute, second;
  if (!read_digits(4, year) || !expect('-') || !read_digits(2, month) || !expect('-') ||
      !read_digits(2, day))
    return fail("malformed date");
  if (i >= text.size() || (text[i] != 'T' && text[i] != 't' && text[i] != ' '))
    return fail("missing time separator");
  ++i;
  if (!read_digits(2, hour) || !expect(':') || !read_digits(2, minute) || !expect(':') ||
      !read_digits(2, second))
    return fail("malformed time");
  if (month < 1 || month > 12) return fail("month out of range");
  if (day < 1 || day > detail::days_in_month(static_cast<int>(year), static_cast<unsigned>(month)))
    return fail("day out of range");
  if (hour > 23 || minute > 59 || second > 60) return fail("time out of range");
  if (second == 60) second = 59;  // leap seconds collapse onto :59

  std::int64_t millis = 0;
  if (i < text.size() && text[i] == '.') {
    ++i;
    std::size_t digits = 0;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
      if (digits < 3) {
        millis = millis * 10 + (text[i] - '0');
      } else if (text[i] != '0') {
        return fail("sub-millisecond precision");
      }
      ++digits;
      ++i;
    }
    if (digits == 0) return fail("empty fraction");
    for (std::size_t k = digits; k < 3; ++k) millis *= 10;
  }

  std::int64_t offset_minutes = 0;
  if (i >= text.size()) return fail("missing UTC offset");
  if (text[i] == 'Z' || text[i] == 'z') {
    ++i;
  } else if (text[i] == '+' || text[i] == '-') {
    const bool negative = text[i] == '-';
    ++i;
    std::int64_t oh, om;
    if (!read_digits(2, oh) || !expect(':') || !read_digits(2, om)) return fail("malformed offset");
    if (oh > 23 || om > 59) return fail("offset out of range");
    offset_minutes = (negative ? -1 : 1) * (oh * 60 + om);
  } else {
    return fail("missing UTC offset");
  }
  if (i != text.size()) return fail("trailing characters");

  const std::int64_t days =
      detail::days_from_civil(static_cast<int>(year), static_cast<unsigned>(month),
                              static_cast<unsigned>(day));
  const std::int64_t ms = days * 86'400'000 + hour * 3'600'000 + minute * 60'000 + second * 1000 +
                          millis - offset_minutes * 60'000;
  return Timestamp::from_unix_millis(ms);
}

// Duration literals accepted in configuration: a bare integer is taken as
// milliseconds; a string is an integer plus unit suffix (ms, s, m, h, d).
inline Duration parse_duration(std::string_view text) {
  const auto fail = [&]() -> Duration {
    throw Error(ErrorCode::parameter_invalid, "bad duration: '" + std::string(text) + "'");
  };
  std::size_t i = 0;
  bool negative = false;
  if (i < text.size() && (text[i] == '-' || text[i] == '+')) negative = text[i++] == '-';
  std::int64_t magnitude = 0;
  std::size_t digits = 0;
  while (i < text.size() && text[i] >= '0' && text[i] <= '9') {
    magnitude = magnitude * 10 + (text[i++] - '0');
    ++digits;
  }
  if (digits == 0) return fail();
  std::string_view unit = text.substr(i);
  std::int64_t scale;
  if (unit.empty() || unit == "ms") scale = 1;
  else if (unit == "s") scale = 1000;
  else if (unit == "m") scale = 60'000;
  else if (unit == "h") scale = 3'600'000;
  else if (unit == "d") scale = 86'400'000;
  else return fail();
  return Duration::milliseconds((negative ? -1 : 1) * magnitude * scale);
}

inline std::string format_duration(Duration d) {
  std::int64_t ms = d.count_milliseconds();
  if (ms % 86'400'000 == 0 && ms != 0) return std::to_string(ms / 86'400'000) + "d";
  if (ms % 3'600'000 == 0 && ms != 0) return std::to_string(ms / 3'600'000) + "h";
  if (ms % 60'000 == 0 && ms != 0) return std::to_string(ms / 60'000) + "m";
  if (ms % 1000 == 0 && ms != 0) return std::to_string(ms / 1000) + "s";
  return std::to_string(ms) + "ms";
}

// Half-open time range (start, end]: a point t belongs iff start < t <= end.
// Empty ranges are unrepresentable; construction requires start < end.
class TimeInterval {
 public:
  TimeInterval(Timestamp start, Timestamp end) : start_(start), end_(end) {
    if (!(start < end))
      throw Error(ErrorCode::invalid_interval,
                  "interval start must precede end: (" + format_timestamp(start) + ", " +
                      format_timestamp(end) + "]");
  }

  Timestamp start() const { return start_; }
  Timestamp end() const { return end_; }
  Duration length() const { return end_ - start_; }

  bool contains(Timestamp t) const { return start_ < t && t <= end_; }
  bool contains(const TimeInterval& other) const {
    return start_ <= other.start_ && other.end_ <= end_;
  }
  bool overlaps(const TimeInterval& other) const {
    return start_ < other.end_ && other.start_ < end_;
  }

  bool operator==(const TimeInterval&) const = default;

 private:
  Timestamp start_;
  Timestamp end_;
};

inline std::string to_string(const TimeInterval& iv) {
  return "(" + format_timestamp(iv.start()) + ", " + format_timestamp(iv.end()) + "]";
}

// Canonical set of disjoint, non-adjacent, ascending half-open intervals.
// Any two sets covering the same points are structurally identical, which
// makes the type usable as a ledger currency: equality means equal coverage.
class TimeIntervalSet {
 public:
  TimeIntervalSet() = default;
  explicit TimeIntervalSet(TimeInterval interval) : intervals_{interval} {}

  static TimeIntervalSet from_intervals(std::vector<TimeInterval> intervals) {
    TimeIntervalSet set;
    if (intervals.empty()) return set;
    std::sort(intervals.begin(), intervals.end(),
              [](const TimeInterval& a, const TimeInterval& b) { return a.start() < b.start(); });
    set.intervals_.reserve(intervals.size());
    Timestamp start = intervals.front().start();
    Timestamp end = intervals.front().end();
    for (std::size_t i = 1; i < intervals.size(); ++i) {
      if (intervals[i].start() <= end) {
        end = std::max(end, intervals[i].end());
      } else {
        set.intervals_.emplace_back(start, end);
        start = intervals[i].start();
        end = intervals[i].end();
      }
    }
    set.intervals_.emplace_back(start, end);
    return set;
  }

  const std::vector<TimeInterval>& intervals() const { return intervals_; }
  bool empty() const { return intervals_.empty(); }
  std::size_t size() const { return intervals_.size(); }

  // Earliest covered point is span().start + 1ms; latest is span().end.
  Timestamp low() const { return intervals_.front().start(); }
  Timestamp high() const { return intervals_.back().end(); }

  Duration total_length() const {
    Duration total = Duration::zero();
    for (const auto& iv : intervals_) total = total + iv.length();
    return total;
  }

  bool contains(Timestamp t) const {
    auto it = std::upper_bound(
        intervals_.begin(), intervals_.end(), t,
        [](Timestamp value, const TimeInterval& iv) { return value <= iv.start(); });
    if (it == intervals_.begin()) return false;
    return std::prev(it)->contains(t);
  }

  // True iff every point of query is covered. A canonical set has real gaps
  // between members, so coverage means a single member contains the query.
  bool contains(const TimeInterval& query) const {
    auto it = std::upper_bound(
        intervals_.begin(), intervals_.end(), query.start(),
        [](Timestamp value, const TimeInterval& iv) { return value < iv.start(); });
    if (it == intervals_.begin()) return false;
    return std::prev(it)->contains(query);
  }

  bool operator==(const TimeIntervalSet&) const = default;

 private:
  std::vector<TimeInterval> intervals_;
};

// Canonical set covering exactly the points in a or b.
inline TimeIntervalSet set_union(const TimeIntervalSet& a, const TimeIntervalSet& b) {
  std::vector<TimeInterval> merged;
  merged.reserve(a.size() + b.size());
  merged.insert(merged.end(), a.intervals().begin(), a.intervals().end());
  merged.insert(merged.end(), b.intervals().begin(), b.intervals().end());
  return TimeIntervalSet::from_intervals(std::move(merged));
}

// Canonical set covering exactly the points in a and not in b.
inline TimeIntervalSet set_difference(const TimeIntervalSet& a, const TimeIntervalSet& b) {
  std::vector<TimeInterval> out;
  auto sub = b.intervals().begin();
  const auto sub_end = b.intervals().end();
  for (const auto& iv : a.intervals()) {
    Timestamp cursor = iv.start();
    while (sub != sub_end && sub->end() <= cursor) ++sub;
    auto probe = sub;
    while (probe != sub_end && probe->start() < iv.end()) {
      if (cursor < probe->start()) out.emplace_back(cursor, probe->start());
      cursor = std::max(cursor, probe->end());
      ++probe;
    }
    if (cursor < iv.end()) out.emplace_back(cursor, iv.end());
  }
  return TimeIntervalSet::from_intervals(std::move(out));
}

// Canonical set covering exactly the points in both a and b.
inline TimeIntervalSet set_intersection(const TimeIntervalSet& a, const TimeIntervalSet& b) {
  std::vector<TimeInterval> out;
  auto ia = a.intervals().begin();
  auto ib = b.intervals().begin();
  while (ia != a.intervals().end() && ib != b.intervals().end()) {
    const Timestamp lo = std::max(ia->start(), ib->start());
    const Timestamp hi = std::min(ia->end(), ib->end());
    if (lo < hi) out.emplace_back(lo, hi);
    if (ia->end() < ib->end()) ++ia;
    else ++ib;
  }
  return TimeIntervalSet::from_intervals(std::move(out));
}

inline std::string to_string(const TimeIntervalSet& set) {
  std::string out = "{";
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (i) out += ", ";
    out += to_string(set.intervals()[i]);
  }
  return out + "}";
}

inline std::ostream& operator<<(std::ostream& os, const TimeInterval& iv) {
  return os << to_string(iv);
}

inline std::ostream& operator<<(std::ostream& os, const TimeIntervalSet& set) {
  return os << to_string(set);
}

}  // namespace streamflow
