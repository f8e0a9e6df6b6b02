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
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "streamflow/tool.hpp"

namespace streamflow {

namespace detail {

// strftime-style subset used by csv_import: %Y %m %d %H %M %S %f (1-3 digit
// milliseconds) %z (Z or +-HH:MM or +-HHMM) %%; everything else is literal.
// Timestamps without an explicit offset are interpreted as UTC.
inline Timestamp parse_time_with_format(std::string_view text, std::string_view format) {
  std::int64_t year = 1970, month = 1, day = 1, hour = 0, minute = 0, second = 0, millis = 0;
  std::int64_t offset_minutes = 0;
  std::size_t t = 0;
  const auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::invalid_timestamp,
                why + " parsing '" + std::string(text) + "' with format '" + std::string(format) + "'");
  };
  auto read_fixed = [&](std::size_t n, std::int64_t& out) {
    out = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (t >= text.size() || text[t] < '0' || text[t] > '9') return false;
      out = out * 10 + (text[t++] - '0');
    }
    return true;
  };
  for (std::size_t f = 0; f < format.size(); ++f) {
    if (format[f] != '%') {
      if (t >= text.size() || text[t] != format[f]) fail("literal mismatch");
      ++t;
      continue;
    }
    if (++f >= format.size()) fail("dangling %");
    switch (format[f]) {
      case 'Y': if (!read_fixed(4, year)) fail("bad %Y"); break;
      case 'm': if (!read_fixed(2, month)) fail("bad %m"); break;
      case 'd': if (!read_fixed(2, day)) fail("bad %d"); break;
      case 'H': if (!read_fixed(2, hour)) fail("bad %H"); break;
      case 'M': if (!read_fixed(2, minute)) fail("bad %M"); break;
      case 'S': if (!read_fixed(2, second)) fail("bad %S"); break;
      case 'f': {
        std::size_t digits = 0;
        millis = 0;
        while (t < text.size() && text[t] >= '0' && text[t] <= '9') {
          if (digits < 3) millis = millis * 10 + (text[t] - '0');
          else if (text[t] != '0') fail("sub-millisecond precision");
          ++digits;
          ++t;
        }
        if (digits == 0) fail("bad %f");
        for (std::size_t k = digits; k < 3; ++k) millis *= 10;
        break;
      }
      case 'z': {
        if (t >= text.size()) fail("bad %z");
        if (text[t] == 'Z' || text[t] == 'z') {
          ++t;
        } else if (text[t] == '+' || text[t] == '-') {
          const bool negative = text[t++] == '-';
          std::int64_t oh = 0, om = 0;
          if (!read_fixed(2, oh)) fail("bad %z");
          if (t < text.size() && text[t] == ':') ++t;
          if (!read_fixed(2, om)) fail("bad %z");
          offset_minutes = (negative ? -1 : 1) * (oh * 60 + om);
        } else {
          fail("bad %z");
        }
        break;
      }
      case '%':
        if (t >= text.size() || text[t] != '%') fail("literal mismatch");
        ++t;
        break;
      default:
        fail(std::string("unsupported directive %") + format[f]);
    }
  }
  if (t != text.size()) fail("trailing characters");
  if (month < 1 || month > 12) fail("month out of range");
  if (day < 1 || day > days_in_month(static_cast<int>(year), static_cast<unsigned>(month)))
    fail("day out of range");
  if (hour > 23 || minute > 59 || second > 59) fail("time out of range");
  const std::int64_t days = days_from_civil(static_cast<int>(year), static_cast<unsigned>(month),
                                            static_cast<unsigned>(day));
  return Timestamp::from_unix_millis(days * 86'400'000 + hour * 3'600'000 + minute * 60'000 +
                                     second * 1000 + millis - offset_minutes * 60'000);
}

// RFC 4180 records: quoted fields may contain commas, doubled quotes and
// line breaks. Returns one vector of cells per record.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t i = 0;
  auto end_field = [&]() {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&]() {
    end_field();
    records.push_back(std::move(record));
    record.clear();
  };
  while (i < text.size()) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          i += 2;
        } else {
          quoted = false;
          ++i;
        }
      } else {
        field += c;
        ++i;
      }
    } else if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
      ++i;
    } else if (c == ',') {
      end_field();
      ++i;
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      end_record();
      i += 2;
    } else if (c == '\n') {
      end_record();
      ++i;
    } else {
      field += c;
      field_started = true;
      ++i;
    }
  }
  if (quoted)
    throw ParseFailureError("unterminated quoted field", records.size() + 1);
  if (field_started || !record.empty()) end_record();
  return records;
}

// Typed view of a CSV cell: integer if it parses as one, else float, else
// the raw string. Empty cells are represented as null and skipped by the
// list/map emitters.
inline Value parse_cell(const std::string& cell) {
  if (cell.empty()) return nullptr;
  {
    std::int64_t n = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), n);
    if (ec == std::errc() && ptr == cell.data() + cell.size()) return n;
  }
  {
    double d = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), d);
    if (ec == std::errc() && ptr == cell.data() + cell.size() && std::isfinite(d)) return d;
  }
  return cell;
}

// Substitutes "{key}" placeholders from the plate assignment.
inline std::string substitute_plate(const std::string& text, const MetaData& plate) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '{') {
      const auto close = text.find('}', i);
      if (close != std::string::npos) {
        const std::string key = text.substr(i + 1, close - i - 1);
        if (auto value = plate.find(key)) {
          out += *value;
          i = close + 1;
          continue;
        }
      }
    }
    out += text[i++];
  }
  return out;
}

inline std::span<const StreamInstance> window_of(std::span<const StreamInstance> source,
                                                 const TimeInterval& window) {
  auto lo = std::upper_bound(source.begin(), source.end(), window.start(),
                             [](Timestamp t, const StreamInstance& s) { return t < s.timestamp; });
  auto hi = std::upper_bound(source.begin(), source.end(), window.end(),
                             [](Timestamp t, const StreamInstance& s) { return t < s.timestamp; });
  return source.subspan(lo - source.begin(), hi - lo);
}

// Epoch-aligned stride ticks t with interval.start < t <= interval.end.
inline std::vector<Timestamp> stride_ticks(const TimeInterval& interval, Duration stride) {
  std::vector<Timestamp> ticks;
  const std::int64_t step = stride.count_milliseconds();
  std::int64_t t = (floordiv(interval.start().unix_millis(), step) + 1) * step;
  for (; t <= interval.end().unix_millis(); t += step)
    ticks.push_back(Timestamp::from_unix_millis(t));
  return ticks;
}

}  // namespace detail

// Imports rows of an RFC 4180 CSV file as stream instances. The row's time
// comes from `time_column` parsed with the strftime-style `time_format`;
// the remaining cells become either an array in column order (emit="list")
// or an object keyed by column (emit="map"). Empty cells are omitted.
// The path may contain "{key}" placeholders filled from the plate assignment.
class CsvImportTool : public Tool {
 public:
  ToolDescriptor descriptor() const override {
    return ToolDescriptor{
        "csv_import",
        SemVer{1, 0, 0},
        {{"path", {ValueKind::string, true, {}}},
         {"time_column", {ValueKind::string, true, {}}},
         {"time_format", {ValueKind::string, true, {}}},
         {"emit", {ValueKind::string, false, Value("list")}}},
        ToolArity{0, false}};
  }

  void validate(const Value& params) const override {
    const auto emit = params.at("emit").get<std::string>();
    if (emit != "list" && emit != "map")
      throw Error(ErrorCode::parameter_invalid, "csv_import: emit must be 'list' or 'map'");
  }

  std::vector<StreamInstance> execute(const ToolContext& ctx) const override {
    const auto path = detail::substitute_plate(ctx.parameters.at("path").get<std::string>(), ctx.plate);
    const auto time_column = ctx.parameters.at("time_column").get<std::string>();
    const auto time_format = ctx.parameters.at("time_format").get<std::string>();
    const bool as_map = ctx.parameters.at("emit").get<std::string>() == "map";

    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::external_resource_unavailable, "cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    const auto records = detail::parse_csv(buffer.str());
    if (records.empty()) throw ParseFailureError(path + ": missing header", 1);

    const auto& header = records.front();
    const auto time_it = std::find(header.begin(), header.end(), time_column);
    if (time_it == header.end())
      throw ParseFailureError(path + ": no column '" + time_column + "'", 1);
    const std::size_t time_index = time_it - header.begin();

    std::vector<std::pair<StreamInstance, std::size_t>> rows;  // instance + record number
    for (std::size_t r = 1; r < records.size(); ++r) {
      const auto& row = records[r];
      if (row.size() != header.size())
        throw ParseFailureError(path + ": expected " + std::to_string(header.size()) +
                                    " fields, got " + std::to_string(row.size()),
                                r + 1);
      Timestamp ts;
      try {
        ts = detail::parse_time_with_format(row[time_index], time_format);
      } catch (const Error& e) {
        throw ParseFailureError(path + ": " + e.what(), r + 1);
      }
      if (!ctx.interval.contains(ts)) continue;
      Value value = as_map ? Value(Value::object()) : Value(Value::array());
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c == time_index) continue;
        Value cell = detail::parse_cell(row[c]);
        if (cell.is_null()) continue;
        if (as_map) value[header[c]] = std::move(cell);
        else value.push_back(std::move(cell));
      }
      rows.emplace_back(StreamInstance{ts, std::move(value)}, r + 1);
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const auto& a, const auto& b) { return a.first.timestamp < b.first.timestamp; });
    std::vector<StreamInstance> out;
    out.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i > 0 && rows[i].first.timestamp == rows[i - 1].first.timestamp)
        throw ParseFailureError(
            path + ": duplicate timestamp " + format_timestamp(rows[i].first.timestamp),
            rows[i].second);
      out.push_back(std::move(rows[i].first));
    }
    return out;
  }
};

// Emits one tick per epoch-aligned stride multiple inside the interval; the
// document is the tick's own RFC 3339 text.
class ClockTool : public Tool {
 public:
  ToolDescriptor descriptor() const override {
    return ToolDescriptor{"clock",
                          SemVer{1, 0, 0},
                          {{"stride", {ValueKind::duration, true, {}}}},
                          ToolArity{0, false}};
  }

  void validate(const Value& params) const override {
    if (duration_param(params, "stride") <= Duration::zero())
      throw Error(ErrorCode::parameter_invalid, "clock: stride must be positive");
  }

  std::vector<StreamInstance> execute(const ToolContext& ctx) const override {
    std::vector<StreamInstance> out;
    for (Timestamp t : detail::stride_ticks(ctx.interval, duration_param(ctx.parameters, "stride")))
      out.push_back(StreamInstance{t, Value(format_timestamp(t))});
    return out;
  }
};

// Per-document sum of a numeric array; the empty sum is 0.0.
class SumListTool : public Tool {
 public:
  ToolDescriptor descriptor() const override {
    return ToolDescriptor{"sum_list", SemVer{1, 0, 0}, {}, ToolArity{1, false}};
  }

  std::vector<StreamInstance> execute(const ToolContext& ctx) const override {
    std::vector<StreamInstance> out;
    for (const auto& instance : ctx.sources[0]) {
      if (!ctx.interval.contains(instance.timestamp)) continue;
      if (!instance.value.is_array())
        throw Error(ErrorCode::malformed_document,
                    "sum_list: value at " + format_timestamp(instance.timestamp) + " is not an array");
      double sum = 0.0;
      for (const auto& element : instance.value) {
        if (!element.is_number())
          throw Error(ErrorCode::malformed_document,
                      "sum_list: non-numeric element at " + format_timestamp(instance.timestamp));
        sum += element.get<double>();
      }
      out.push_back(StreamInstance{instance.timestamp, Value(sum)});
    }
    return out;
  }
};

// Emits window-boundary documents {"start", "end"} at each stride tick.
class SlidingWindowTool : public Tool {
 public:
  ToolDescriptor descriptor() const override {
    return ToolDescriptor{"sliding_window",
                          SemVer{1, 0, 0},
                          {{"width", {ValueKind::duration, true, {}}},
                           {"stride", {ValueKind::duration, true, {}}}},
                          ToolArity{0, false}};
  }

  void validate(const Value& params) const override {
    if (duration_param(params, "width") <= Duration::zero() ||
        duration_param(params, "stride") <= Duration::zero())
      throw Error(ErrorCode::parameter_invalid, "sliding_window: width and stride must be positive");
  }

  std::vector<StreamInstance> execute(const ToolContext& ctx) const override {
    const Duration width = duration_param(ctx.parameters, "width");
    std::vector<StreamInstance> out;
    for (Timestamp t : detail::stride_ticks(ctx.interval, duration_param(ctx.parameters, "stride"))) {
      out.push_back(StreamInstance{
          t, Value{{"end", format_timestamp(t)}, {"start", format_timestamp(t - width)}}});
    }
    return out;
  }
};

// Windowed aggregate over one numeric source: at each stride tick t the
// window (t-width, t] is reduced with the chosen aggregate. The stride
// defaults to the width. A window holding no documents at all emits null, so
// downstream consumers can tell "no data" from "not computed"; null-valued
// documents inside a window are skipped by the numeric aggregates, while
// count counts every document.
class SlidingApplyTool : public Tool {
 public:
  ToolDescriptor descriptor() const override {
    return ToolDescriptor{"sliding_apply",
                          SemVer{1, 0, 0},
                          {{"width", {ValueKind::duration, true, {}}},
                           {"aggregate", {ValueKind::string, true, {}}},
                           {"stride", {ValueKind::duration, false, {}}}},
                          ToolArity{1, false}};
  }

  void validate(const Value& params) const override {
    const auto aggregate = params.at("aggregate").get<std::string>();
    if (aggregate != "mean" && aggregate != "max" && aggregate != "min" && aggregate != "count" &&
        aggregate != "sum")
      throw Error(ErrorCode::parameter_invalid,
                  "sliding_apply: aggregate must be one of mean|max|min|count|sum");
    if (duration_param(params, "width") <= Duration::zero())
      throw Error(ErrorCode::parameter_invalid, "sliding_apply: width must be positive");
    if (params.contains("stride") && duration_param(params, "stride") <= Duration::zero())
      throw Error(ErrorCode::parameter_invalid, "sliding_apply: stride must be positive");
  }

  Duration lookback(const Value& params) const override { return duration_param(params, "width"); }

  std::vector<StreamInstance> execute(const ToolContext& ctx) const override {
    const Duration width = duration_param(ctx.parameters, "width");
    const Duration stride =
        ctx.parameters.contains("stride") ? duration_param(ctx.parameters, "stride") : width;
    const auto aggregate = ctx.parameters.at("aggregate").get<std::string>();

    std::vector<StreamInstance> out;
    for (Timestamp t : detail::stride_ticks(ctx.interval, stride)) {
      const auto window = detail::window_of(ctx.sources[0], TimeInterval(t - width, t));
      out.push_back(StreamInstance{t, reduce(window, aggregate, t)});
    }
    return out;
  }

 private:
  static Value reduce(std::span<const StreamInstance> window, const std::string& aggregate,
                      Timestamp tick) {
    if (window.empty()) return nullptr;
    if (aggregate == "count") return static_cast<std::int64_t>(window.size());
    double sum = 0.0, mx = 0.0, mn = 0.0;
    std::size_t n = 0;
    for (const auto& instance : window) {
      if (instance.value.is_null()) continue;
      if (!instance.value.is_number())
        throw Error(ErrorCode::malformed_document,
                    "sliding_apply: non-numeric document in window ending " + format_timestamp(tick));
      const double x = instance.value.get<double>();
      if (n == 0) mx = mn = x;
      sum += x;
      mx = std::max(mx, x);
      mn = std::min(mn, x);
      ++n;
    }
    if (n == 0) return nullptr;
    if (aggregate == "mean") return sum / static_cast<double>(n);
    if (aggregate == "max") return mx;
    if (aggregate == "min") return mn;
    return sum;
  }
};

// Projects one field out of each object document; absent fields project to
// null.
class ComponentTool : public Tool {
 public:
  ToolDescriptor descriptor() const override {
    return ToolDescriptor{"component",
                          SemVer{1, 0, 0},
                          {{"field", {ValueKind::string, true, {}}}},
                          ToolArity{1, false}};
  }

  std::vector<StreamInstance> execute(const ToolContext& ctx) const override {
    const auto field = ctx.parameters.at("field").get<std::string>();
    std::vector<StreamInstance> out;
    for (const auto& instance : ctx.sources[0]) {
      if (!ctx.interval.contains(instance.timestamp)) continue;
      if (!instance.value.is_object())
        throw Error(ErrorCode::malformed_document,
                    "component: value at " + format_timestamp(instance.timestamp) + " is not an object");
      out.push_back(StreamInstance{
          instance.timestamp,
          instance.value.contains(field) ? instance.value.at(field) : Value(nullptr)});
    }
    return out;
  }
};

// Partitions object documents by the string at `key_field`; each distinct
// identifier becomes one output stream on the sub-plate. The optional
// `output_key` parameter documents the sub-plate meta-data key and must
// match the one the workflow supplies.
class SplitterTool : public Tool {
 public:
  ToolDescriptor descriptor() const override {
    return ToolDescriptor{"splitter",
                          SemVer{1, 0, 0},
                          {{"key_field", {ValueKind::string, true, {}}},
                           {"output_key", {ValueKind::string, false, {}}}},
                          ToolArity{1, true}};
  }

  std::map<std::string, std::vector<StreamInstance>> execute_multi(
      const ToolContext& ctx, const std::string& output_key) const override {
    const auto key_field = ctx.parameters.at("key_field").get<std::string>();
    if (ctx.parameters.contains("output_key") &&
        ctx.parameters.at("output_key").get<std::string>() != output_key)
      throw Error(ErrorCode::parameter_invalid,
                  "splitter: output_key parameter disagrees with the workflow's sub-plate key '" +
                      output_key + "'");
    std::map<std::string, std::vector<StreamInstance>> out;
    for (const auto& instance : ctx.sources[0]) {
      if (!ctx.interval.contains(instance.timestamp)) continue;
      if (!instance.value.is_object())
        throw Error(ErrorCode::malformed_document,
                    "splitter: value at " + format_timestamp(instance.timestamp) + " is not an object");
      if (!instance.value.contains(key_field))
        throw Error(ErrorCode::split_key_missing,
                    "splitter: document at " + format_timestamp(instance.timestamp) +
                        " lacks field '" + key_field + "'");
      const Value& key = instance.value.at(key_field);
      if (!key.is_string())
        throw Error(ErrorCode::malformed_document,
                    "splitter: field '" + key_field + "' at " +
                        format_timestamp(instance.timestamp) + " is not a string");
      out[key.get<std::string>()].push_back(instance);
    }
    return out;
  }
};

inline void register_builtin_tools(ToolRegistry& registry) {
  registry.register_tool(std::make_shared<CsvImportTool>());
  registry.register_tool(std::make_shared<ClockTool>());
  registry.register_tool(std::make_shared<SumListTool>());
  registry.register_tool(std::make_shared<SlidingWindowTool>());
  registry.register_tool(std::make_shared<SlidingApplyTool>());
  registry.register_tool(std::make_shared<ComponentTool>());
  registry.register_tool(std::make_shared<SplitterTool>());
}

inline ToolRegistry builtin_tool_registry() {
  ToolRegistry registry;
  register_builtin_tools(registry);
  return registry;
}

}  // namespace streamflow
