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
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "streamflow/errors.hpp"
#include "streamflow/timeline.hpp"
#include "streamflow/value.hpp"

namespace streamflow {

// Sorted, unique key/value string pairs. Values are strings only so that
// plate identifiers stay ordered and hashable.
class MetaData {
 public:
  MetaData() = default;

  static MetaData from_pairs(std::vector<std::pair<std::string, std::string>> pairs) {
    std::sort(pairs.begin(), pairs.end());
    for (std::size_t i = 1; i < pairs.size(); ++i) {
      if (pairs[i].first == pairs[i - 1].first)
        throw Error(ErrorCode::duplicate_meta_key, "duplicate key '" + pairs[i].first + "'");
    }
    MetaData md;
    md.pairs_ = std::move(pairs);
    return md;
  }

  const std::vector<std::pair<std::string, std::string>>& pairs() const { return pairs_; }
  bool empty() const { return pairs_.empty(); }
  std::size_t size() const { return pairs_.size(); }

  std::optional<std::string> find(std::string_view key) const {
    for (const auto& [k, v] : pairs_)
      if (k == key) return v;
    return std::nullopt;
  }

  // "(k1=v1)(k2=v2)" with keys in sorted order; empty meta-data yields "".
  std::string canonical_suffix() const {
    std::string out;
    for (const auto& [k, v] : pairs_) {
      out += '(';
      out += k;
      out += '=';
      out += v;
      out += ')';
    }
    return out;
  }

  MetaData merged_with(std::string key, std::string value) const {
    auto pairs = pairs_;
    pairs.emplace_back(std::move(key), std::move(value));
    return from_pairs(std::move(pairs));
  }

  // True iff every pair of `other` appears here.
  bool includes(const MetaData& other) const {
    return std::includes(pairs_.begin(), pairs_.end(), other.pairs_.begin(), other.pairs_.end());
  }

  // Restriction to the given keys (missing keys are skipped).
  MetaData project(const std::vector<std::string>& keys) const {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [k, v] : pairs_)
      if (std::find(keys.begin(), keys.end(), k) != keys.end()) out.emplace_back(k, v);
    return from_pairs(std::move(out));
  }

  auto operator<=>(const MetaData&) const = default;

 private:
  std::vector<std::pair<std::string, std::string>> pairs_;
};

// Global identity of a stream: name plus meta-data. Equality, ordering and
// hashing all derive from the canonical string form.
class StreamId {
 public:
  StreamId() = default;
  StreamId(std::string name, MetaData meta) : name_(std::move(name)), meta_(std::move(meta)) {}

  const std::string& name() const { return name_; }
  const MetaData& meta_data() const { return meta_; }

  std::string canonical() const { return name_ + meta_.canonical_suffix(); }

  auto operator<=>(const StreamId&) const = default;

 private:
  std::string name_;
  MetaData meta_;
};

inline bool is_valid_stream_name(std::string_view name) {
  if (name.empty()) return false;
  for (char c : name)
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_')) return false;
  return true;
}

inline StreamId make_stream_id(std::string name,
                               std::vector<std::pair<std::string, std::string>> meta = {}) {
  if (!is_valid_stream_name(name))
    throw Error(ErrorCode::invalid_name,
                "stream name must match [a-z0-9_]+, got '" + name + "'");
  return StreamId(std::move(name), MetaData::from_pairs(std::move(meta)));
}

// One timestamped document in a stream. Within a stream, timestamps are
// unique: at most one instance per millisecond.
struct StreamInstance {
  Timestamp timestamp;
  Value value;

  bool operator==(const StreamInstance&) const = default;
};

inline Value to_json(const StreamInstance& instance) {
  return Value{{"timestamp", format_timestamp(instance.timestamp)}, {"value", instance.value}};
}

inline StreamInstance instance_from_json(const Value& v) {
  if (!v.is_object() || !v.contains("timestamp") || !v.contains("value") || v.size() != 2)
    throw Error(ErrorCode::parse_failure, "malformed stream instance: " + v.dump());
  return StreamInstance{parse_timestamp(v.at("timestamp").get<std::string>()), v.at("value")};
}

inline std::string canonical_instance_line(const StreamInstance& instance) {
  return canonical_json(to_json(instance));
}

// Who computed a stream: tool name, tool version, and a digest of the
// canonically serialized parameters.
struct Provenance {
  std::string tool_name;
  std::string tool_version;
  std::string parameter_digest;

  bool operator==(const Provenance&) const = default;
};

inline Value to_json(const Provenance& p) {
  return Value{{"parameter_digest", p.parameter_digest},
               {"tool_name", p.tool_name},
               {"tool_version", p.tool_version}};
}

inline Provenance provenance_from_json(const Value& v) {
  return Provenance{v.at("tool_name").get<std::string>(),
                    v.at("tool_version").get<std::string>(),
                    v.at("parameter_digest").get<std::string>()};
}

// Interval serialization: {"start": ..., "end": ...}; the open/closed
// convention (start exclusive, end inclusive) is documented, not encoded.
inline Value to_json(const TimeInterval& iv) {
  return Value{{"end", format_timestamp(iv.end())}, {"start", format_timestamp(iv.start())}};
}

inline TimeInterval interval_from_json(const Value& v) {
  if (!v.is_object() || !v.contains("start") || !v.contains("end"))
    throw Error(ErrorCode::parse_failure, "malformed interval: " + v.dump());
  return TimeInterval(parse_timestamp(v.at("start").get<std::string>()),
                      parse_timestamp(v.at("end").get<std::string>()));
}

inline Value to_json(const TimeIntervalSet& set) {
  Value out = Value::array();
  for (const auto& iv : set.intervals()) out.push_back(to_json(iv));
  return out;
}

inline TimeIntervalSet interval_set_from_json(const Value& v) {
  if (!v.is_array()) throw Error(ErrorCode::parse_failure, "interval set must be an array");
  std::vector<TimeInterval> intervals;
  intervals.reserve(v.size());
  for (const auto& item : v) intervals.push_back(interval_from_json(item));
  return TimeIntervalSet::from_intervals(std::move(intervals));
}

// Per-stream ledger entry: where the stream lives, which time ranges have
// been computed, and who last wrote it.
struct StreamRecord {
  StreamId id;
  std::string channel;
  TimeIntervalSet calculated_intervals;
  std::optional<Provenance> writer;

  bool operator==(const StreamRecord&) const = default;
};

inline StreamRecord extend_ledger(StreamRecord record, const TimeIntervalSet& newly_computed) {
  record.calculated_intervals = set_union(record.calculated_intervals, newly_computed);
  return record;
}

// The minimal work needed to serve `requested`: whatever the ledger does not
// already cover. Empty result means the request is served from storage.
inline TimeIntervalSet required_intervals(const StreamRecord& record,
                                          const TimeIntervalSet& requested) {
  return set_difference(requested, record.calculated_intervals);
}

}  // namespace streamflow

template <>
struct std::hash<streamflow::StreamId> {
  std::size_t operator()(const streamflow::StreamId& id) const noexcept {
    return std::hash<std::string>()(id.canonical());
  }
};
