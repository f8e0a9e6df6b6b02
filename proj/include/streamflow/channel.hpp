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

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "streamflow/errors.hpp"
#include "streamflow/stream.hpp"
#include "streamflow/timeline.hpp"

namespace streamflow {

struct ChannelCapabilities {
  bool persistent = false;
  bool supports_purge = true;
};

// Read of a range the ledger does not cover. Carries the missing set so
// callers can plan the make-up computation.
class NotComputedError : public Error {
 public:
  explicit NotComputedError(TimeIntervalSet missing)
      : Error(ErrorCode::not_computed, "missing " + streamflow::to_string(missing)),
        missing_(std::move(missing)) {}

  const TimeIntervalSet& missing() const { return missing_; }

 private:
  TimeIntervalSet missing_;
};

// Storage manifestation of streams for time ranges that have been computed.
// Every implementation satisfies the same contract; a conformance suite in
// the tests runs identically against all of them.
class Channel {
 public:
  virtual ~Channel() = default;

  virtual const std::string& name() const = 0;
  virtual ChannelCapabilities capabilities() const = 0;

  // Registers a new stream with an empty ledger. Throws StreamExists if the
  // id is already present.
  virtual StreamRecord create_stream(const StreamId& id) = 0;

  // Stores `instances` (strictly ascending timestamps, all inside `covered`)
  // and extends the ledger by `covered`. The cover may exceed the instants
  // present: an empty result over a range still marks the range computed.
  virtual StreamRecord write(const StreamId& id, const std::vector<StreamInstance>& instances,
                             const TimeIntervalSet& covered,
                             const std::optional<Provenance>& writer = std::nullopt) = 0;

  // Instances with interval.start < t <= interval.end, ascending. Reading a
  // range the ledger does not cover throws NotComputedError, never silently
  // returns an empty result.
  virtual std::vector<StreamInstance> read(const StreamId& id,
                                           const TimeInterval& interval) const = 0;

  // Clears instances and ledger; the stream itself remains. Idempotent.
  virtual void purge(const StreamId& id) = 0;

  // One snapshot record per stream, sorted by canonical id.
  virtual std::vector<StreamRecord> list_streams() const = 0;

  virtual std::optional<StreamRecord> find_stream(const StreamId& id) const = 0;

  StreamRecord ensure_stream(const StreamId& id) {
    if (auto existing = find_stream(id)) return *existing;
    return create_stream(id);
  }

  StreamRecord get_record(const StreamId& id) const {
    if (auto existing = find_stream(id)) return *existing;
    throw Error(ErrorCode::unknown_stream, id.canonical() + " in channel");
  }
};

namespace detail {

// Shared write-precondition checks so every channel reports the same error
// for the same bad input, in the same order. `stored` answers whether the
// stream already holds an instance at a timestamp; re-writing one is an
// error, not last-write-wins.
template <typename StoredFn>
inline void check_write(const StreamId& id, const std::vector<StreamInstance>& instances,
                        const TimeIntervalSet& covered, StoredFn&& stored) {
  for (const auto& instance : instances) {
    if (!covered.contains(instance.timestamp))
      throw Error(ErrorCode::timestamp_outside_cover,
                  format_timestamp(instance.timestamp) + " not inside " +
                      streamflow::to_string(covered));
  }
  for (std::size_t i = 1; i < instances.size(); ++i) {
    if (instances[i].timestamp == instances[i - 1].timestamp)
      throw Error(ErrorCode::duplicate_timestamp,
                  "batch contains " + format_timestamp(instances[i].timestamp) + " twice");
    if (instances[i].timestamp < instances[i - 1].timestamp)
      throw Error(ErrorCode::parameter_invalid, "instances must be ascending by timestamp");
  }
  for (const auto& instance : instances) check_value_model(instance.value, "document");
  for (const auto& instance : instances) {
    if (stored(instance.timestamp))
      throw Error(ErrorCode::duplicate_timestamp, format_timestamp(instance.timestamp) +
                                                      " already stored in " + id.canonical());
  }
}

}  // namespace detail

// Named collection of channels available to the engine.
class ChannelSet {
 public:
  void add(std::shared_ptr<Channel> channel) { channels_[channel->name()] = std::move(channel); }

  bool contains(const std::string& name) const { return channels_.count(name) > 0; }

  Channel& get(const std::string& name) const {
    auto it = channels_.find(name);
    if (it == channels_.end()) throw Error(ErrorCode::unknown_channel, name);
    return *it->second;
  }

  std::shared_ptr<Channel> get_shared(const std::string& name) const {
    auto it = channels_.find(name);
    if (it == channels_.end()) throw Error(ErrorCode::unknown_channel, name);
    return it->second;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    out.reserve(channels_.size());
    for (const auto& [name, _] : channels_) out.push_back(name);
    return out;
  }

 private:
  std::map<std::string, std::shared_ptr<Channel>> channels_;
};

}  // namespace streamflow
