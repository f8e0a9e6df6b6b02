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
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "streamflow/channel.hpp"

namespace streamflow {

// In-process stream storage. Nothing survives the process; everything else
// behaves exactly like the persistent channels.
class MemoryChannel : public Channel {
 public:
  explicit MemoryChannel(std::string name = "memory") : name_(std::move(name)) {}

  const std::string& name() const override { return name_; }

  ChannelCapabilities capabilities() const override { return {.persistent = false, .supports_purge = true}; }

  StreamRecord create_stream(const StreamId& id) override {
    std::unique_lock lock(mutex_);
    if (streams_.count(id)) throw Error(ErrorCode::stream_exists, id.canonical());
    auto& entry = streams_[id];
    entry.record = StreamRecord{id, name_, {}, std::nullopt};
    return entry.record;
  }

  StreamRecord write(const StreamId& id, const std::vector<StreamInstance>& instances,
                     const TimeIntervalSet& covered,
                     const std::optional<Provenance>& writer = std::nullopt) override {
    std::unique_lock lock(mutex_);
    auto it = streams_.find(id);
    if (it == streams_.end()) throw Error(ErrorCode::unknown_stream, id.canonical());
    auto& entry = it->second;
    detail::check_write(id, instances, covered,
                        [&](Timestamp t) { return entry.instances.count(t) > 0; });
    for (const auto& instance : instances) entry.instances.emplace(instance.timestamp, instance.value);
    entry.record = extend_ledger(entry.record, covered);
    if (writer) entry.record.writer = writer;
    return entry.record;
  }

  std::vector<StreamInstance> read(const StreamId& id, const TimeInterval& interval) const override {
    std::shared_lock lock(mutex_);
    auto it = streams_.find(id);
    if (it == streams_.end()) throw Error(ErrorCode::unknown_stream, id.canonical());
    const auto& entry = it->second;
    if (!entry.record.calculated_intervals.contains(interval))
      throw NotComputedError(set_difference(TimeIntervalSet(interval),
                                            entry.record.calculated_intervals));
    std::vector<StreamInstance> out;
    auto lo = entry.instances.upper_bound(interval.start());
    for (auto i = lo; i != entry.instances.end() && i->first <= interval.end(); ++i)
      out.push_back(StreamInstance{i->first, i->second});
    return out;
  }

  void purge(const StreamId& id) override {
    std::unique_lock lock(mutex_);
    auto it = streams_.find(id);
    if (it == streams_.end()) throw Error(ErrorCode::unknown_stream, id.canonical());
    it->second.instances.clear();
    it->second.record.calculated_intervals = {};
    it->second.record.writer = std::nullopt;
  }

  std::vector<StreamRecord> list_streams() const override {
    std::shared_lock lock(mutex_);
    std::vector<StreamRecord> out;
    out.reserve(streams_.size());
    for (const auto& [id, entry] : streams_) out.push_back(entry.record);
    std::sort(out.begin(), out.end(), [](const StreamRecord& a, const StreamRecord& b) {
      return a.id.canonical() < b.id.canonical();
    });
    return out;
  }

  std::optional<StreamRecord> find_stream(const StreamId& id) const override {
    std::shared_lock lock(mutex_);
    auto it = streams_.find(id);
    if (it == streams_.end()) return std::nullopt;
    return it->second.record;
  }

 private:
  struct Entry {
    StreamRecord record;
    std::map<Timestamp, Value> instances;
  };

  std::string name_;
  mutable std::shared_mutex mutex_;
  std::map<StreamId, Entry> streams_;
};

}  // namespace streamflow
