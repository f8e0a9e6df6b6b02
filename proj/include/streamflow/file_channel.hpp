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

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "streamflow/channel.hpp"

namespace streamflow {

namespace detail {

// Directory names are the percent-encoded canonical stream id: the name part
// is [a-z0-9_]+ already, and each meta key/value gets '%', '(', ')', '=',
// '/', control bytes and non-ASCII escaped so the id parses back losslessly.
inline std::string percent_encode_component(std::string_view s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    const bool safe = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                      (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    if (safe) {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 0xf];
    }
  }
  return out;
}

inline std::string percent_decode_component(std::string_view s) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
  };
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '%' && i + 2 < s.size()) {
      const int hi = nibble(s[i + 1]);
      const int lo = nibble(s[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out += static_cast<char>((hi << 4) | lo);
        i += 2;
        continue;
      }
    }
    out += s[i];
  }
  return out;
}

inline std::string stream_dir_name(const StreamId& id) {
  std::string out = id.name();
  for (const auto& [k, v] : id.meta_data().pairs()) {
    out += '(';
    out += percent_encode_component(k);
    out += '=';
    out += percent_encode_component(v);
    out += ')';
  }
  return out;
}

inline std::optional<StreamId> stream_id_from_dir_name(const std::string& dir) {
  const auto paren = dir.find('(');
  const std::string name = dir.substr(0, paren);
  if (!is_valid_stream_name(name)) return std::nullopt;
  std::vector<std::pair<std::string, std::string>> pairs;
  std::size_t i = (paren == std::string::npos) ? dir.size() : paren;
  while (i < dir.size()) {
    if (dir[i] != '(') return std::nullopt;
    const auto eq = dir.find('=', i);
    const auto close = dir.find(')', i);
    if (eq == std::string::npos || close == std::string::npos || eq > close) return std::nullopt;
    pairs.emplace_back(percent_decode_component(dir.substr(i + 1, eq - i - 1)),
                       percent_decode_component(dir.substr(eq + 1, close - eq - 1)));
    i = close + 1;
  }
  try {
    return StreamId(name, MetaData::from_pairs(std::move(pairs)));
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline void atomic_write_file(const std::filesystem::path& path, const std::string& content) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot write " + tmp);
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::io_error, "short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

// Stream storage on the local filesystem. Layout per stream, under a
// directory named by the encoded canonical id:
//
//   <root>/<stream-dir>/instances.jsonl   one serialized instance per line
//   <root>/<stream-dir>/ledger.json       serialized TimeIntervalSet
//   <root>/<stream-dir>/writer.json       provenance, present once written
//
// Write ordering: instances are appended and flushed before the ledger is
// extended, so a crash leaves at worst instances that the ledger does not
// claim (recovered by dropping them on open), never the reverse.
class FileChannel : public Channel {
 public:
  // Steps at which a fault hook fires, for crash-safety testing.
  enum class WriteStep { before_instance_append, after_instance_append, after_ledger_update };
  using FaultHook = std::function<void(WriteStep)>;

  explicit FileChannel(std::filesystem::path root, std::string name = "file",
                       bool read_only = false)
      : name_(std::move(name)), root_(std::move(root)), read_only_(read_only) {
    std::filesystem::create_directories(root_);
    load_all();
  }

  const std::string& name() const override { return name_; }

  ChannelCapabilities capabilities() const override {
    return {.persistent = true, .supports_purge = !read_only_};
  }

  void set_fault_hook(FaultHook hook) { fault_hook_ = std::move(hook); }

  StreamRecord create_stream(const StreamId& id) override {
    std::lock_guard lock(mutex_);
    require_writable();
    if (streams_.count(id)) throw Error(ErrorCode::stream_exists, id.canonical());
    const auto dir = stream_dir(id);
    std::filesystem::create_directories(dir);
    detail::atomic_write_file(dir / "ledger.json", "[]");
    std::ofstream(dir / "instances.jsonl", std::ios::binary | std::ios::app);
    auto& entry = streams_[id];
    entry.record = StreamRecord{id, name_, {}, std::nullopt};
    return entry.record;
  }

  StreamRecord write(const StreamId& id, const std::vector<StreamInstance>& instances,
                     const TimeIntervalSet& covered,
                     const std::optional<Provenance>& writer = std::nullopt) override {
    std::lock_guard lock(mutex_);
    require_writable();
    auto it = streams_.find(id);
    if (it == streams_.end()) throw Error(ErrorCode::unknown_stream, id.canonical());
    auto& entry = it->second;
    detail::check_write(id, instances, covered,
                        [&](Timestamp t) { return entry.instances.count(t) > 0; });

    const auto dir = stream_dir(id);
    fire(WriteStep::before_instance_append);
    {
      std::ofstream out(dir / "instances.jsonl", std::ios::binary | std::ios::app);
      if (!out) throw Error(ErrorCode::io_error, "cannot append to instances of " + id.canonical());
      for (const auto& instance : instances) out << canonical_instance_line(instance) << '\n';
      out.flush();
      if (!out) throw Error(ErrorCode::io_error, "short append to instances of " + id.canonical());
    }
    fire(WriteStep::after_instance_append);

    StreamRecord updated = extend_ledger(entry.record, covered);
    if (writer) updated.writer = writer;
    detail::atomic_write_file(dir / "ledger.json",
                              canonical_json(to_json(updated.calculated_intervals)));
    if (writer) detail::atomic_write_file(dir / "writer.json", canonical_json(to_json(*writer)));
    fire(WriteStep::after_ledger_update);

    for (const auto& instance : instances) entry.instances.emplace(instance.timestamp, instance.value);
    entry.record = updated;
    return entry.record;
  }

  std::vector<StreamInstance> read(const StreamId& id, const TimeInterval& interval) const override {
    std::lock_guard lock(mutex_);
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
    std::lock_guard lock(mutex_);
    require_writable();
    auto it = streams_.find(id);
    if (it == streams_.end()) throw Error(ErrorCode::unknown_stream, id.canonical());
    const auto dir = stream_dir(id);
    // Order mirrors write: never leave a ledger claiming purged instances.
    detail::atomic_write_file(dir / "ledger.json", "[]");
    detail::atomic_write_file(dir / "instances.jsonl", "");
    std::error_code ec;
    std::filesystem::remove(dir / "writer.json", ec);
    it->second.instances.clear();
    it->second.record.calculated_intervals = {};
    it->second.record.writer = std::nullopt;
  }

  std::vector<StreamRecord> list_streams() const override {
    std::lock_guard lock(mutex_);
    std::vector<StreamRecord> out;
    out.reserve(streams_.size());
    for (const auto& [id, entry] : streams_) out.push_back(entry.record);
    std::sort(out.begin(), out.end(), [](const StreamRecord& a, const StreamRecord& b) {
      return a.id.canonical() < b.id.canonical();
    });
    return out;
  }

  std::optional<StreamRecord> find_stream(const StreamId& id) const override {
    std::lock_guard lock(mutex_);
    auto it = streams_.find(id);
    if (it == streams_.end()) return std::nullopt;
    return it->second.record;
  }

  const std::filesystem::path& root() const { return root_; }

 private:
  struct Entry {
    StreamRecord record;
    std::map<Timestamp, Value> instances;
  };

  void require_writable() const {
    if (read_only_) throw Error(ErrorCode::unsupported, name_ + " channel is read-only");
  }

  void fire(WriteStep step) {
    if (fault_hook_) fault_hook_(step);
  }

  std::filesystem::path stream_dir(const StreamId& id) const {
    return root_ / detail::stream_dir_name(id);
  }

  void load_all() {
    for (const auto& dirent : std::filesystem::directory_iterator(root_)) {
      if (!dirent.is_directory()) continue;
      auto id = detail::stream_id_from_dir_name(dirent.path().filename().string());
      if (!id) continue;
      load_stream(*id, dirent.path());
    }
  }

  void load_stream(const StreamId& id, const std::filesystem::path& dir) {
    Entry entry;
    entry.record = StreamRecord{id, name_, {}, std::nullopt};

    std::ifstream ledger_in(dir / "ledger.json", std::ios::binary);
    if (ledger_in) {
      std::stringstream buffer;
      buffer << ledger_in.rdbuf();
      entry.record.calculated_intervals = interval_set_from_json(parse_value(buffer.str()));
    }
    std::ifstream writer_in(dir / "writer.json", std::ios::binary);
    if (writer_in) {
      std::stringstream buffer;
      buffer << writer_in.rdbuf();
      entry.record.writer = provenance_from_json(parse_value(buffer.str()));
    }

    // Instances the ledger does not claim are uncommitted leftovers from an
    // interrupted write; drop them and compact the file.
    bool orphans = false;
    std::ifstream in(dir / "instances.jsonl", std::ios::binary);
    std::string line;
    std::string compacted;
    while (in && std::getline(in, line)) {
      if (line.empty()) continue;
      StreamInstance instance;
      try {
        instance = instance_from_json(parse_value(line));
      } catch (const Error&) {
        orphans = true;  // torn trailing line from a crash mid-append
        continue;
      }
      if (!entry.record.calculated_intervals.contains(instance.timestamp)) {
        orphans = true;
        continue;
      }
      entry.instances.emplace(instance.timestamp, instance.value);
      compacted += line;
      compacted += '\n';
    }
    if (orphans && !read_only_) detail::atomic_write_file(dir / "instances.jsonl", compacted);

    streams_.emplace(id, std::move(entry));
  }

  std::string name_;
  std::filesystem::path root_;
  bool read_only_;
  mutable std::mutex mutex_;
  std::map<StreamId, Entry> streams_;
  FaultHook fault_hook_;
};

// The assets channel is a read-only file channel rooted at a configured
// directory; content is placed there out of band.
inline std::shared_ptr<FileChannel> make_assets_channel(std::filesystem::path root) {
  return std::make_shared<FileChannel>(std::move(root), "assets", /*read_only=*/true);
}

}  // namespace streamflow
