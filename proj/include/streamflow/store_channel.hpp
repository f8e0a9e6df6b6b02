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

#include <sqlite3.h>

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "streamflow/channel.hpp"

namespace streamflow {

namespace detail {

class SqliteStatement {
 public:
  SqliteStatement(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK)
      throw Error(ErrorCode::io_error, std::string("sqlite prepare: ") + sqlite3_errmsg(db));
  }
  ~SqliteStatement() { sqlite3_finalize(stmt_); }
  SqliteStatement(const SqliteStatement&) = delete;
  SqliteStatement& operator=(const SqliteStatement&) = delete;

  SqliteStatement& bind(int index, const std::string& text) {
    sqlite3_bind_text(stmt_, index, text.c_str(), static_cast<int>(text.size()), SQLITE_TRANSIENT);
    return *this;
  }
  SqliteStatement& bind(int index, std::int64_t value) {
    sqlite3_bind_int64(stmt_, index, value);
    return *this;
  }
  SqliteStatement& bind_null(int index) {
    sqlite3_bind_null(stmt_, index);
    return *this;
  }

  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw Error(ErrorCode::io_error, std::string("sqlite step: ") + sqlite3_errmsg(db_));
  }

  std::string column_text(int index) const {
    const auto* text = sqlite3_column_text(stmt_, index);
    return text ? reinterpret_cast<const char*>(text) : "";
  }
  bool column_is_null(int index) const {
    return sqlite3_column_type(stmt_, index) == SQLITE_NULL;
  }
  std::int64_t column_int64(int index) const { return sqlite3_column_int64(stmt_, index); }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

}  // namespace detail

// Store-backed channel over an embedded SQLite database: the default
// realization of a "database" channel with no external service to run.
// Instance inserts and the ledger update commit in one transaction.
class StoreChannel : public Channel {
 public:
  explicit StoreChannel(const std::filesystem::path& db_path, std::string name = "store")
      : name_(std::move(name)) {
    if (db_path.has_parent_path()) std::filesystem::create_directories(db_path.parent_path());
    if (sqlite3_open(db_path.string().c_str(), &db_) != SQLITE_OK)
      throw Error(ErrorCode::io_error, "cannot open store at " + db_path.string());
    exec("PRAGMA journal_mode=WAL");
    exec("PRAGMA synchronous=NORMAL");
    exec("PRAGMA busy_timeout=5000");
    exec("CREATE TABLE IF NOT EXISTS streams ("
         	"id TEXT PRIMARY KEY, name TEXT NOT NULL, meta TEXT NOT NULL, "
         	"ledger TEXT NOT NULL, writer TEXT)");
    exec("CREATE TABLE IF NOT EXISTS instances ("
         	"stream_id TEXT NOT NULL, ts INTEGER NOT NULL, value TEXT NOT NULL, "
         	"PRIMARY KEY (stream_id, ts))");
  }

  ~StoreChannel() override { sqlite3_close(db_); }
  StoreChannel(const StoreChannel&) = delete;
  StoreChannel& operator=(const StoreChannel&) = delete;

  const std::string& name() const override { return name_; }

  ChannelCapabilities capabilities() const override { return {.persistent = true, .supports_purge = true}; }

  StreamRecord create_stream(const StreamId& id) override {
    std::lock_guard lock(mutex_);
    if (lookup(id)) throw Error(ErrorCode::stream_exists, id.canonical());
    Value meta = Value::object();
    for (const auto& [k, v] : id.meta_data().pairs()) meta[k] = v;
    detail::SqliteStatement stmt(db_, "INSERT INTO streams (id, name, meta, ledger, writer) "
                                      "VALUES (?1, ?2, ?3, '[]', NULL)");
    stmt.bind(1, id.canonical()).bind(2, id.name()).bind(3, canonical_json(meta));
    stmt.step();
    return StreamRecord{id, name_, {}, std::nullopt};
  }

  StreamRecord write(const StreamId& id, const std::vector<StreamInstance>& instances,
                     const TimeIntervalSet& covered,
                     const std::optional<Provenance>& writer = std::nullopt) override {
    std::lock_guard lock(mutex_);
    auto record = lookup(id);
    if (!record) throw Error(ErrorCode::unknown_stream, id.canonical());
    detail::check_write(id, instances, covered, [&](Timestamp t) { return has_instance(id, t); });

    StreamRecord updated = extend_ledger(*record, covered);
    if (writer) updated.writer = writer;

    exec("BEGIN IMMEDIATE");
    try {
      for (const auto& instance : instances) {
        detail::SqliteStatement ins(db_, "INSERT INTO instances (stream_id, ts, value) "
                                         "VALUES (?1, ?2, ?3)");
        ins.bind(1, id.canonical())
            .bind(2, instance.timestamp.unix_millis())
            .bind(3, canonical_json(instance.value));
        ins.step();
      }
      detail::SqliteStatement upd(db_, "UPDATE streams SET ledger = ?2, writer = ?3 WHERE id = ?1");
      upd.bind(1, id.canonical()).bind(2, canonical_json(to_json(updated.calculated_intervals)));
      if (updated.writer) upd.bind(3, canonical_json(to_json(*updated.writer)));
      else upd.bind_null(3);
      upd.step();
      exec("COMMIT");
    } catch (...) {
      exec("ROLLBACK");
      throw;
    }
    return updated;
  }

  std::vector<StreamInstance> read(const StreamId& id, const TimeInterval& interval) const override {
    std::lock_guard lock(mutex_);
    auto record = lookup(id);
    if (!record) throw Error(ErrorCode::unknown_stream, id.canonical());
    if (!record->calculated_intervals.contains(interval))
      throw NotComputedError(set_difference(TimeIntervalSet(interval),
                                            record->calculated_intervals));
    detail::SqliteStatement stmt(db_, "SELECT ts, value FROM instances "
                                      "WHERE stream_id = ?1 AND ts > ?2 AND ts <= ?3 ORDER BY ts");
    stmt.bind(1, id.canonical())
        .bind(2, interval.start().unix_millis())
        .bind(3, interval.end().unix_millis());
    std::vector<StreamInstance> out;
    while (stmt.step())
      out.push_back(StreamInstance{Timestamp::from_unix_millis(stmt.column_int64(0)),
                                   parse_value(stmt.column_text(1))});
    return out;
  }

  void purge(const StreamId& id) override {
    std::lock_guard lock(mutex_);
    if (!lookup(id)) throw Error(ErrorCode::unknown_stream, id.canonical());
    exec("BEGIN IMMEDIATE");
    try {
      detail::SqliteStatement del(db_, "DELETE FROM instances WHERE stream_id = ?1");
      del.bind(1, id.canonical());
      del.step();
      detail::SqliteStatement upd(db_, "UPDATE streams SET ledger = '[]', writer = NULL WHERE id = ?1");
      upd.bind(1, id.canonical());
      upd.step();
      exec("COMMIT");
    } catch (...) {
      exec("ROLLBACK");
      throw;
    }
  }

  std::vector<StreamRecord> list_streams() const override {
    std::lock_guard lock(mutex_);
    detail::SqliteStatement stmt(db_, "SELECT name, meta, ledger, writer FROM streams ORDER BY id");
    std::vector<StreamRecord> out;
    while (stmt.step()) out.push_back(record_from_row(stmt));
    return out;
  }

  std::optional<StreamRecord> find_stream(const StreamId& id) const override {
    std::lock_guard lock(mutex_);
    return lookup(id);
  }

 private:
  void exec(const char* sql) const {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
      std::string message = err ? err : "unknown sqlite error";
      sqlite3_free(err);
      throw Error(ErrorCode::io_error, message);
    }
  }

  StreamRecord record_from_row(detail::SqliteStatement& stmt) const {
    const std::string name = stmt.column_text(0);
    const Value meta = parse_value(stmt.column_text(1));
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& [k, v] : meta.items()) pairs.emplace_back(k, v.get<std::string>());
    StreamRecord record;
    record.id = StreamId(name, MetaData::from_pairs(std::move(pairs)));
    record.channel = name_;
    record.calculated_intervals = interval_set_from_json(parse_value(stmt.column_text(2)));
    if (!stmt.column_is_null(3)) record.writer = provenance_from_json(parse_value(stmt.column_text(3)));
    return record;
  }

  std::optional<StreamRecord> lookup(const StreamId& id) const {
    detail::SqliteStatement stmt(db_, "SELECT name, meta, ledger, writer FROM streams WHERE id = ?1");
    stmt.bind(1, id.canonical());
    if (!stmt.step()) return std::nullopt;
    return record_from_row(stmt);
  }

  bool has_instance(const StreamId& id, Timestamp t) const {
    detail::SqliteStatement stmt(db_, "SELECT 1 FROM instances WHERE stream_id = ?1 AND ts = ?2");
    stmt.bind(1, id.canonical()).bind(2, t.unix_millis());
    return stmt.step();
  }

  std::string name_;
  sqlite3* db_ = nullptr;
  mutable std::recursive_mutex mutex_;
};

}  // namespace streamflow
