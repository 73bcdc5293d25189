#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "larag/types.hpp"

struct sqlite3;

namespace larag {

struct IntervalStats {
  std::int64_t count = 0;
  std::optional<double> first_s;
  std::optional<double> last_s;

  friend bool operator==(const IntervalStats&, const IntervalStats&) = default;
};

using SqlValue = std::variant<std::monostate, std::int64_t, double, std::string>;

struct QueryResult {
  std::vector<std::string> columns;
  std::vector<std::vector<SqlValue>> rows;
  bool truncated = false;

  /// Pipe-separated table with a header row.
  std::string render() const;
};

std::string render_sql_value(const SqlValue& v);

struct IngestResult {
  std::size_t inserted = 0;
  std::size_t skipped = 0;
};

using TagFilter = std::optional<std::vector<std::string>>;

/// SQLite-backed event table. One connection guarded by a mutex: writes are
/// serialized and every read sees a committed snapshot.
class EventStore {
 public:
  static constexpr std::string_view kEventsDdl =
      "CREATE TABLE events(id INTEGER PRIMARY KEY, audio_id TEXT, tag TEXT, start_s REAL, "
      "end_s REAL, confidence REAL, loudness_lufs REAL)";
  static constexpr std::string_view kUniqueIndexDdl =
      "CREATE UNIQUE INDEX events_key ON events(audio_id, tag, start_s)";

  explicit EventStore(const std::string& path = ":memory:");
  ~EventStore();
  EventStore(const EventStore&) = delete;
  EventStore& operator=(const EventStore&) = delete;

  /// All-or-nothing insert. A unique-key clash (in the batch or against
  /// stored rows) throws ConstraintViolation naming the clashing key.
  std::size_t insert_events(std::span<const EventRecord> records);

  /// Idempotent variant: rows identical to stored ones are skipped; a key
  /// clash with different content throws ConstraintViolation and inserts nothing.
  IngestResult ingest(std::span<const EventRecord> records);

  void register_audio(const std::string& audio_id, const std::string& recording_start);
  bool has_audio(const std::string& audio_id) const;
  std::optional<std::string> recording_start(const std::string& audio_id) const;
  std::vector<std::string> audio_ids() const;

  /// Events whose start_s lies in the interval, ordered by start_s then tag.
  std::vector<EventRecord> query_interval(const std::string& audio_id, const TimeInterval& interval,
                                          const TagFilter& tags = std::nullopt) const;
  IntervalStats aggregate(const std::string& audio_id, const TimeInterval& interval,
                          const std::string& tag) const;
  std::vector<std::string> distinct_tags(const std::string& audio_id, const TimeInterval& interval) const;
  std::int64_t count(const std::optional<std::string>& audio_id = std::nullopt) const;

  /// Runs one SELECT against the events table only, returning at most
  /// row_limit rows. Anything else is rejected by the authorizer as InvalidSQL.
  QueryResult execute_readonly(std::string_view sql, std::size_t row_limit = 1000) const;

 private:
  void exec(const char* sql) const;
  void require_audio(const std::string& audio_id) const;
  std::size_t insert_locked(std::span<const EventRecord> records);

  sqlite3* db_ = nullptr;
  mutable std::mutex mutex_;
};

}  // namespace larag
