#include "larag/event_store.hpp"

#include <fmt/format.h>
#include <sqlite3.h>

#include <algorithm>
#include <cstring>
#include <map>
#include <memory>
#include <tuple>

#include "larag/error.hpp"

namespace larag {

namespace {

class Statement {
 public:
  Statement(sqlite3* db, std::string_view sql) : db_(db) {
    const char* tail = nullptr;
    if (sqlite3_prepare_v2(db, sql.data(), static_cast<int>(sql.size()), &stmt_, &tail) != SQLITE_OK)
      throw Error(ErrorCode::StorageFailure, sqlite3_errmsg(db));
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  Statement& bind(int i, const std::string& v) {
    sqlite3_bind_text(stmt_, i, v.c_str(), static_cast<int>(v.size()), SQLITE_TRANSIENT);
    return *this;
  }
  Statement& bind(int i, double v) {
    sqlite3_bind_double(stmt_, i, v);
    return *this;
  }
  Statement& bind(int i, const std::optional<double>& v) {
    if (v)
      sqlite3_bind_double(stmt_, i, *v);
    else
      sqlite3_bind_null(stmt_, i);
    return *this;
  }

  bool step() {
    int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    if (rc == SQLITE_CONSTRAINT) throw Error(ErrorCode::ConstraintViolation, sqlite3_errmsg(db_));
    throw Error(ErrorCode::StorageFailure, sqlite3_errmsg(db_));
  }
  void reset() {
    sqlite3_reset(stmt_);
    sqlite3_clear_bindings(stmt_);
  }

  std::string text(int col) const {
    auto p = sqlite3_column_text(stmt_, col);
    return p ? reinterpret_cast<const char*>(p) : "";
  }
  double real(int col) const { return sqlite3_column_double(stmt_, col); }
  std::int64_t integer(int col) const { return sqlite3_column_int64(stmt_, col); }
  bool is_null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
  sqlite3_stmt* get() const { return stmt_; }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

std::string span_clause(const TimeInterval& interval, int& param) {
  std::string clause = "(";
  const auto spans = interval.spans();
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (i) clause += " OR ";
    clause += fmt::format("(start_s >= ?{} AND start_s < ?{})", param, param + 1);
    param += 2;
  }
  return clause + ")";
}

int bind_spans(Statement& st, const TimeInterval& interval, int param) {
  for (const auto& s : interval.spans()) {
    st.bind(param++, s.start_s);
    st.bind(param++, s.end_s);
  }
  return param;
}

EventRecord read_event(const Statement& st) {
  EventRecord r;
  r.id = st.integer(0);
  r.audio_id = st.text(1);
  r.tag = st.text(2);
  r.start_s = st.real(3);
  r.end_s = st.real(4);
  r.confidence = st.real(5);
  if (!st.is_null(6)) r.loudness_lufs = st.real(6);
  return r;
}

constexpr const char* kEventColumns = "id, audio_id, tag, start_s, end_s, confidence, loudness_lufs";

int readonly_authorizer(void*, int action, const char* arg1, const char*, const char*, const char*) {
  switch (action) {
    case SQLITE_SELECT:
    case SQLITE_FUNCTION:
      return SQLITE_OK;
    case SQLITE_READ:
      return arg1 && std::strcmp(arg1, "events") == 0 ? SQLITE_OK : SQLITE_DENY;
    default:
      return SQLITE_DENY;
  }
}

void validate_record(const EventRecord& r) {
  if (r.audio_id.empty() || r.tag.empty())
    throw Error(ErrorCode::ConstraintViolation, "event needs a nonempty audio_id and tag");
  if (!(r.start_s < r.end_s))
    throw Error(ErrorCode::ConstraintViolation,
                fmt::format("event {}@{} has start_s >= end_s", r.tag, r.start_s));
  if (r.confidence < 0.0 || r.confidence > 1.0)
    throw Error(ErrorCode::ConstraintViolation, fmt::format("event {}@{} confidence outside [0,1]", r.tag, r.start_s));
}

}  // namespace

std::string render_sql_value(const SqlValue& v) {
  return std::visit(
      [](const auto& x) -> std::string {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, std::monostate>)
          return "NULL";
        else if constexpr (std::is_same_v<T, std::string>)
          return x;
        else
          return fmt::format("{}", x);
      },
      v);
}

std::string QueryResult::render() const {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) out += (i ? " | " : "") + columns[i];
  out += "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? " | " : "") + render_sql_value(row[i]);
    out += "\n";
  }
  if (truncated) out += "(truncated)\n";
  return out;
}

EventStore::EventStore(const std::string& path) {
  if (sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "cannot open database";
    sqlite3_close(db_);
    db_ = nullptr;
    throw Error(ErrorCode::StoreUnavailable, path + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  Statement probe(db_, "SELECT count(*) FROM sqlite_master WHERE type='table' AND name='events'");
  probe.step();
  if (probe.integer(0) == 0) {
    exec(std::string(kEventsDdl).c_str());
    exec(std::string(kUniqueIndexDdl).c_str());
  }
  exec("CREATE INDEX IF NOT EXISTS events_time ON events(audio_id, start_s)");
  exec("CREATE TABLE IF NOT EXISTS audio_sources(audio_id TEXT PRIMARY KEY, recording_start TEXT)");
}

EventStore::~EventStore() { sqlite3_close(db_); }

void EventStore::exec(const char* sql) const {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "sqlite error";
    sqlite3_free(err);
    throw Error(ErrorCode::StorageFailure, msg);
  }
}

std::size_t EventStore::insert_locked(std::span<const EventRecord> records) {
  exec("BEGIN IMMEDIATE");
  try {
    Statement ins(db_,
                  "INSERT INTO events(audio_id, tag, start_s, end_s, confidence, loudness_lufs) "
                  "VALUES (?1, ?2, ?3, ?4, ?5, ?6)");
    Statement src(db_, "INSERT OR IGNORE INTO audio_sources(audio_id, recording_start) VALUES (?1, '')");
    std::string last_audio;
    for (const auto& r : records) {
      if (r.audio_id != last_audio) {
        src.bind(1, r.audio_id);
        src.step();
        src.reset();
        last_audio = r.audio_id;
      }
      ins.bind(1, r.audio_id).bind(2, r.tag).bind(3, r.start_s).bind(4, r.end_s).bind(5, r.confidence);
      ins.bind(6, r.loudness_lufs);
      try {
        ins.step();
      } catch (const Error& e) {
        if (e.code() == ErrorCode::ConstraintViolation)
          throw Error(ErrorCode::ConstraintViolation,
                      fmt::format("duplicate key (audio_id={}, tag={}, start_s={})", r.audio_id, r.tag, r.start_s));
        throw;
      }
      ins.reset();
    }
    exec("COMMIT");
  } catch (...) {
    sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
    throw;
  }
  return records.size();
}

std::size_t EventStore::insert_events(std::span<const EventRecord> records) {
  for (const auto& r : records) validate_record(r);
  std::lock_guard lock(mutex_);
  return insert_locked(records);
}

IngestResult EventStore::ingest(std::span<const EventRecord> records) {
  for (const auto& r : records) validate_record(r);
  std::lock_guard lock(mutex_);

  using Key = std::tuple<std::string, std::string, double>;
  std::map<Key, const EventRecord*> batch;
  std::vector<EventRecord> fresh;
  IngestResult result;
  Statement find(db_, fmt::format("SELECT {} FROM events WHERE audio_id=?1 AND tag=?2 AND start_s=?3", kEventColumns));
  for (const auto& r : records) {
    Key key{r.audio_id, r.tag, r.start_s};
    if (auto [it, inserted] = batch.emplace(key, &r); !inserted) {
      if (!it->second->same_content(r))
        throw Error(ErrorCode::ConstraintViolation,
                    fmt::format("conflicting duplicate in batch (audio_id={}, tag={}, start_s={})", r.audio_id,
                                r.tag, r.start_s));
      ++result.skipped;
      continue;
    }
    find.bind(1, r.audio_id).bind(2, r.tag).bind(3, r.start_s);
    if (find.step()) {
      EventRecord stored = read_event(find);
      if (!stored.same_content(r))
        throw Error(ErrorCode::ConstraintViolation,
                    fmt::format("key (audio_id={}, tag={}, start_s={}) already stored with different content",
                                r.audio_id, r.tag, r.start_s));
      ++result.skipped;
    } else {
      fresh.push_back(r);
    }
    find.reset();
  }
  result.inserted = insert_locked(fresh);
  return result;
}

void EventStore::register_audio(const std::string& audio_id, const std::string& recording_start) {
  std::lock_guard lock(mutex_);
  Statement st(db_,
               "INSERT INTO audio_sources(audio_id, recording_start) VALUES (?1, ?2) "
               "ON CONFLICT(audio_id) DO UPDATE SET recording_start=excluded.recording_start "
               "WHERE excluded.recording_start <> ''");
  st.bind(1, audio_id).bind(2, recording_start);
  st.step();
}

bool EventStore::has_audio(const std::string& audio_id) const {
  std::lock_guard lock(mutex_);
  Statement st(db_, "SELECT 1 FROM audio_sources WHERE audio_id=?1");
  st.bind(1, audio_id);
  return st.step();
}

void EventStore::require_audio(const std::string& audio_id) const {
  if (!has_audio(audio_id)) throw Error(ErrorCode::UnknownAudioId, "unknown audio_id '" + audio_id + "'");
}

std::optional<std::string> EventStore::recording_start(const std::string& audio_id) const {
  std::lock_guard lock(mutex_);
  Statement st(db_, "SELECT recording_start FROM audio_sources WHERE audio_id=?1");
  st.bind(1, audio_id);
  if (!st.step()) return std::nullopt;
  return st.text(0);
}

std::vector<std::string> EventStore::audio_ids() const {
  std::lock_guard lock(mutex_);
  Statement st(db_, "SELECT audio_id FROM audio_sources ORDER BY audio_id");
  std::vector<std::string> out;
  while (st.step()) out.push_back(st.text(0));
  return out;
}

std::vector<EventRecord> EventStore::query_interval(const std::string& audio_id, const TimeInterval& interval,
                                                    const TagFilter& tags) const {
  require_audio(audio_id);
  int param = 2;
  std::string sql = fmt::format("SELECT {} FROM events WHERE audio_id=?1 AND {}", kEventColumns,
                                span_clause(interval, param));
  if (tags) {
    if (tags->empty()) return {};
    sql += " AND tag IN (";
    for (std::size_t i = 0; i < tags->size(); ++i) sql += fmt::format("{}?{}", i ? "," : "", param + static_cast<int>(i));
    sql += ")";
  }
  sql += " ORDER BY start_s, tag";
  std::lock_guard lock(mutex_);
  Statement st(db_, sql);
  st.bind(1, audio_id);
  int next = bind_spans(st, interval, 2);
  if (tags)
    for (const auto& t : *tags) st.bind(next++, t);
  std::vector<EventRecord> out;
  while (st.step()) out.push_back(read_event(st));
  return out;
}

IntervalStats EventStore::aggregate(const std::string& audio_id, const TimeInterval& interval,
                                    const std::string& tag) const {
  require_audio(audio_id);
  int param = 3;
  std::string sql = fmt::format("SELECT count(*), min(start_s), max(start_s) FROM events WHERE audio_id=?1 AND tag=?2 AND {}",
                                span_clause(interval, param));
  std::lock_guard lock(mutex_);
  Statement st(db_, sql);
  st.bind(1, audio_id).bind(2, tag);
  bind_spans(st, interval, 3);
  st.step();
  IntervalStats stats;
  stats.count = st.integer(0);
  if (!st.is_null(1)) stats.first_s = st.real(1);
  if (!st.is_null(2)) stats.last_s = st.real(2);
  return stats;
}

std::vector<std::string> EventStore::distinct_tags(const std::string& audio_id, const TimeInterval& interval) const {
  require_audio(audio_id);
  int param = 2;
  std::string sql = fmt::format("SELECT DISTINCT tag FROM events WHERE audio_id=?1 AND {} ORDER BY tag",
                                span_clause(interval, param));
  std::lock_guard lock(mutex_);
  Statement st(db_, sql);
  st.bind(1, audio_id);
  bind_spans(st, interval, 2);
  std::vector<std::string> out;
  while (st.step()) out.push_back(st.text(0));
  return out;
}

std::int64_t EventStore::count(const std::optional<std::string>& audio_id) const {
  std::lock_guard lock(mutex_);
  Statement st(db_, audio_id ? "SELECT count(*) FROM events WHERE audio_id=?1" : "SELECT count(*) FROM events");
  if (audio_id) st.bind(1, *audio_id);
  st.step();
  return st.integer(0);
}

QueryResult EventStore::execute_readonly(std::string_view sql, std::size_t row_limit) const {
  std::lock_guard lock(mutex_);
  sqlite3_set_authorizer(db_, readonly_authorizer, nullptr);
  sqlite3_stmt* raw = nullptr;
  const char* tail = nullptr;
  int rc = sqlite3_prepare_v2(db_, sql.data(), static_cast<int>(sql.size()), &raw, &tail);
  sqlite3_set_authorizer(db_, nullptr, nullptr);
  std::unique_ptr<sqlite3_stmt, decltype(&sqlite3_finalize)> stmt(raw, &sqlite3_finalize);
  if (rc != SQLITE_OK) throw Error(ErrorCode::InvalidSQL, sqlite3_errmsg(db_));
  if (!stmt) throw Error(ErrorCode::InvalidSQL, "empty statement");
  if (tail) {
    std::string_view rest(tail);
    if (rest.find_first_not_of(" \t\r\n;") != std::string_view::npos)
      throw Error(ErrorCode::InvalidSQL, "multiple statements are not allowed");
  }
  if (!sqlite3_stmt_readonly(stmt.get())) throw Error(ErrorCode::InvalidSQL, "statement is not read-only");

  QueryResult result;
  const int ncol = sqlite3_column_count(stmt.get());
  for (int i = 0; i < ncol; ++i) result.columns.emplace_back(sqlite3_column_name(stmt.get(), i));
  while (true) {
    rc = sqlite3_step(stmt.get());
    if (rc == SQLITE_DONE) break;
    if (rc != SQLITE_ROW) throw Error(ErrorCode::ExecutionError, sqlite3_errmsg(db_));
    if (result.rows.size() == row_limit) {
      result.truncated = true;
      break;
    }
    std::vector<SqlValue> row;
    row.reserve(static_cast<std::size_t>(ncol));
    for (int i = 0; i < ncol; ++i) {
      switch (sqlite3_column_type(stmt.get(), i)) {
        case SQLITE_INTEGER: row.emplace_back(static_cast<std::int64_t>(sqlite3_column_int64(stmt.get(), i))); break;
        case SQLITE_FLOAT: row.emplace_back(sqlite3_column_double(stmt.get(), i)); break;
        case SQLITE_NULL: row.emplace_back(std::monostate{}); break;
        default: row.emplace_back(std::string(reinterpret_cast<const char*>(sqlite3_column_text(stmt.get(), i))));
      }
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

}  // namespace larag
