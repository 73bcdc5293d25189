#include <doctest.h>

#include <filesystem>
#include <random>
#include <set>
#include <thread>

#include "larag/event_store.hpp"
#include "support.hpp"

using namespace larag;

namespace {

EventRecord ev(std::string tag, double start, double end = -1, std::string audio = "a") {
  EventRecord r;
  r.audio_id = std::move(audio);
  r.tag = std::move(tag);
  r.start_s = start;
  r.end_s = end < 0 ? start + 1.0 : end;
  r.confidence = 0.9;
  r.loudness_lufs = -20.0;
  return r;
}

TimeInterval iv(double a, double b) {
  TimeInterval t;
  t.start_s = a;
  t.end_s = b;
  t.type = ExpressionType::h24;
  return t;
}

const std::vector<std::string> kTags = {"dog_bark", "cat", "door_knock", "snoring", "alarm"};

// Random store with unique (tag, start) keys; starts on a 0.1 s grid.
std::vector<EventRecord> random_events(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> tick(0, 863999);
  std::uniform_int_distribution<std::size_t> tag(0, kTags.size() - 1);
  std::set<std::pair<std::string, int>> seen;
  std::vector<EventRecord> out;
  while (out.size() < n) {
    const auto t = kTags[tag(rng)];
    const int s = tick(rng);
    if (!seen.insert({t, s}).second) continue;
    out.push_back(ev(t, s / 10.0));
  }
  return out;
}

std::vector<EventRecord> scan(const std::vector<EventRecord>& all, const TimeInterval& i,
                              const std::optional<std::string>& tag = std::nullopt) {
  std::vector<EventRecord> out;
  for (const auto& e : all)
    if (i.contains(e.start_s) && (!tag || e.tag == *tag)) out.push_back(e);
  std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return x.start_s < y.start_s || (x.start_s == y.start_s && x.tag < y.tag);
  });
  return out;
}

bool same_events(const std::vector<EventRecord>& a, const std::vector<EventRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!a[i].same_content(b[i])) return false;
  return true;
}

}  // namespace

TEST_CASE("schema exposes exactly the published columns") {
  EventStore store;
  const auto r = store.execute_readonly("SELECT * FROM events");
  CHECK(r.columns ==
        std::vector<std::string>{"id", "audio_id", "tag", "start_s", "end_s", "confidence", "loudness_lufs"});
}

TEST_CASE("insert: count, atomicity, duplicates") {
  EventStore store;
  std::vector<EventRecord> three{ev("a", 1), ev("b", 2), ev("c", 3)};
  CHECK(store.insert_events(three) == 3);
  CHECK(store.count() == 3);

  std::vector<EventRecord> dup{ev("x", 5), ev("x", 5)};
  CHECK_ERROR_CODE(store.insert_events(dup), ErrorCode::ConstraintViolation);
  CHECK(store.count() == 3);

  std::vector<EventRecord> clash{ev("z", 9), ev("a", 1)};
  CHECK_ERROR_CODE(store.insert_events(clash), ErrorCode::ConstraintViolation);
  CHECK(store.count() == 3);
}

TEST_CASE("insert: invariant violations are rejected") {
  EventStore store;
  auto bad = ev("a", 5, 4);
  CHECK_ERROR_CODE(store.insert_events(std::vector{bad}), ErrorCode::ConstraintViolation);
  auto conf = ev("a", 1);
  conf.confidence = 1.2;
  CHECK_ERROR_CODE(store.insert_events(std::vector{conf}), ErrorCode::ConstraintViolation);
  CHECK(store.count() == 0);
}

TEST_CASE("ingest is idempotent") {
  EventStore store;
  std::vector<EventRecord> three{ev("a", 1), ev("b", 2), ev("c", 3)};
  auto r1 = store.ingest(three);
  CHECK(r1.inserted == 3);
  CHECK(r1.skipped == 0);
  auto r2 = store.ingest(three);
  CHECK(r2.inserted == 0);
  CHECK(r2.skipped == 3);
  auto changed = three;
  changed[1].end_s = 10;
  CHECK_ERROR_CODE(store.ingest(changed), ErrorCode::ConstraintViolation);
  CHECK(store.count() == 3);
}

TEST_CASE("10,000 records round-trip through count") {
  std::mt19937_64 rng(1);
  EventStore store;
  const auto all = random_events(rng, 10000);
  CHECK(store.insert_events(all) == 10000);
  CHECK(store.count() == 10000);
  CHECK(store.count(std::string("a")) == 10000);
}

TEST_CASE("query_interval boundary semantics") {
  EventStore store;
  store.insert_events(std::vector{ev("t", 100), ev("t", 200), ev("u", 150)});
  const auto r = store.query_interval("a", iv(0, 150));
  REQUIRE(r.size() == 1);
  CHECK(r[0].start_s == 100);
  CHECK(store.query_interval("a", iv(100, 200)).size() == 2);  // 100 and 150, not 200
  CHECK(store.query_interval("a", TimeInterval::full_day()).size() == 3);
  CHECK(store.query_interval("a", iv(0, 86400), std::vector<std::string>{"u"}).size() == 1);
  CHECK(store.query_interval("a", iv(0, 86400), std::vector<std::string>{}).empty());
  CHECK_ERROR_CODE(store.query_interval("missing", iv(0, 10)), ErrorCode::UnknownAudioId);
  CHECK_ERROR_CODE(store.aggregate("missing", iv(0, 10), "t"), ErrorCode::UnknownAudioId);
}

TEST_CASE("continuation spans are included") {
  EventStore store;
  store.insert_events(std::vector{ev("t", 100), ev("t", 80000), ev("t", 40000)});
  TimeInterval night = iv(79200, 86400);
  night.continuation = Span{0, 21600};
  CHECK(store.query_interval("a", night).size() == 2);
  CHECK(store.aggregate("a", night, "t").count == 2);
}

TEST_CASE("aggregate examples") {
  EventStore store;
  store.insert_events(std::vector{ev("t", 100), ev("t", 300), ev("u", 200)});
  CHECK(store.aggregate("a", iv(400, 500), "t") == IntervalStats{0, std::nullopt, std::nullopt});
  CHECK(store.aggregate("a", iv(0, 86400), "t") == IntervalStats{2, 100.0, 300.0});
}

TEST_CASE("query_interval and aggregate equal the linear-scan oracle") {
  std::mt19937_64 rng(7);
  EventStore store;
  const auto all = random_events(rng, 1000);
  store.insert_events(all);
  std::uniform_real_distribution<double> t(0, 86400);
  std::uniform_int_distribution<std::size_t> tag(0, kTags.size() - 1);
  for (int i = 0; i < 100; ++i) {
    double a = t(rng), b = t(rng);
    if (a > b) std::swap(a, b);
    const auto interval = iv(a, b);
    CHECK(same_events(store.query_interval("a", interval), scan(all, interval)));
    const auto tg = kTags[tag(rng)];
    const auto expect = scan(all, interval, tg);
    CHECK(same_events(store.query_interval("a", interval, std::vector{tg}), expect));
    const auto agg = store.aggregate("a", interval, tg);
    CHECK(agg.count == static_cast<std::int64_t>(expect.size()));
    CHECK(agg.first_s == (expect.empty() ? std::nullopt : std::optional<double>(expect.front().start_s)));
    if (!expect.empty()) {
      double last = 0;
      for (const auto& e : expect) last = std::max(last, e.start_s);
      CHECK(agg.last_s == last);
    }
    CHECK((agg.count == 0) == (!agg.first_s && !agg.last_s));
  }
}

TEST_CASE("partition additivity") {
  std::mt19937_64 rng(8);
  EventStore store;
  store.insert_events(random_events(rng, 800));
  const auto whole = store.query_interval("a", TimeInterval::full_day());
  std::uniform_real_distribution<double> t(0, 86400);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> cuts{0, 86400};
    for (int c = 0; c < 1 + trial % 9; ++c) cuts.push_back(t(rng));
    std::sort(cuts.begin(), cuts.end());
    std::size_t total = 0;
    std::int64_t dog = 0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      total += store.query_interval("a", iv(cuts[i], cuts[i + 1])).size();
      dog += store.aggregate("a", iv(cuts[i], cuts[i + 1]), "dog_bark").count;
    }
    CHECK(total == whole.size());
    CHECK(dog == store.aggregate("a", TimeInterval::full_day(), "dog_bark").count);
  }
}

TEST_CASE("read-only execution rejects writes and other tables") {
  EventStore store;
  store.insert_events(std::vector{ev("t", 1)});
  CHECK(store.execute_readonly("SELECT COUNT(*) FROM events").rows.at(0).at(0) == SqlValue{std::int64_t{1}});
  CHECK_ERROR_CODE(store.execute_readonly("DELETE FROM events"), ErrorCode::InvalidSQL);
  CHECK_ERROR_CODE(store.execute_readonly("SELECT * FROM audio_sources"), ErrorCode::InvalidSQL);
  CHECK_ERROR_CODE(store.execute_readonly("SELECT 1; SELECT 2"), ErrorCode::InvalidSQL);
  CHECK(store.count() == 1);
  const auto limited = store.execute_readonly("SELECT * FROM events", 0);
  CHECK(limited.truncated);
}

TEST_CASE("file-backed store persists and readers run alongside a writer") {
  const auto path = std::filesystem::temp_directory_path() / "larag_store_test.db";
  std::filesystem::remove(path);
  {
    EventStore store(path.string());
    std::mt19937_64 rng(2);
    const auto all = random_events(rng, 2000);
    std::thread writer([&] {
      for (std::size_t i = 0; i < all.size(); i += 100)
        store.insert_events(std::span(all).subspan(i, 100));
    });
    std::int64_t prev = 0;
    for (int i = 0; i < 50; ++i) {
      const auto n = store.count();
      CHECK(n % 100 == 0);  // batches are atomic
      CHECK(n >= prev);
      prev = n;
    }
    writer.join();
  }
  EventStore reopened(path.string());
  CHECK(reopened.count() == 2000);
  std::filesystem::remove(path);
}
