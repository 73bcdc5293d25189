#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "larag/anomaly.hpp"
#include "larag/stub_llm.hpp"
#include "support.hpp"

using namespace larag;

namespace {

EventRecord ev(const std::string& tag, double start, std::optional<double> lufs = -20.0) {
  EventRecord e;
  e.audio_id = "a";
  e.tag = tag;
  e.start_s = start;
  e.end_s = start + 1;
  e.loudness_lufs = lufs;
  return e;
}

// O(n^2) splitter: two starts share a cluster iff every consecutive gap
// between them is within the limit.
std::vector<StartCluster> brute_clusters(std::vector<double> starts, double gap_s) {
  std::sort(starts.begin(), starts.end());
  std::vector<StartCluster> out;
  std::vector<bool> used(starts.size(), false);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    if (used[i]) continue;
    StartCluster c{0, starts[i], starts[i], 0};
    double sum = 0;
    for (std::size_t j = i; j < starts.size(); ++j) {
      bool linked = true;
      for (std::size_t m = i; m < j; ++m)
        if (starts[m + 1] - starts[m] > gap_s) linked = false;
      if (!linked) break;
      used[j] = true;
      c.max_s = starts[j];
      ++c.size;
      sum += starts[j];
    }
    c.center_s = sum / static_cast<double>(c.size);
    out.push_back(c);
  }
  return out;
}

double brute_distance_min(double t, const std::vector<StartCluster>& cs) {
  double best = 1e18;
  for (const auto& c : cs) {
    const double d = t < c.min_s ? c.min_s - t : t > c.max_s ? t - c.max_s : 0.0;
    best = std::min(best, d);
  }
  return best / 60.0;
}

}  // namespace

TEST_CASE("fit_baseline examples") {
  const std::vector<EventRecord> hist{ev("m", 8 * 3600), ev("m", 8 * 3600 + 600), ev("m", 14 * 3600)};
  const auto b = fit_baseline(hist, 30);
  const auto& m = b.at("m");
  REQUIRE(m.start_clusters.size() == 2);
  CHECK(m.start_clusters[0].min_s == 28800);
  CHECK(m.start_clusters[0].max_s == 29400);
  CHECK(m.start_clusters[0].size == 2);
  CHECK(m.start_clusters[1].min_s == 50400);
  CHECK(m.loudness_std == 0.0);
  CHECK(m.loudness_mean == -20.0);
  CHECK(m.sufficient());
  CHECK_FALSE(fit_baseline(std::vector{ev("x", 1)}).at("x").sufficient());
}

TEST_CASE("fit_baseline: clusters equal the brute-force splitter, permutation-invariant") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> t(0, 86400), l(-35, -10);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EventRecord> hist;
    std::vector<double> starts;
    const int n = 2 + trial % 40;
    for (int i = 0; i < n; ++i) {
      hist.push_back(ev("x", t(rng), l(rng)));
      starts.push_back(hist.back().start_s);
    }
    const double gap = 10.0 + trial;
    const auto b = fit_baseline(hist, gap);
    const auto expect = brute_clusters(starts, gap * 60);
    const auto& got = b.at("x").start_clusters;
    REQUIRE(got.size() == expect.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].min_s == expect[i].min_s);
      CHECK(got[i].max_s == expect[i].max_s);
      CHECK(got[i].size == expect[i].size);
      CHECK(got[i].center_s == doctest::Approx(expect[i].center_s));
      if (i) CHECK(got[i - 1].max_s < got[i].min_s);
    }
    std::shuffle(hist.begin(), hist.end(), rng);
    const auto b2 = fit_baseline(hist, gap);
    CHECK(b2.at("x").start_clusters == got);
    CHECK(b2.at("x").loudness_mean == doctest::Approx(b.at("x").loudness_mean));
    CHECK(b2.at("x").loudness_std == doctest::Approx(b.at("x").loudness_std));
    CHECK(b.at("x").loudness_std >= 0.0);
  }
}

TEST_CASE("loudness examples") {
  Baselines b;
  b["m"] = TagBaseline{"m", -20, 2, 10, {}, 10};
  const auto r = loudness_anomalies(std::vector{ev("m", 5, -40.0)}, b, 3.0);
  REQUIRE(r.records.size() == 1);
  CHECK(r.records[0].deviation == doctest::Approx(10.0));
  CHECK(r.records[0].expected_low == doctest::Approx(-26.0));
  CHECK(r.records[0].expected_high == doctest::Approx(-14.0));
  CHECK(loudness_anomalies(std::vector{ev("m", 5, -26.0), ev("m", 6, -14.0)}, b, 3.0).records.empty());
  const auto missing = loudness_anomalies(std::vector{ev("other", 5, -40.0)}, b);
  CHECK(missing.records.empty());
  CHECK(missing.skipped_tags == std::vector<std::string>{"other"});
  Baselines flat;
  flat["f"] = TagBaseline{"f", -20, 0, 5, {}, 5};
  CHECK(loudness_anomalies(std::vector{ev("f", 5, -20.0)}, flat).records.empty());
  CHECK(loudness_anomalies(std::vector{ev("f", 5, -20.5)}, flat).records.size() == 1);
  CHECK(loudness_anomalies(std::vector{ev("m", 5, std::nullopt)}, b).records.empty());
}

TEST_CASE("injected outliers at z=6 are exactly the flagged set") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(-22.0, 2.5);
    std::vector<EventRecord> hist;
    for (int i = 0; i < 50; ++i) hist.push_back(ev("m", i * 600.0, g(rng)));
    const auto b = fit_baseline(hist);
    const double mean = b.at("m").loudness_mean, sd = b.at("m").loudness_std;
    std::uniform_real_distribution<double> inside(mean - 2.9 * sd, mean + 2.9 * sd);
    std::vector<EventRecord> day;
    std::set<double> injected;
    for (int i = 0; i < 50; ++i) day.push_back(ev("m", 40000 + i * 60.0, inside(rng)));
    for (int i = 0; i < 5; ++i) {
      const double t = 70000 + i * 60.0;
      day.push_back(ev("m", t, mean + (i % 2 ? 6.0 : -6.0) * sd));
      injected.insert(t);
    }
    const auto r = loudness_anomalies(day, b, 3.0);
    std::set<double> flagged;
    for (const auto& rec : r.records) {
      flagged.insert(rec.event.start_s);
      CHECK(rec.deviation > 3.0);
      CHECK(rec.expected_low <= rec.expected_high);
    }
    CHECK(flagged == injected);
  }
}

TEST_CASE("start-time examples") {
  const std::vector<EventRecord> hist{ev("m", 8 * 3600), ev("m", 8 * 3600 + 600)};
  const auto b = fit_baseline(hist);
  CHECK(start_time_anomalies(std::vector{ev("m", 8 * 3600 + 1800)}, b).records.empty());
  const auto r = start_time_anomalies(std::vector{ev("m", 3 * 3600)}, b);
  REQUIRE(r.records.size() == 1);
  // 03:00 to the range start 08:00 is five hours
  CHECK(r.records[0].deviation == doctest::Approx(300.0));
  CHECK(r.records[0].kind == AnomalyKind::start_time);
}

TEST_CASE("start-time distances equal the brute-force nearest range") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> t(0, 86400);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EventRecord> hist;
    for (int i = 0; i < 2 + trial % 20; ++i) hist.push_back(ev("x", t(rng)));
    const auto b = fit_baseline(hist);
    const double limit = 5.0 + trial % 60;
    for (int i = 0; i < 20; ++i) {
      const auto e = ev("x", t(rng));
      const double d = brute_distance_min(e.start_s, b.at("x").start_clusters);
      const auto r = start_time_anomalies(std::vector{e}, b, limit);
      CHECK(r.records.size() == (d > limit ? 1u : 0u));
      if (!r.records.empty()) CHECK(r.records[0].deviation == doctest::Approx(d));
    }
  }
}

TEST_CASE("no anomalies on data drawn from the baseline ranges") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed + 1000);
    std::normal_distribution<double> g(-24.0, 3.0);
    std::uniform_real_distribution<double> t(0, 86400);
    std::vector<EventRecord> hist;
    for (int i = 0; i < 60; ++i) hist.push_back(ev("y", t(rng), g(rng)));
    const auto b = fit_baseline(hist);
    const auto& base = b.at("y");
    std::uniform_real_distribution<double> l(base.loudness_mean - 3 * base.loudness_std,
                                             base.loudness_mean + 3 * base.loudness_std);
    std::uniform_int_distribution<std::size_t> pick(0, base.start_clusters.size() - 1);
    std::vector<EventRecord> day;
    for (int i = 0; i < 50; ++i) {
      const auto& c = base.start_clusters[pick(rng)];
      day.push_back(ev("y", std::uniform_real_distribution<double>(c.min_s, c.max_s)(rng), l(rng)));
    }
    CHECK(loudness_anomalies(day, b).records.empty());
    CHECK(start_time_anomalies(day, b).records.empty());
  }
}

TEST_CASE("table rendering") {
  const auto header = render_anomaly_table({});
  CHECK(std::count(header.begin(), header.end(), '\n') == 1);
  CHECK(header.rfind("time", 0) == 0);
  AnomalyRecord r{ev("m", 3605), AnomalyKind::loudness, -40, -26, -14, 10};
  const auto one = render_anomaly_table({r});
  CHECK(std::count(one.begin(), one.end(), '\n') == 2);
  CHECK(one.find("01:00:05") != std::string::npos);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> t(0, 86400);
  std::vector<AnomalyRecord> recs;
  for (int i = 0; i < 30; ++i) recs.push_back({ev("m" + std::to_string(i), t(rng)), AnomalyKind::loudness, -40, -26, -14, 10});
  auto sorted = recs;
  std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.event.start_s < b.event.start_s; });
  std::shuffle(recs.begin(), recs.end(), rng);
  const auto table = render_anomaly_table(recs);
  std::size_t pos = 0;
  for (const auto& s : sorted) {
    const auto at = table.find(s.event.tag + " ", pos);
    REQUIRE(at != std::string::npos);
    pos = at;
  }
}

TEST_CASE("explanation prompt and fallback") {
  AnomalyRecord a{ev("m", 100), AnomalyKind::loudness, -40, -26, -14, 10};
  AnomalyRecord b{ev("n", 200), AnomalyKind::start_time, 200, 28800, 29400, 476.7};
  const auto table = render_anomaly_table({a, b});
  StubLlmClient stub;
  CHECK(explain_anomalies(table, std::nullopt, stub).rfind("2 anomalies found", 0) == 0);
  const auto plain = anomaly_explain_request(table, std::nullopt);
  CHECK(plain.messages.at(1).content.find("Manual excerpt") == std::string::npos);
  const std::string manual = "Check the press bearing every 500 cycles.";
  const auto with = anomaly_explain_request(table, manual);
  CHECK(with.messages.at(1).content.find(manual) != std::string::npos);
  CHECK(with.messages.at(1).content.find(table) != std::string::npos);
  FunctionLlmClient down([](const ChatRequest&) -> std::string { throw ClientError(ErrorCode::Timeout, "x"); });
  const auto fb = explain_anomalies(table, manual, down);
  CHECK(fb.rfind(table, 0) == 0);
  CHECK(fb.find("no explanation available") != std::string::npos);
}

TEST_CASE("subtype routing") {
  CHECK(anomaly_subtype("any unusual loudness on the press?") == AnomalySubtype::loudness);
  CHECK(anomaly_subtype("did anything start at an unusual time") == AnomalySubtype::start_time);
  CHECK(anomaly_subtype("pitch anomalies in the motor") == AnomalySubtype::pitch);
  CHECK(anomaly_subtype("show anomalies") == AnomalySubtype::any);
}
