#include <doctest.h>

#include <json.hpp>
#include <random>

#include "larag/eval_harness.hpp"
#include "larag/stub_llm.hpp"
#include "support.hpp"

using namespace larag;
using namespace larag::bench;

namespace {

GroundTruth det(bool detected) {
  GroundTruth g;
  g.category = IntentKind::detection;
  g.stats.detected = detected;
  g.stats.count = detected ? 1 : 0;
  g.tags = {"dog_bark"};
  return g;
}

GroundTruth cnt(std::int64_t n) {
  GroundTruth g;
  g.category = IntentKind::counting;
  g.stats.count = n;
  g.stats.detected = n > 0;
  g.tags = {"dog_bark"};
  return g;
}

QAPair pair_of(GroundTruth gt, std::string ref, std::string sub = "original_labels") {
  gt.subcategory = std::move(sub);
  return {"a", "q?", std::move(ref), std::move(gt)};
}

// Rubric restated for the oracle: exact 5, |d| = 1 or within 10% 3, factor
// of ten either way 1, otherwise 2.
int counting_oracle(long pred, long gt) {
  if (pred == gt) return 5;
  const long d = std::labs(pred - gt);
  if (d == 1 || (gt != 0 && static_cast<double>(d) <= 0.1 * static_cast<double>(gt))) return 3;
  if (gt == 0) return pred >= 10 ? 1 : 2;
  const double ratio = static_cast<double>(pred) / static_cast<double>(gt);
  if (ratio >= 10.0 || ratio <= 0.1) return 1;
  return 2;
}

}  // namespace

TEST_CASE("detection rubric cases") {
  CHECK(score_detection("Yes, a bark at 08:15", det(true)).value == 5);
  CHECK(score_detection("No", det(true)).value == 2);
  CHECK(score_detection("possibly", det(true)).value == 1);
  CHECK(score_detection("No. Nothing was heard.", det(false)).value == 5);
  CHECK(score_detection("None were detected.", det(false)).value == 5);
  CHECK(score_detection("Yes, probably at 08:15", det(true)).value == 4);
  CHECK(score_detection("", det(false)).value == 1);
}

TEST_CASE("counting rubric cases") {
  CHECK(score_counting("5", cnt(5)).value == 5);
  CHECK(score_counting("4 barks", cnt(5)).value == 3);
  CHECK(score_counting("50", cnt(5)).value == 1);
  CHECK(score_counting("There were 3", cnt(5)).value == 2);
  CHECK(score_counting("no idea", cnt(5)).value == 1);
  CHECK(score_counting("0", cnt(0)).value == 5);
  CHECK(score_counting("12", cnt(0)).value == 1);
  CHECK(score_counting("95", cnt(100)).value == 3);
}

TEST_CASE("counting rubric equals the restated oracle") {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<long> n(0, 300);
  for (int i = 0; i < 5000; ++i) {
    const long gt = n(rng), pred = i % 3 ? n(rng) : gt + (i % 7) - 3;
    if (pred < 0) continue;
    INFO(pred, " vs ", gt);
    CHECK(score_counting(std::to_string(pred) + " event(s)", cnt(gt)).value == counting_oracle(pred, gt));
  }
}

TEST_CASE("deterministic scorers are total") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> byte(1, 255);
  for (int i = 0; i < 2000; ++i) {
    std::string junk(static_cast<std::size_t>(i % 40), ' ');
    for (auto& c : junk) c = static_cast<char>(byte(rng));
    const int d = score_detection(junk, det(i % 2)).value;
    const int c = score_counting(junk, cnt(i % 9)).value;
    CHECK(d >= 1);
    CHECK(d <= 5);
    CHECK(c >= 1);
    CHECK(c <= 5);
    CHECK(summary_recall(junk, "- cat: 1 event(s), first at 00:00:01, last at 00:00:01") >= 0.0);
  }
}

TEST_CASE("judge parsing, retry, and failure") {
  const auto p = pair_of(GroundTruth{IntentKind::summary}, "- a");
  FunctionLlmClient five([](const ChatRequest&) { return std::string("5"); });
  CHECK(judge("q", "a", p, five).value == 5);
  CHECK(judge("q", "a", p, five).method == ScoreMethod::judge);
  int calls = 0;
  FunctionLlmClient great([&](const ChatRequest&) {
    ++calls;
    return std::string("great!");
  });
  CHECK(judge("q", "a", p, great).value == 1);
  CHECK(calls == 2);
  FunctionLlmClient late([&, n = 0](const ChatRequest&) mutable { return std::string(n++ ? "Score: 4" : "hmm"); });
  CHECK(judge("q", "a", p, late).value == 4);
  FunctionLlmClient down([](const ChatRequest&) -> std::string { throw ClientError(ErrorCode::Timeout, "x"); });
  CHECK_ERROR_CODE(judge("q", "a", p, down), ErrorCode::ClientUnavailable);
  CHECK(rubric_for(IntentKind::summary).find("5") != std::string::npos);
}

TEST_CASE("stub judge is monotone in summary recall") {
  std::vector<std::string> bullets;
  for (int i = 0; i < 8; ++i)
    bullets.push_back(summary_bullet("tag_" + std::to_string(i), i + 1, 100.0 * i, 100.0 * i + 50));
  std::string reference;
  for (const auto& b : bullets) reference += b + "\n";
  reference.pop_back();
  GroundTruth g;
  g.category = IntentKind::summary;
  const auto p = pair_of(g, reference, "generic_summary");
  StubLlmClient stub;
  int prev = 0;
  double prev_recall = -1;
  std::string answer;
  for (std::size_t k = 0; k <= bullets.size(); ++k) {
    if (k) answer += bullets[k - 1] + "\n";
    const double r = summary_recall(answer, reference);
    CHECK(r > prev_recall);
    const int s = judge("Summarize", answer, p, stub).value;
    CHECK(s >= prev);
    prev = s;
    prev_recall = r;
  }
  CHECK(prev == 5);
  CHECK(summary_recall(std::string(kNoEventsBullet), std::string(kNoEventsBullet)) == 1.0);
}

TEST_CASE("run_eval arithmetic and split") {
  std::vector<QAPair> positives;
  for (int i = 0; i < 10; ++i) positives.push_back(pair_of(det(true), "Yes"));
  const auto always_no = run_eval(positives, [](const QAPair&) { return PairOutcome{"No", {}}; });
  CHECK(always_no.by_category.at("detection").accuracy_percent() == doctest::Approx(40.0));
  const auto oracle = run_eval(positives, [](const QAPair& p) { return PairOutcome{p.reference_answer, {}}; });
  CHECK(oracle.by_category.at("detection").accuracy_percent() == doctest::Approx(100.0));

  std::vector<QAPair> mixed;
  for (int i = 0; i < 300; ++i) mixed.push_back(pair_of(det(i % 2), i % 2 ? "Yes" : "No"));
  for (int i = 0; i < 300; ++i) mixed.push_back(pair_of(cnt(i % 5), std::to_string(i % 5)));
  GroundTruth s;
  s.category = IntentKind::summary;
  for (int i = 0; i < 200; ++i) mixed.push_back(pair_of(s, std::string(kNoEventsBullet), "generic_summary"));
  std::mt19937_64 rng(3);
  const auto answer = [](const QAPair& p) {
    PairOutcome o;
    o.answer = p.ground_truth.category == IntentKind::counting ? std::to_string(p.ground_truth.stats.count + 1)
                                                               : p.reference_answer;
    if (p.question.empty()) throw std::runtime_error("unreachable");
    o.stage_ms["retrieval"] = 1.0;
    return o;
  };
  const auto r = run_eval(mixed, answer);
  CHECK(r.by_category.at("detection").n == 300);
  CHECK(r.by_category.at("counting").n == 300);
  CHECK(r.by_category.at("summary").n == 200);
  double weighted = 0;
  for (const auto& [c, st] : r.by_category) weighted += st.accuracy_percent() * static_cast<double>(st.n);
  CHECK(r.overall.accuracy_percent() == doctest::Approx(weighted / 800.0));
  CHECK(r.mean_stage_ms.at("retrieval") == doctest::Approx(1.0));
  CHECK(r.to_table().find("Detection (n=300)") != std::string::npos);
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j.contains("overall"));

  const auto par = run_eval(mixed, answer, nullptr, 4);
  CHECK(par.to_json().size() > 0);
  CHECK(par.overall.score_sum == r.overall.score_sum);
  for (std::size_t i = 0; i < r.pairs.size(); ++i) CHECK(par.pairs[i].score.value == r.pairs[i].score.value);
}

TEST_CASE("run_eval records failures as score 1 and continues") {
  std::vector<QAPair> ds{pair_of(det(true), "Yes"), pair_of(det(true), "Yes")};
  int n = 0;
  const auto r = run_eval(ds, [&](const QAPair&) -> PairOutcome {
    if (n++ == 0) throw Error(ErrorCode::StoreUnavailable, "gone");
    return {"Yes", {}};
  });
  CHECK(r.failures == 1);
  CHECK(r.pairs[0].score.value == 1);
  CHECK(r.pairs[0].failure.has_value());
  CHECK(r.pairs[1].score.value == 5);
}
