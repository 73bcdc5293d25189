#include "larag/eval_harness.hpp"

#include <fmt/format.h>
#include <omp.h>

#include <cmath>
#include <json.hpp>
#include <regex>
#include <sstream>

#include "larag/clock.hpp"
#include "larag/error.hpp"
#include "larag/intent_classifier.hpp"
#include "larag/prompts.hpp"

namespace larag {

using nlohmann::json;

std::string_view to_string(ScoreMethod method) { return method == ScoreMethod::judge ? "judge" : "deterministic"; }

Score score_detection(std::string_view answer, const bench::GroundTruth& gt) {
  std::stringstream ss(normalize_words(answer));
  int polarity = 0;
  bool hedged = false;
  for (std::string w; ss >> w;) {
    if (w == "probably" || w == "likely" || w == "might" || w == "maybe" || w == "possibly" || w == "perhaps" ||
        w == "unclear" || w == "uncertain")
      hedged = true;
    if (polarity == 0 && w == "yes") polarity = 1;
    if (polarity == 0 && (w == "no" || w == "none")) polarity = -1;
  }
  if (polarity == 0) return {1, ScoreMethod::deterministic, "no yes/no answer found"};
  const bool correct = (polarity > 0) == gt.stats.detected;
  if (!correct) return {2, ScoreMethod::deterministic, "wrong polarity"};
  if (hedged) return {4, ScoreMethod::deterministic, "correct but hedged"};
  return {5, ScoreMethod::deterministic, "correct"};
}

Score score_counting(std::string_view answer, const bench::GroundTruth& gt) {
  static const std::regex kInt(R"(\d+)");
  const std::string text(answer);
  std::smatch m;
  if (!std::regex_search(text, m, kInt)) return {1, ScoreMethod::deterministic, "no integer found"};
  double pred = 0;
  try {
    pred = std::stod(m.str());
  } catch (const std::exception&) {
    return {1, ScoreMethod::deterministic, "integer out of range"};
  }
  const double truth = static_cast<double>(gt.stats.count);
  const double diff = std::abs(pred - truth);
  if (diff == 0) return {5, ScoreMethod::deterministic, "exact"};
  if (diff == 1 || (truth > 0 && diff / truth <= 0.10)) return {3, ScoreMethod::deterministic, "off by one or within 10%"};
  const bool magnitude = truth == 0 ? pred >= 10 : (pred / truth >= 10 || pred / truth <= 0.1);
  if (magnitude) return {1, ScoreMethod::deterministic, "order-of-magnitude error"};
  return {2, ScoreMethod::deterministic, fmt::format("off by {}", diff)};
}

double summary_recall(std::string_view answer, std::string_view reference) {
  std::vector<std::string> bullets;
  std::stringstream ss{std::string(reference)};
  for (std::string line; std::getline(ss, line);) {
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    bullets.push_back(line.substr(b, line.find_last_not_of(" \t\r") - b + 1));
  }
  if (bullets.empty()) return 0.0;
  const std::string lower = to_lower(answer);
  std::size_t hit = 0;
  for (const auto& b : bullets) {
    const bool ok = b == bench::kNoEventsBullet ? lower.find("no events") != std::string::npos
                                               : answer.find(b) != std::string_view::npos;
    hit += ok ? 1 : 0;
  }
  return static_cast<double>(hit) / static_cast<double>(bullets.size());
}

Score score_summary_recall(std::string_view answer, std::string_view reference) {
  const double r = summary_recall(answer, reference);
  return {1 + static_cast<int>(std::lround(4.0 * r)), ScoreMethod::deterministic, fmt::format("bullet recall {:.2f}", r)};
}

std::string rubric_for(IntentKind category) {
  switch (category) {
    case IntentKind::detection:
      return "5: correct yes/no, optionally with supporting times\n4: correct but hedged\n"
             "2: wrong yes/no (incorrect answers never exceed 2)\n1: no usable yes/no";
    case IntentKind::counting:
      return "5: exact count\n3: off by one or within 10%\n2: wrong count\n1: order-of-magnitude error or no count";
    case IntentKind::summary:
    case IntentKind::anomaly:
      return "5: every key point of the reference with correct times and order\n4: minor omissions\n"
             "3: about half of the key points\n2: mostly missing or wrong\n1: unrelated or fabricated";
  }
  return {};
}

Score judge(std::string_view question, std::string_view answer, const bench::QAPair& pair, LlmClient& client) {
  const std::string user = prompts::render(prompts::template_text("judge"),
                                           {{"category", std::string(to_string(pair.ground_truth.category))},
                                            {"rubric", rubric_for(pair.ground_truth.category)},
                                            {"question", std::string(question)},
                                            {"reference", pair.reference_answer},
                                            {"answer", std::string(answer)}});
  const ChatRequest request{{{"system", prompts::system_message("judge")}, {"user", user}}, 8, 0.0};
  static const std::regex kDigit(R"(\b([1-5])\b)");
  for (int attempt = 0; attempt < 2; ++attempt) {
    std::string reply;
    try {
      reply = client.complete(request);
    } catch (const std::exception& e) {
      throw ClientError(ErrorCode::ClientUnavailable, fmt::format("judge unavailable: {}", e.what()));
    }
    std::smatch m;
    if (std::regex_search(reply, m, kDigit)) return {std::stoi(m[1].str()), ScoreMethod::judge, reply};
  }
  return {1, ScoreMethod::judge, "unparseable judge reply"};
}

Report run_eval(const std::vector<bench::QAPair>& dataset, const AnswerFn& answer_fn, LlmClient* judge_client,
                int jobs) {
  if (dataset.empty()) throw Error(ErrorCode::InvalidArgument, "empty dataset");
  Report report;
  report.pairs.resize(dataset.size());
  std::vector<std::map<std::string, double>> stages(dataset.size());
  const long n = static_cast<long>(dataset.size());

#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, jobs)) if (jobs > 1)
  for (long i = 0; i < n; ++i) {
    const auto& pair = dataset[static_cast<std::size_t>(i)];
    PairResult& r = report.pairs[static_cast<std::size_t>(i)];
    r.index = static_cast<std::size_t>(i);
    r.category = std::string(to_string(pair.ground_truth.category));
    r.subcategory = pair.ground_truth.subcategory;
    r.question = pair.question;
    const double t0 = steady_ms();
    try {
      PairOutcome outcome = answer_fn(pair);
      r.latency_s = (steady_ms() - t0) / 1000.0;
      r.answer = std::move(outcome.answer);
      stages[static_cast<std::size_t>(i)] = std::move(outcome.stage_ms);
      switch (pair.ground_truth.category) {
        case IntentKind::detection: r.score = score_detection(r.answer, pair.ground_truth); break;
        case IntentKind::counting: r.score = score_counting(r.answer, pair.ground_truth); break;
        default:
          r.score = judge_client ? judge(pair.question, r.answer, pair, *judge_client)
                                 : score_summary_recall(r.answer, pair.reference_answer);
      }
    } catch (const std::exception& e) {
      r.latency_s = (steady_ms() - t0) / 1000.0;
      r.failure = e.what();
      r.score = {1, ScoreMethod::deterministic, std::string("failed: ") + e.what()};
    }
  }

  double latency_sum = 0.0;
  std::map<std::string, double> stage_sum;
  for (std::size_t i = 0; i < report.pairs.size(); ++i) {
    const auto& r = report.pairs[i];
    for (auto* bucket : {&report.by_category[r.category], &report.by_subcategory[r.subcategory], &report.overall}) {
      bucket->n++;
      bucket->score_sum += r.score.value;
    }
    latency_sum += r.latency_s;
    for (const auto& [stage, ms] : stages[i]) stage_sum[stage] += ms;
    if (r.failure) ++report.failures;
  }
  report.mean_latency_s = latency_sum / static_cast<double>(report.pairs.size());
  for (const auto& [stage, sum] : stage_sum) report.mean_stage_ms[stage] = sum / static_cast<double>(report.pairs.size());
  return report;
}

std::string Report::to_table() const {
  auto pct = [&](const char* cat) {
    auto it = by_category.find(cat);
    return it == by_category.end() ? std::string("-") : fmt::format("{:.2f}", it->second.accuracy_percent());
  };
  auto count = [&](const char* cat) {
    auto it = by_category.find(cat);
    return it == by_category.end() ? std::size_t{0} : it->second.n;
  };
  std::string out = fmt::format("{:<20}{:<20}{:<20}{:<10}{}\n", fmt::format("Detection (n={})", count("detection")),
                                fmt::format("Counting (n={})", count("counting")),
                                fmt::format("Summary (n={})", count("summary")), "Overall", "Latency (s)");
  out += fmt::format("{:<20}{:<20}{:<20}{:<10}{:.4f}\n", pct("detection"), pct("counting"), pct("summary"),
                     fmt::format("{:.2f}", overall.accuracy_percent()), mean_latency_s);
  if (!mean_stage_ms.empty()) {
    out += "stage means (ms):";
    for (const auto& [stage, ms] : mean_stage_ms) out += fmt::format(" {}={:.3f}", stage, ms);
    out += '\n';
  }
  if (failures) out += fmt::format("failed pairs: {}\n", failures);
  return out;
}

std::string Report::to_json() const {
  json doc;
  for (const auto& [cat, st] : by_category) doc["categories"][cat] = {{"n", st.n}, {"accuracy", st.accuracy_percent()}};
  for (const auto& [cat, st] : by_subcategory)
    doc["subcategories"][cat] = {{"n", st.n}, {"accuracy", st.accuracy_percent()}};
  doc["overall"] = {{"n", overall.n}, {"accuracy", overall.accuracy_percent()}};
  doc["mean_latency_s"] = mean_latency_s;
  doc["mean_stage_ms"] = mean_stage_ms;
  doc["failures"] = failures;
  json rows = json::array();
  for (const auto& r : pairs) {
    json row{{"index", r.index},          {"category", r.category}, {"subcategory", r.subcategory},
             {"question", r.question},    {"answer", r.answer},     {"score", r.score.value},
             {"method", std::string(to_string(r.score.method))}, {"rationale", r.score.rationale},
             {"latency_s", r.latency_s}};
    if (r.failure) row["failure"] = *r.failure;
    rows.push_back(std::move(row));
  }
  doc["pairs"] = std::move(rows);
  return doc.dump(2);
}

}  // namespace larag
