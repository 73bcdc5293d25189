#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "larag/benchgen.hpp"
#include "larag/model_clients.hpp"

namespace larag {

enum class ScoreMethod { deterministic, judge };
std::string_view to_string(ScoreMethod method);

struct Score {
  int value = 1;  // 1..5
  ScoreMethod method = ScoreMethod::deterministic;
  std::string rationale;
};

/// First polarity token (yes / no / none) decides. Correct 5, correct but
/// hedged 4, wrong 2, no polarity 1.
Score score_detection(std::string_view answer, const bench::GroundTruth& gt);

/// First integer in the answer. Exact 5; off by one or within 10% 3; a factor
/// of 10 or more either way 1; other misses 2; no integer 1.
Score score_counting(std::string_view answer, const bench::GroundTruth& gt);

/// Fraction of reference bullet lines reproduced verbatim in the answer.
double summary_recall(std::string_view answer, std::string_view reference);
/// 1 + round(4 * recall).
Score score_summary_recall(std::string_view answer, std::string_view reference);

std::string rubric_for(IntentKind category);

/// LLM judge: integer 1-5 parsed from the reply, one retry, then 1. Throws
/// ClientError(ClientUnavailable) when the client cannot be reached.
Score judge(std::string_view question, std::string_view answer, const bench::QAPair& pair, LlmClient& client);

struct PairOutcome {
  std::string answer;
  std::map<std::string, double> stage_ms;
};

using AnswerFn = std::function<PairOutcome(const bench::QAPair&)>;

struct PairResult {
  std::size_t index = 0;
  std::string category;
  std::string subcategory;
  std::string question;
  std::string answer;
  Score score;
  double latency_s = 0.0;
  std::optional<std::string> failure;
};

struct CategoryStats {
  std::size_t n = 0;
  double score_sum = 0.0;
  double accuracy_percent() const { return n ? score_sum / static_cast<double>(n) / 5.0 * 100.0 : 0.0; }
};

struct Report {
  std::map<std::string, CategoryStats> by_category;     // detection, counting, summary
  std::map<std::string, CategoryStats> by_subcategory;  // phase names
  CategoryStats overall;
  double mean_latency_s = 0.0;
  std::map<std::string, double> mean_stage_ms;
  std::vector<PairResult> pairs;
  std::size_t failures = 0;

  /// Detection / Counting / Summary / Overall percentages and latency.
  std::string to_table() const;
  std::string to_json() const;
};

/// Scores every pair (detection and counting deterministically, summaries by
/// the judge when given, else by bullet recall). jobs > 1 evaluates pairs in
/// parallel; aggregation runs in dataset order either way.
Report run_eval(const std::vector<bench::QAPair>& dataset, const AnswerFn& answer_fn, LlmClient* judge_client = nullptr,
                int jobs = 1);

}  // namespace larag
