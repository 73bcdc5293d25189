#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "larag/model_clients.hpp"
#include "larag/types.hpp"

namespace larag {

/// Named daily shifts. A shift with start_s > end_s crosses midnight.
struct ShiftConfig {
  std::vector<std::pair<std::string, Span>> shifts;

  /// morning/day 08:00-16:00, afternoon/evening 16:00-24:00, night 00:00-08:00.
  static ShiftConfig defaults();

  std::optional<Span> find(std::string_view name) const;
  /// Lowercases names and checks bounds; throws Error(InvalidArgument).
  void normalize_and_validate();
};

/// Lowercase, "p.m." -> "pm", punctuation stripped, whitespace collapsed.
std::string normalize_time_text(std::string_view text);

/// Builds an interval from a start and an end that may run past midnight
/// (end > 86400); the overflow becomes the continuation span.
TimeInterval make_interval(double start_s, double end_s, ExpressionType type, ResolutionSource source);

std::optional<TimeInterval> resolve_rules(std::string_view text, const ShiftConfig& config);

/// Prompt for the fallback resolver: day bounds and shift table in the
/// system message, the raw question as the user message.
ChatRequest time_fallback_request(std::string_view text, const ShiftConfig& config);

/// Strict reply grammar: {"start":"HH:MM:SS","end":"HH:MM:SS"} or NONE.
std::optional<TimeInterval> parse_time_reply(std::string_view reply);

/// Throws ClientError when the client is unreachable.
std::optional<TimeInterval> resolve_llm(std::string_view text, const ShiftConfig& config, LlmClient& client);

/// True when the text mentions anything time-like: digits, clock words,
/// period or shift names, or temporal prepositions.
bool has_time_cue(std::string_view text, const ShiftConfig& config);

/// Rules, then the fallback client when given and the text has a time cue,
/// then the full day. Never throws.
TimeInterval resolve(std::string_view text, const ShiftConfig& config, LlmClient* client = nullptr);

// Evaluation over a labelled suite of questions.

struct TimeCase {
  std::string question;
  std::string expected_start;
  std::string expected_end;
  std::string category;
  std::string difficulty;
};

enum class TimeStrategy { rules_only, llm_only, combined };
std::string_view to_string(TimeStrategy strategy);

struct CategoryAccuracy {
  int correct = 0;
  int total = 0;
  double percent() const { return total ? 100.0 * correct / total : 0.0; }
};

struct TimeSuiteReport {
  std::map<std::string, CategoryAccuracy> by_category;
  std::map<std::string, CategoryAccuracy> by_difficulty;
  CategoryAccuracy overall;
  std::vector<std::string> failures;
};

inline const std::vector<std::string>& time_suite_categories() {
  static const std::vector<std::string> kCategories = {
      "explicit_time_ranges", "shift_based", "relative_durations", "before_after",
      "half_periods",         "full_day_implicit", "typos_and_variations", "edge_cases"};
  return kCategories;
}

std::vector<TimeCase> load_time_suite(const std::string& path);
TimeSuiteReport run_time_suite(const std::vector<TimeCase>& cases, TimeStrategy strategy,
                               const ShiftConfig& config, LlmClient* client);

}  // namespace larag
