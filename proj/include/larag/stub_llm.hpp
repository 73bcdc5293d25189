#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "larag/model_clients.hpp"
#include "larag/time_resolution.hpp"

namespace larag {

/// Deterministic offline stand-in for the chat model. Dispatches on the
/// "### task: <name>" first line of the system message and answers only from
/// what the prompt contains, so its output is an oracle over the evidence.
class StubLlmClient final : public LlmClient {
 public:
  StubLlmClient();
  /// Extra surface forms per tag, on top of the builtin domain synonyms.
  explicit StubLlmClient(std::map<std::string, std::vector<std::string>> extra_synonyms);

  std::string complete(const ChatRequest& request) override;

  /// Longest surface form of a vocabulary tag found in the text on word
  /// boundaries (plural "s"/"es" tolerated).
  std::optional<std::string> link_tag(std::string_view text, const std::vector<std::string>& vocabulary) const;

 private:
  std::string answer_from_evidence(const std::string& task, const std::string& prompt) const;
  std::string rephrase(const std::string& prompt) const;
  std::string time_resolution(const ChatRequest& request) const;
  std::string judge(const std::string& prompt) const;
  std::string text2sql(const std::string& prompt) const;
  std::string sql_answer(const std::string& prompt) const;
  std::string rag_answer(const std::string& prompt) const;
  std::string anomaly_explain(const std::string& prompt) const;

  std::map<std::string, std::vector<std::string>> forms_;
};

/// Colloquial phrases and near-miss spellings rewritten into text the rule
/// resolver understands ("lunchtime", "aftr 5pm", "14.30").
std::string repair_time_text(std::string_view text);

/// Optimal-string-alignment distance (adjacent transpositions cost 1).
std::size_t edit_distance(std::string_view a, std::string_view b);

/// Case-insensitive question-type guess used by the stub answerers.
enum class StubQuestionKind { detection, counting, summary };
StubQuestionKind guess_question_kind(std::string_view question);

}  // namespace larag
