#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "larag/anomaly.hpp"
#include "larag/event_store.hpp"
#include "larag/intent_classifier.hpp"
#include "larag/model_clients.hpp"
#include "larag/time_resolution.hpp"
#include "larag/types.hpp"

namespace larag {

struct ChatTurn {
  std::string role;  // user | assistant
  std::string text;
  std::int64_t timestamp_ms = 0;  // unix epoch
};

inline constexpr std::size_t kHistoryTurns = 6;
inline constexpr std::size_t kDefaultTopK = 5;

struct AnswerEnvelope {
  std::string answer_text;
  std::string rephrased_query;
  Intent intent;
  TimeInterval interval;
  std::vector<EventRecord> evidence;
  std::map<std::string, double> latency_ms;  // per stage
  double total_ms = 0.0;
  double model_ms = 0.0;  // time spent inside model clients
  std::optional<std::string> error;  // set when generation failed
};

using TagAliases = std::map<std::string, std::vector<std::string>>;

/// Prompt text for rephrasing: the last kHistoryTurns turns plus the query.
ChatRequest rephrase_request(std::string_view query, std::span<const ChatTurn> history);

/// Passthrough guarantee: client failure or an empty reply returns the query.
std::string rephrase(std::string_view query, std::span<const ChatTurn> history, LlmClient& client);

/// Summary intent returns every event in the interval. Otherwise the distinct
/// tags present are ranked by rank_tags and events of the
/// top-k tags are kept.
std::vector<EventRecord> retrieve(IntentKind intent, const std::string& audio_id, const TimeInterval& interval,
                                  std::string_view query, const EventStore& store, Embedder& embedder,
                                  std::size_t k = kDefaultTopK, const TagAliases& aliases = {});

/// Tags ranked by similarity to the query, best first. A tag scores the best
/// cosine over its humanized name and its aliases.
std::vector<std::string> rank_tags(std::string_view query, const std::vector<std::string>& tags, Embedder& embedder,
                                   const TagAliases& aliases = {});

/// Intent-specific prompt. Events are rendered in the order given.
ChatRequest build_prompt(IntentKind intent, std::span<const EventRecord> events, std::string_view query,
                         const TimeInterval& interval, std::span<const std::string> vocabulary);

struct AnomalySettings {
  double z = 3.0;
  double max_distance_minutes = 45.0;
  double gap_minutes = 30.0;
  std::optional<std::string> baseline_audio_id;  // default: the queried audio
  std::optional<std::string> manual_text;
};

struct PipelineDeps {
  EventStore* store = nullptr;
  std::shared_ptr<LlmClient> llm;
  std::shared_ptr<Embedder> embedder;
  std::shared_ptr<const IntentClassifier> classifier;
  ShiftConfig shifts = ShiftConfig::defaults();
  std::size_t k = kDefaultTopK;
  /// Alternative names per tag used when ranking tags; defaults to the
  /// builtin domain synonym tables.
  std::optional<TagAliases> tag_aliases;
  AnomalySettings anomaly;
  /// Enrolled tags added to the closed vocabulary.
  std::function<std::vector<std::string>()> extra_vocabulary;
};

class QaPipeline {
 public:
  explicit QaPipeline(PipelineDeps deps);

  /// rephrase, resolve time, classify, retrieve (or run anomaly detectors),
  /// build the prompt, and generate. Throws Error(UnknownAudioId) and
  /// StoreUnavailable; generation failures come back in envelope.error.
  AnswerEnvelope answer(std::string_view query, const std::string& audio_id,
                        std::span<const ChatTurn> history = {}) const;

  std::vector<std::string> vocabulary(const std::string& audio_id) const;
  const PipelineDeps& deps() const { return deps_; }

 private:
  AnswerEnvelope answer_anomaly(const std::string& query, const std::string& audio_id, AnswerEnvelope env) const;

  PipelineDeps deps_;
};

}  // namespace larag
