#include "larag/qa_pipeline.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>

#include "larag/benchgen.hpp"
#include "larag/clock.hpp"
#include "larag/error.hpp"
#include "larag/kernels.hpp"
#include "larag/prompts.hpp"

namespace larag {

namespace {

// Accumulates the wall time spent inside the wrapped client.
class TimedClient final : public LlmClient {
 public:
  TimedClient(LlmClient& inner, double& acc) : inner_(inner), acc_(acc) {}
  std::string complete(const ChatRequest& request) override {
    const double t0 = steady_ms();
    try {
      std::string out = inner_.complete(request);
      acc_ += steady_ms() - t0;
      return out;
    } catch (...) {
      acc_ += steady_ms() - t0;
      throw;
    }
  }

 private:
  LlmClient& inner_;
  double& acc_;
};

struct StageTimer {
  std::map<std::string, double>& sink;
  std::string name;
  double t0 = steady_ms();
  ~StageTimer() { sink[name] += steady_ms() - t0; }
};

std::string history_block(std::span<const ChatTurn> history) {
  const std::size_t from = history.size() > kHistoryTurns ? history.size() - kHistoryTurns : 0;
  std::string out;
  for (std::size_t i = from; i < history.size(); ++i) {
    if (!out.empty()) out += '\n';
    out += history[i].role + ": " + history[i].text;
  }
  return out.empty() ? std::string("(none)") : out;
}

}  // namespace

ChatRequest rephrase_request(std::string_view query, std::span<const ChatTurn> history) {
  const std::string user = prompts::render(prompts::template_text("rephrase"),
                                           {{"history", history_block(history)}, {"question", std::string(query)}});
  return ChatRequest{{{"system", prompts::system_message("rephrase")}, {"user", user}}, 128, 0.0};
}

std::string rephrase(std::string_view query, std::span<const ChatTurn> history, LlmClient& client) {
  try {
    std::string out = client.complete(rephrase_request(query, history));
    const auto b = out.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return std::string(query);
    const auto e = out.find_last_not_of(" \t\r\n");
    return out.substr(b, e - b + 1);
  } catch (const std::exception&) {
    return std::string(query);
  }
}

std::vector<std::string> rank_tags(std::string_view query, const std::vector<std::string>& tags, Embedder& embedder,
                                   const TagAliases& aliases) {
  if (tags.empty()) return {};
  std::vector<std::string> texts{std::string(query)};
  std::vector<std::size_t> owner;  // texts[i + 1] describes tags[owner[i]]
  for (std::size_t t = 0; t < tags.size(); ++t) {
    texts.push_back(humanize_tag(tags[t]));
    owner.push_back(t);
    if (auto it = aliases.find(tags[t]); it != aliases.end())
      for (const auto& a : it->second) {
        texts.push_back(a);
        owner.push_back(t);
      }
  }
  const auto vectors = embedder.embed(texts);
  if (vectors.size() != texts.size())
    throw ClientError(ErrorCode::MalformedResponse, "embedder returned the wrong number of vectors");
  const std::span<const Embedding> rows(vectors.data() + 1, vectors.size() - 1);
  const auto sims = kernels::cosine_scores(vectors[0], rows);
  std::vector<double> best(tags.size(), -2.0);
  for (std::size_t i = 0; i < sims.size(); ++i) best[owner[i]] = std::max(best[owner[i]], sims[i]);
  std::vector<std::string> out;
  for (auto i : kernels::top_k(best, best.size())) out.push_back(tags[i]);
  return out;
}

std::vector<EventRecord> retrieve(IntentKind intent, const std::string& audio_id, const TimeInterval& interval,
                                  std::string_view query, const EventStore& store, Embedder& embedder, std::size_t k,
                                  const TagAliases& aliases) {
  if (intent == IntentKind::summary) return store.query_interval(audio_id, interval);
  const auto tags = store.distinct_tags(audio_id, interval);
  if (tags.empty()) return {};
  if (tags.size() <= k) return store.query_interval(audio_id, interval);
  auto ranked = rank_tags(query, tags, embedder, aliases);
  ranked.resize(std::min(k, ranked.size()));
  return store.query_interval(audio_id, interval, ranked);
}

ChatRequest build_prompt(IntentKind intent, std::span<const EventRecord> events, std::string_view query,
                         const TimeInterval& interval, std::span<const std::string> vocabulary) {
  std::string task = "answer-summary";
  std::string_view tmpl = prompts::template_text("summary");
  if (intent == IntentKind::detection || intent == IntentKind::counting) {
    task = intent == IntentKind::detection ? "answer-detection" : "answer-counting";
    tmpl = prompts::template_text("detection_counting");
  }
  const std::string user = prompts::render(tmpl, {{"interval", prompts::interval_statement(interval)},
                                                  {"vocabulary", prompts::vocabulary_line(vocabulary)},
                                                  {"evidence", prompts::evidence_block(events)},
                                                  {"question", std::string(query)}});
  return ChatRequest{{{"system", prompts::system_message(task)}, {"user", user}}};
}

QaPipeline::QaPipeline(PipelineDeps deps) : deps_(std::move(deps)) {
  if (!deps_.store) throw Error(ErrorCode::StoreUnavailable, "pipeline has no event store");
  if (!deps_.llm) throw Error(ErrorCode::ClientUnavailable, "pipeline has no LLM client");
  if (!deps_.embedder) deps_.embedder = std::make_shared<TrigramEmbedder>();
  if (!deps_.tag_aliases) deps_.tag_aliases = bench::builtin_tag_aliases();
  if (!deps_.classifier) deps_.classifier = std::make_shared<IntentClassifier>(IntentConfig::defaults(), deps_.embedder);
}

std::vector<std::string> QaPipeline::vocabulary(const std::string& audio_id) const {
  std::set<std::string> all;
  for (auto& t : deps_.store->distinct_tags(audio_id, TimeInterval::full_day())) all.insert(std::move(t));
  if (deps_.extra_vocabulary)
    for (auto& t : deps_.extra_vocabulary()) all.insert(std::move(t));
  return {all.begin(), all.end()};
}

AnswerEnvelope QaPipeline::answer(std::string_view query, const std::string& audio_id,
                                  std::span<const ChatTurn> history) const {
  const double t0 = steady_ms();
  AnswerEnvelope env;
  TimedClient llm(*deps_.llm, env.model_ms);
  if (!deps_.store->has_audio(audio_id)) throw Error(ErrorCode::UnknownAudioId, "unknown audio_id '" + audio_id + "'");

  {
    StageTimer t{env.latency_ms, "rephrase"};
    env.rephrased_query = rephrase(query, history, llm);
  }
  {
    StageTimer t{env.latency_ms, "time_resolution"};
    env.interval = resolve(env.rephrased_query, deps_.shifts, &llm);
  }
  {
    StageTimer t{env.latency_ms, "intent"};
    env.intent = deps_.classifier->classify(env.rephrased_query);
  }
  if (env.intent.kind == IntentKind::anomaly) {
    env = answer_anomaly(env.rephrased_query, audio_id, std::move(env));
    env.total_ms = steady_ms() - t0;
    return env;
  }
  {
    StageTimer t{env.latency_ms, "retrieval"};
    env.evidence = retrieve(env.intent.kind, audio_id, env.interval, env.rephrased_query, *deps_.store,
                            *deps_.embedder, deps_.k, *deps_.tag_aliases);
  }
  ChatRequest request;
  {
    StageTimer t{env.latency_ms, "prompt"};
    const auto vocab = vocabulary(audio_id);
    request = build_prompt(env.intent.kind, env.evidence, env.rephrased_query, env.interval, vocab);
  }
  {
    StageTimer t{env.latency_ms, "generation"};
    try {
      env.answer_text = llm.complete(request);
    } catch (const std::exception& e) {
      env.error = e.what();
      env.answer_text = fmt::format("No answer could be generated ({}). The evidence below is what the log contains.",
                                    e.what());
    }
  }
  env.total_ms = steady_ms() - t0;
  return env;
}

AnswerEnvelope QaPipeline::answer_anomaly(const std::string& query, const std::string& audio_id,
                                          AnswerEnvelope env) const {
  TimedClient llm(*deps_.llm, env.model_ms);
  const AnomalySubtype subtype = anomaly_subtype(query);
  if (subtype == AnomalySubtype::pitch) {
    env.answer_text = "Pitch anomalies need the raw audio, which this service never receives; only loudness and "
                      "start-time anomalies can be checked.";
    env.error = std::string(to_string(ErrorCode::NotSupported));
    return env;
  }
  AnomalyResult result;
  {
    StageTimer t{env.latency_ms, "retrieval"};
    const std::string baseline_id = deps_.anomaly.baseline_audio_id.value_or(audio_id);
    const auto historical = deps_.store->query_interval(baseline_id, TimeInterval::full_day());
    const auto baselines = fit_baseline(historical, deps_.anomaly.gap_minutes);
    const auto events = deps_.store->query_interval(audio_id, env.interval);
    if (subtype != AnomalySubtype::start_time) {
      auto r = loudness_anomalies(events, baselines, deps_.anomaly.z);
      result.records.insert(result.records.end(), r.records.begin(), r.records.end());
    }
    if (subtype != AnomalySubtype::loudness) {
      auto r = start_time_anomalies(events, baselines, deps_.anomaly.max_distance_minutes);
      result.records.insert(result.records.end(), r.records.begin(), r.records.end());
    }
    std::set<std::int64_t> seen;
    for (const auto& r : result.records)
      if (seen.insert(r.event.id).second) env.evidence.push_back(r.event);
    std::sort(env.evidence.begin(), env.evidence.end(), [](const EventRecord& a, const EventRecord& b) {
      return a.start_s < b.start_s || (a.start_s == b.start_s && a.tag < b.tag);
    });
  }
  std::string table;
  {
    StageTimer t{env.latency_ms, "prompt"};
    table = render_anomaly_table(result.records);
  }
  {
    StageTimer t{env.latency_ms, "generation"};
    env.answer_text = explain_anomalies(table, deps_.anomaly.manual_text, llm);
  }
  return env;
}

}  // namespace larag
