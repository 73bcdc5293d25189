#include "larag/intent_classifier.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "larag/error.hpp"

namespace larag {

using nlohmann::json;

std::string normalize_words(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool space = true;
  for (unsigned char c : text) {
    if (std::isalnum(c) || c == '\'') {
      out.push_back(static_cast<char>(std::tolower(c)));
      space = false;
    } else if (!space) {
      out.push_back(' ');
      space = true;
    }
  }
  if (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

IntentConfig IntentConfig::defaults() {
  IntentConfig c;
  c.keywords = {
      {IntentKind::counting, {"how many", "count", "number of times", "how often", "number of"}},
      {IntentKind::detection, {"was there", "were there", "is there", "are there", "did * occur", "did * happen", "any"}},
      {IntentKind::anomaly,
       {"anomaly", "anomalies", "anomalous", "unusual", "abnormal", "outlier", "outliers", "irregular"}},
      {IntentKind::summary, {"summarize", "summarise", "summary", "overview", "what happened", "recap"}},
  };
  c.exemplars = {
      {IntentKind::summary,
       {"provide an overview of events", "give me the gist of what went on", "describe everything that took place",
        "what went on during this period", "walk me through the activity in the evening",
        "brief me on the sounds of the day"}},
      {IntentKind::detection,
       {"did the alarm go off", "has a dog barked at all", "can you tell me if the doorbell rang",
        "check whether glass broke", "was the forklift heard", "tell me if someone knocked"}},
      {IntentKind::counting,
       {"tally the doorbell rings", "what is the total number of barks", "how frequently did the baby cry",
        "give me a count of the welding events", "how much times did the whistle blow"}},
      {IntentKind::anomaly,
       {"detect unusual sounds", "anything odd or strange about the machine", "is the loudness out of the ordinary",
        "did something sound wrong or off", "are any machines behaving strangely", "flag events at unexpected times"}},
  };
  return c;
}

IntentConfig IntentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open intent config " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("intent config: ") + e.what());
  }
  IntentConfig c;
  auto kind_of = [](const std::string& name) {
    auto k = intent_kind_from_string(name);
    if (!k) throw Error(ErrorCode::InvalidArgument, "unknown intent '" + name + "'");
    return *k;
  };
  if (doc.contains("priority")) {
    c.priority.clear();
    for (const auto& p : doc["priority"]) c.priority.push_back(kind_of(p.get<std::string>()));
  }
  for (const auto& [name, list] : doc.at("keywords").items())
    c.keywords[kind_of(name)] = list.get<std::vector<std::string>>();
  for (const auto& [name, list] : doc.at("exemplars").items())
    c.exemplars[kind_of(name)] = list.get<std::vector<std::string>>();
  c.embedding_threshold = doc.value("embedding_threshold", c.embedding_threshold);
  c.fallback_threshold = doc.value("fallback_threshold", c.fallback_threshold);
  return c;
}

std::string IntentConfig::to_json() const {
  json doc;
  json prio = json::array();
  for (auto k : priority) prio.push_back(std::string(to_string(k)));
  doc["priority"] = prio;
  for (const auto& [k, list] : keywords) doc["keywords"][std::string(to_string(k))] = list;
  for (const auto& [k, list] : exemplars) doc["exemplars"][std::string(to_string(k))] = list;
  doc["embedding_threshold"] = embedding_threshold;
  doc["fallback_threshold"] = fallback_threshold;
  return doc.dump(2);
}

namespace {

std::regex keyword_regex(const std::string& keyword) {
  std::stringstream ss(keyword);
  std::string pattern;
  for (std::string w; ss >> w;) {
    if (w == "*")
      pattern += "\\b.*";
    else
      pattern += (pattern.empty() || pattern.ends_with(".*") ? "\\b" : " ") + w;
  }
  return std::regex(pattern + "\\b");
}

}  // namespace

IntentClassifier::IntentClassifier(IntentConfig config, std::shared_ptr<Embedder> embedder)
    : config_(std::move(config)), embedder_(std::move(embedder)) {
  for (auto kind : config_.priority) {
    auto it = config_.keywords.find(kind);
    if (it == config_.keywords.end()) continue;
    for (const auto& kw : it->second) patterns_.push_back({kind, keyword_regex(to_lower(kw))});
  }
  for (const auto& [kind, list] : config_.exemplars)
    for (const auto& ex : list) exemplar_texts_.emplace_back(kind, ex);
  if (embedder_ && !exemplar_texts_.empty()) {
    std::vector<std::string> texts;
    for (const auto& [kind, ex] : exemplar_texts_) texts.push_back(normalize_words(ex));
    try {
      exemplar_vectors_ = embedder_->embed(texts);
      embedder_ok_ = exemplar_vectors_.size() == texts.size();
    } catch (const std::exception&) {
      embedder_ok_ = false;
    }
  }
}

std::optional<Intent> IntentClassifier::classify_keywords(std::string_view text) const {
  const std::string norm = normalize_words(text);
  for (const auto& p : patterns_)
    if (std::regex_search(norm, p.re)) return Intent{p.kind, 1.0, IntentMethod::keyword};
  return std::nullopt;
}

ExemplarMatch IntentClassifier::nearest_exemplar(std::string_view text) const {
  if (!embedder_ok_) throw Error(ErrorCode::EmbedderUnavailable, "no embedder available for intent matching");
  Embedding q;
  try {
    q = embedder_->embed_one(normalize_words(text));
  } catch (const std::exception& e) {
    throw Error(ErrorCode::EmbedderUnavailable, e.what());
  }
  const auto scores = kernels::cosine_scores(q, exemplar_vectors_);
  const auto best = kernels::top_k(scores, 1).front();
  return {exemplar_texts_[best].first, exemplar_texts_[best].second, std::max(0.0, scores[best])};
}

Intent IntentClassifier::classify_embedding(std::string_view text) const {
  auto m = nearest_exemplar(text);
  return Intent{m.kind, std::clamp(m.score, 0.0, 1.0), IntentMethod::embedding};
}

Intent IntentClassifier::classify(std::string_view text) const {
  if (auto hit = classify_keywords(text)) return *hit;
  if (embedder_ok_ && !normalize_words(text).empty()) {
    try {
      auto m = classify_embedding(text);
      const double threshold = embedder_->is_fallback() ? config_.fallback_threshold : config_.embedding_threshold;
      if (m.score >= threshold) return m;
    } catch (const Error&) {
    }
  }
  return Intent{IntentKind::summary, 0.0, IntentMethod::fallback_default};
}

}  // namespace larag
