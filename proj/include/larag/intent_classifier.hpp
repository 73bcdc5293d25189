#pragma once

#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "larag/model_clients.hpp"
#include "larag/types.hpp"

namespace larag {

/// Keyword lists, keyword priority, and paraphrase exemplars per intent.
/// Keywords match on word boundaries; "*" inside a keyword spans any words
/// ("did * occur").
struct IntentConfig {
  std::map<IntentKind, std::vector<std::string>> keywords;
  std::vector<IntentKind> priority{IntentKind::counting, IntentKind::detection, IntentKind::anomaly,
                                   IntentKind::summary};
  std::map<IntentKind, std::vector<std::string>> exemplars;
  double embedding_threshold = 0.35;
  double fallback_threshold = 0.0;

  static IntentConfig defaults();
  static IntentConfig load(const std::string& path);
  std::string to_json() const;
};

struct ExemplarMatch {
  IntentKind kind;
  std::string exemplar;
  double score;
};

class IntentClassifier {
 public:
  explicit IntentClassifier(IntentConfig config = IntentConfig::defaults(),
                            std::shared_ptr<Embedder> embedder = nullptr);

  std::optional<Intent> classify_keywords(std::string_view text) const;
  /// Throws Error(EmbedderUnavailable) without a working embedder.
  Intent classify_embedding(std::string_view text) const;
  ExemplarMatch nearest_exemplar(std::string_view text) const;
  /// Keyword hit, else embedding argmax above threshold, else summary.
  Intent classify(std::string_view text) const;

  const IntentConfig& config() const { return config_; }

 private:
  struct Pattern {
    IntentKind kind;
    std::regex re;
  };
  IntentConfig config_;
  std::shared_ptr<Embedder> embedder_;
  std::vector<Pattern> patterns_;
  std::vector<std::pair<IntentKind, std::string>> exemplar_texts_;
  std::vector<Embedding> exemplar_vectors_;
  bool embedder_ok_ = false;
};

/// Lowercase, non-alphanumerics to spaces, whitespace collapsed.
std::string normalize_words(std::string_view text);

}  // namespace larag
