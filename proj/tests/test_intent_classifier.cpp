#include <doctest.h>

#include <atomic>

#include "larag/intent_classifier.hpp"
#include "support.hpp"

using namespace larag;

namespace {

// Counts calls and can scale every vector it returns.
class SpyEmbedder final : public Embedder {
 public:
  explicit SpyEmbedder(double scale = 1.0) : scale_(scale) {}
  std::vector<Embedding> embed(std::span<const std::string> texts) override {
    calls += static_cast<int>(texts.size());
    std::vector<Embedding> out;
    for (const auto& t : texts) {
      auto e = trigram_embedding(t);
      for (auto& v : e) v *= scale_;
      out.push_back(std::move(e));
    }
    return out;
  }
  bool is_fallback() const override { return true; }
  std::atomic<int> calls{0};

 private:
  double scale_;
};

class BrokenEmbedder final : public Embedder {
 public:
  std::vector<Embedding> embed(std::span<const std::string>) override {
    throw ClientError(ErrorCode::ProviderUnavailable, "no embedder");
  }
};

// Exhaustive argmax over the exemplar bank, computed here from scratch.
ExemplarMatch exhaustive(const IntentConfig& cfg, std::string_view text) {
  const auto q = trigram_embedding(normalize_words(text));
  ExemplarMatch best{IntentKind::summary, "", -2.0};
  for (auto kind : {IntentKind::summary, IntentKind::detection, IntentKind::counting, IntentKind::anomaly}) {
    auto it = cfg.exemplars.find(kind);
    if (it == cfg.exemplars.end()) continue;
    for (const auto& ex : it->second) {
      const double s = cosine(q, trigram_embedding(normalize_words(ex)));
      if (s > best.score) best = {kind, ex, s};
    }
  }
  return best;
}

IntentClassifier with_trigram() {
  return IntentClassifier(IntentConfig::load(std::string(LARAG_DATA_DIR) + "/config/intents.json"),
                          std::make_shared<TrigramEmbedder>());
}

}  // namespace

TEST_CASE("keyword examples") {
  IntentClassifier c;
  CHECK(c.classify_keywords("How many times did the doorbell ring?")->kind == IntentKind::counting);
  CHECK(c.classify_keywords("Summarize the afternoon shift")->kind == IntentKind::summary);
  CHECK_FALSE(c.classify_keywords("Is the forklift running smoothly?").has_value());
  CHECK(c.classify_keywords("Did a dog bark occur after 5pm?")->kind == IntentKind::detection);
  CHECK(c.classify_keywords("Were there any unusual sounds")->kind == IntentKind::detection);
  CHECK(c.classify_keywords("how many unusual sounds")->kind == IntentKind::counting);
  CHECK(c.classify_keywords("show me anomalies today")->kind == IntentKind::anomaly);
  const auto hit = c.classify_keywords("count the welds after 17:30");
  CHECK(hit->score == 1.0);
  CHECK(hit->method == IntentMethod::keyword);
  // word boundaries: "anything" and "discount" are not keywords
  CHECK_FALSE(c.classify_keywords("anything at the discount store").has_value());
}

TEST_CASE("shipped config has at least five exemplars per intent") {
  const auto cfg = IntentConfig::load(std::string(LARAG_DATA_DIR) + "/config/intents.json");
  for (auto kind : {IntentKind::summary, IntentKind::detection, IntentKind::counting, IntentKind::anomaly})
    CHECK(cfg.exemplars.at(kind).size() >= 5);
  const auto back = IntentConfig::load(std::string(LARAG_DATA_DIR) + "/config/intents.json");
  CHECK(back.to_json() == cfg.to_json());
}

TEST_CASE("embedding examples agree with the exhaustive oracle") {
  const auto c = with_trigram();
  for (const char* q : {"Give me the gist of the evening", "anything odd about the stamping machine loudness?",
                        "what did the baby do", "tell me whether the kettle whistled", "total barks please"}) {
    INFO(q);
    const auto m = c.nearest_exemplar(q);
    const auto expect = exhaustive(c.config(), q);
    CHECK(m.kind == expect.kind);
    CHECK(m.exemplar == expect.exemplar);
    CHECK(m.score == doctest::Approx(expect.score));
  }
  CHECK(c.classify_embedding("Give me the gist of the evening").kind == IntentKind::summary);
  CHECK(c.classify("anything odd about the stamping machine loudness?").kind == IntentKind::anomaly);
  CHECK(c.classify("anything odd about the stamping machine loudness?").method == IntentMethod::embedding);
}

TEST_CASE("exemplar self-similarity") {
  const auto c = with_trigram();
  for (const auto& [kind, list] : c.config().exemplars)
    for (const auto& ex : list) {
      const auto i = c.classify_embedding(ex);
      CHECK(i.kind == kind);
      CHECK(i.score == doctest::Approx(1.0));
    }
}

TEST_CASE("argmax is invariant to positive scaling") {
  const auto cfg = IntentConfig::defaults();
  IntentClassifier unit(cfg, std::make_shared<SpyEmbedder>(1.0));
  IntentClassifier scaled(cfg, std::make_shared<SpyEmbedder>(37.5));
  for (const char* q : {"gist of the morning", "did it ring", "tally the knocks", "weird noises", "hello"}) {
    CHECK(unit.nearest_exemplar(q).exemplar == scaled.nearest_exemplar(q).exemplar);
    CHECK(unit.classify(q).kind == scaled.classify(q).kind);
  }
}

TEST_CASE("keyword path never consults the embedder") {
  auto spy = std::make_shared<SpyEmbedder>();
  IntentClassifier c(IntentConfig::defaults(), spy);
  const int before = spy->calls;
  c.classify("how many barks");
  c.classify("summarize the day");
  CHECK(spy->calls == before);
  c.classify("gist of the day");
  CHECK(spy->calls == before + 1);
}

TEST_CASE("defaults and degraded embedder") {
  IntentClassifier none;
  CHECK(none.classify("").kind == IntentKind::summary);
  CHECK(none.classify("").method == IntentMethod::fallback_default);
  CHECK(none.classify("is the forklift running smoothly").kind == IntentKind::summary);
  CHECK_ERROR_CODE(none.classify_embedding("x"), ErrorCode::EmbedderUnavailable);
  IntentClassifier broken(IntentConfig::defaults(), std::make_shared<BrokenEmbedder>());
  CHECK(broken.classify("gist please").kind == IntentKind::summary);
  CHECK_ERROR_CODE(broken.classify_embedding("x"), ErrorCode::EmbedderUnavailable);
}

TEST_CASE("scores stay in the unit interval and classification is deterministic") {
  const auto c = with_trigram();
  std::mt19937_64 rng(4);
  for (int i = 0; i < 300; ++i) {
    const std::string q = testgen::random_word(rng) + " " + testgen::random_word(rng) + " " + testgen::random_word(rng);
    const auto a = c.classify(q), b = c.classify(q);
    CHECK(a.kind == b.kind);
    CHECK(a.score == b.score);
    CHECK(a.score >= 0.0);
    CHECK(a.score <= 1.0 + 1e-12);
  }
}
