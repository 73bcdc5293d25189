#include <doctest.h>

#include <random>
#include <regex>
#include <set>

#include "larag/benchgen.hpp"
#include "larag/event_store.hpp"
#include "larag/qa_pipeline.hpp"
#include "larag/stub_llm.hpp"
#include "support.hpp"

using namespace larag;

namespace {

EventRecord ev(const std::string& tag, double start, const std::string& audio = "a") {
  EventRecord e;
  e.audio_id = audio;
  e.tag = tag;
  e.start_s = start;
  e.end_s = start + 2;
  e.confidence = 0.9;
  e.loudness_lufs = -22;
  return e;
}

TimeInterval iv(double a, double b) {
  TimeInterval t;
  t.start_s = a;
  t.end_s = b;
  t.type = ExpressionType::h24;
  t.source = ResolutionSource::rules;
  return t;
}

PipelineDeps stub_deps(EventStore& store) {
  PipelineDeps d;
  d.store = &store;
  d.llm = std::make_shared<StubLlmClient>();
  d.embedder = std::make_shared<TrigramEmbedder>();
  return d;
}

std::optional<long> first_integer(const std::string& s) {
  std::smatch m;
  if (!std::regex_search(s, m, std::regex(R"(\d+)"))) return std::nullopt;
  return std::stol(m.str());
}

int evidence_lines(const std::string& prompt) {
  static const std::regex line(R"((^|\n)\d\d:\d\d:\d\d)");
  return static_cast<int>(std::distance(std::sregex_iterator(prompt.begin(), prompt.end(), line), std::sregex_iterator()));
}

}  // namespace

TEST_CASE("rephrase fixtures and passthrough") {
  StubLlmClient stub;
  const std::vector<ChatTurn> history{{"user", "How many dog barks this morning?", 0}, {"assistant", "3", 1}};
  CHECK(rephrase("and in the afternoon?", history, stub) == "How many dog barks occurred in the afternoon?");
  CHECK(rephrase("Was there a cat meow after 17:00?", {}, stub) == "Was there a cat meow after 17:00?");
  FunctionLlmClient down([](const ChatRequest&) -> std::string { throw ClientError(ErrorCode::Timeout, "x"); });
  CHECK(rephrase("and later?", history, down) == "and later?");
  FunctionLlmClient blank([](const ChatRequest&) { return std::string("  \n"); });
  CHECK(rephrase("and later?", history, blank) == "and later?");
}

TEST_CASE("rephrase prompt keeps only the last six turns") {
  std::vector<ChatTurn> history;
  for (int i = 0; i < 10; ++i) history.push_back({i % 2 ? "assistant" : "user", "turn-" + std::to_string(i), i});
  const auto req = rephrase_request("q", history);
  std::string all;
  for (const auto& m : req.messages) all += m.content;
  CHECK(all.find("turn-3") == std::string::npos);
  for (int i = 4; i < 10; ++i) CHECK(all.find("turn-" + std::to_string(i)) != std::string::npos);
}

TEST_CASE("retrieve: broad path, top-k, saturation") {
  EventStore store;
  std::vector<EventRecord> all;
  const std::vector<std::string> seven{"dog_bark", "cat_meow", "snoring", "door_knock", "alarm", "kettle", "baby_cry"};
  for (int i = 0; i < 40; ++i) all.push_back(ev(seven[i % 7], 100.0 + i * 10));
  store.insert_events(all);
  TrigramEmbedder emb;
  CHECK(retrieve(IntentKind::summary, "a", iv(0, 86400), "summarize", store, emb).size() == 40);

  EventStore small;
  small.insert_events(std::vector{ev("dog_bark", 10), ev("cat", 20), ev("snoring", 30), ev("dog_bark", 40)});
  const auto one = retrieve(IntentKind::detection, "a", iv(0, 86400), "was there a dog bark", small, emb, 1);
  REQUIRE(one.size() == 2);
  for (const auto& e : one) CHECK(e.tag == "dog_bark");
  CHECK(retrieve(IntentKind::detection, "a", iv(0, 86400), "was there a dog bark", small, emb, 5).size() == 4);
  CHECK(retrieve(IntentKind::counting, "a", iv(0, 15), "how many cats", small, emb, 5).size() == 1);
}

TEST_CASE("rank_tags equals an exhaustive cosine sort") {
  std::mt19937_64 rng(3);
  TrigramEmbedder emb;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::string> tags;
    for (int i = 0; i < 8; ++i) tags.push_back(testgen::random_word(rng) + "_" + testgen::random_word(rng));
    std::sort(tags.begin(), tags.end());
    tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
    const std::string query = "was there a " + humanize_tag(tags[trial % tags.size()]);
    const auto q = trigram_embedding(query);
    auto expect = tags;
    std::stable_sort(expect.begin(), expect.end(), [&](const auto& a, const auto& b) {
      return cosine(q, trigram_embedding(humanize_tag(a))) > cosine(q, trigram_embedding(humanize_tag(b)));
    });
    CHECK(rank_tags(query, tags, emb) == expect);
  }
}

TEST_CASE("rank_tags uses the best alias") {
  TrigramEmbedder emb;
  const std::vector<std::string> tags{"dog_bark", "baby_cry", "kettle_whistle"};
  TagAliases aliases{{"dog_bark", {"a dog yapping"}}};
  CHECK(rank_tags("did a dog yapping occur", tags, emb, aliases).front() == "dog_bark");
}

TEST_CASE("build_prompt evidence conventions") {
  const std::vector<std::string> vocab{"dog_bark", "cat"};
  const auto empty = build_prompt(IntentKind::detection, {}, "Was there a dog bark?", iv(0, 3600), vocab);
  CHECK(empty.messages.at(1).content.find("no events detected in this interval") != std::string::npos);
  const std::vector<EventRecord> two{ev("dog_bark", 30), ev("cat", 3605)};
  const auto p = build_prompt(IntentKind::detection, two, "Was there a dog bark?", iv(0, 7200), vocab);
  const auto& user = p.messages.at(1).content;
  CHECK(evidence_lines(user) == 2);
  const auto a = user.find("00:00:30"), b = user.find("01:00:05");
  CHECK(a != std::string::npos);
  CHECK(b != std::string::npos);
  CHECK(a < b);
  CHECK(user.find("dog_bark, cat") != std::string::npos);
  CHECK(user.find("Was there a dog bark?") != std::string::npos);
  CHECK(p.messages.at(0).content.rfind("### task: answer-detection", 0) == 0);
  CHECK(build_prompt(IntentKind::summary, two, "Summarize", iv(0, 7200), vocab).messages.at(0).content.rfind(
            "### task: answer-summary", 0) == 0);
}

TEST_CASE("prompts for generated cases are byte-identical across runs") {
  const auto cfg = bench::DomainConfig::home_iot();
  bench::TimelineParams tp;
  tp.audio_id = "h";
  const auto tl = bench::synth_timeline(cfg, 4, tp);
  const auto pairs = bench::generate_dataset(tl, cfg, 4, 20);
  EventStore s1, s2;
  s1.insert_events(tl);
  s2.insert_events(tl);
  TrigramEmbedder emb;
  for (const auto& p : pairs) {
    const auto interval = p.ground_truth.interval();
    const auto e1 = retrieve(p.ground_truth.category, "h", interval, p.question, s1, emb);
    const auto e2 = retrieve(p.ground_truth.category, "h", interval, p.question, s2, emb);
    const std::vector<std::string> vocab = s1.distinct_tags("h", TimeInterval::full_day());
    const auto r1 = build_prompt(p.ground_truth.category, e1, p.question, interval, vocab);
    const auto r2 = build_prompt(p.ground_truth.category, e2, p.question, interval, vocab);
    CHECK(r1.messages.at(1).content == r2.messages.at(1).content);
  }
}

TEST_CASE("answer: examples") {
  EventStore store;
  std::vector<EventRecord> events{ev("dog_bark", 8 * 3600 + 15 * 60), ev("cat", 9 * 3600)};
  for (int i = 0; i < 7; ++i) events.push_back(ev("siren", 1000.0 + i * 7000));
  store.insert_events(events);
  QaPipeline pipe(stub_deps(store));

  const auto yes = pipe.answer("Did a dog bark between 08:00:00 and 09:00:00?", "a");
  CHECK(yes.answer_text.rfind("Yes", 0) == 0);
  // evidence carries every in-window event of the top-k tags; the bark is among them
  CHECK(std::any_of(yes.evidence.begin(), yes.evidence.end(),
                    [](const EventRecord& e) { return e.tag == "dog_bark" && e.start_s == 8 * 3600 + 15 * 60; }));
  for (const auto& e : yes.evidence) CHECK(yes.interval.contains(e.start_s));
  auto narrow_deps = stub_deps(store);
  narrow_deps.k = 1;
  const auto narrow = QaPipeline(narrow_deps).answer("Did a dog bark between 08:00:00 and 09:00:00?", "a");
  REQUIRE(narrow.evidence.size() == 1);
  CHECK(narrow.evidence[0].tag == "dog_bark");
  CHECK(yes.intent.kind == IntentKind::detection);
  CHECK(yes.interval.start_s == 28800);

  const auto no = pipe.answer("Did a dog bark between 10:00:00 and 11:00:00?", "a");
  CHECK(no.answer_text.rfind("No", 0) == 0);
  CHECK(std::none_of(no.evidence.begin(), no.evidence.end(), [](const EventRecord& e) { return e.tag == "dog_bark"; }));

  const auto seven = pipe.answer("How many siren events occurred today?", "a");
  CHECK(first_integer(seven.answer_text) == 7);
  CHECK(store.aggregate("a", TimeInterval::full_day(), "siren").count == 7);

  CHECK_ERROR_CODE(pipe.answer("anything", "missing"), ErrorCode::UnknownAudioId);
}

TEST_CASE("answer: envelope invariants") {
  EventStore store;
  const auto cfg = bench::DomainConfig::industrial_iot();
  bench::TimelineParams tp;
  tp.audio_id = "a";
  store.insert_events(bench::synth_timeline(cfg, 2, tp));
  QaPipeline pipe(stub_deps(store));
  for (const char* q : {"Summarize everything during the night shift", "Were there any welding events after 14:00?",
                        "How many times did the compressor hum occur before 06:00?", "what happened"}) {
    const auto env = pipe.answer(q, "a");
    double sum = 0;
    for (const auto& [stage, ms] : env.latency_ms) {
      CHECK(ms >= 0.0);
      sum += ms;
    }
    CHECK(std::abs(sum - env.total_ms) <= 5.0);
    for (const auto& e : env.evidence) CHECK(env.interval.contains(e.start_s));
    if (env.intent.kind != IntentKind::summary) {
      std::set<std::string> tags;
      for (const auto& e : env.evidence) tags.insert(e.tag);
      CHECK(tags.size() <= kDefaultTopK);
    }
    for (const char* stage : {"rephrase", "time_resolution", "intent", "retrieval", "prompt", "generation"})
      CHECK(env.latency_ms.count(stage) == 1);
  }
}

TEST_CASE("answer: generation failure is reported, not fabricated") {
  EventStore store;
  store.insert_events(std::vector{ev("dog_bark", 100)});
  auto deps = stub_deps(store);
  deps.llm = std::make_shared<FunctionLlmClient>([](const ChatRequest& r) -> std::string {
    if (r.messages.at(0).content.find("answer-") != std::string::npos) throw ClientError(ErrorCode::Timeout, "slow");
    return "NONE";
  });
  QaPipeline pipe(deps);
  const auto env = pipe.answer("Was there a dog bark?", "a");
  CHECK(env.error.has_value());
  CHECK(env.answer_text.rfind("Yes", 0) != 0);
  CHECK(env.answer_text.rfind("No.", 0) != 0);
  CHECK(env.evidence.size() == 1);
}

TEST_CASE("stub-oracle equivalence on generated cases") {
  for (const auto& cfg : {bench::DomainConfig::home_iot(), bench::DomainConfig::industrial_iot()}) {
    for (bool complex_mode : {false, true}) {
      bench::TimelineParams tp;
      tp.audio_id = "g";
      const auto tl = bench::synth_timeline(cfg, 31, tp);
      EventStore store;
      store.insert_events(tl);
      QaPipeline pipe(stub_deps(store));
      for (const auto& p : bench::generate_dataset(tl, cfg, 31, 40, complex_mode)) {
        const auto& gt = p.ground_truth;
        if (gt.category == IntentKind::summary) continue;
        const auto agg = store.aggregate("g", gt.interval(), gt.tags.at(0));
        const auto env = pipe.answer(p.question, "g");
        INFO(p.question, " -> ", env.answer_text);
        if (gt.category == IntentKind::detection)
          CHECK((env.answer_text.rfind("Yes", 0) == 0) == (agg.count > 0));
        else
          CHECK(first_integer(env.answer_text) == agg.count);
      }
    }
  }
}
