// Command-line entry points: ingest, bench, eval, timeres-eval, serve, anomaly.
// Exit codes: 0 success, 1 data error, 2 usage error.

#include <fmt/format.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "larag/agm_adapter.hpp"
#include "larag/anomaly.hpp"
#include "larag/baselines.hpp"
#include "larag/benchgen.hpp"
#include "larag/clock.hpp"
#include "larag/error.hpp"
#include "larag/eval_harness.hpp"
#include "larag/qa_pipeline.hpp"
#include "larag/service.hpp"
#include "larag/stub_llm.hpp"

namespace fs = std::filesystem;
using namespace larag;

namespace {

constexpr int kOk = 0;
constexpr int kDataError = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void require_file(const std::string& path, const char* what) {
  if (path.empty()) throw UsageError(fmt::format("--{} is required", what));
  if (!fs::exists(path)) throw UsageError(fmt::format("{} '{}' does not exist", what, path));
}

bench::DomainConfig domain_from(const std::string& name) {
  if (name.size() > 5 && name.substr(name.size() - 5) == ".json") return bench::DomainConfig::load(name);
  auto d = bench::DomainConfig::by_name(name);
  if (!d) throw UsageError("unknown domain '" + name + "' (industrial_iot, home_iot, or a .json config)");
  return *d;
}

std::string timeline_path_for(const std::string& dataset_path) { return dataset_path + ".timeline.json"; }

agm::AgmLog timeline_log(const std::string& audio_id, const std::vector<EventRecord>& events) {
  agm::AgmLog log;
  log.audio_id = audio_id;
  log.recording_start = "2025-01-01T00:00:00Z";
  for (const auto& e : events) log.events.push_back({e.tag, e.start_s, e.end_s, e.confidence, e.loudness_lufs});
  return log;
}

struct Options {
  std::string config_path;
  std::string db;
  std::string domain = "home_iot";
  std::uint64_t seed = 7;
  bool complex = false;
  std::string pipeline = "larag";
  std::size_t k = kDefaultTopK;
  bool stub = false;
  int jobs = 1;
  std::string out;
  std::string log_path;
  std::string dataset;
  int per_phase = 100;
  std::string suite;
  std::string strategy = "all";
  std::string audio_id;
  std::string kind = "all";
  double z = 3.0;
  double max_minutes = 45.0;
  std::string baseline;
  std::string manual;
  std::string addr;
  bool judge = false;
  std::string intents;
};

ServiceConfig service_config(const Options& o) {
  std::string path = o.config_path;
  if (path.empty())
    if (const char* env = std::getenv("LARAG_CONFIG"); env && *env) path = env;
  ServiceConfig c = path.empty() ? ServiceConfig{} : ServiceConfig::load(path);
  if (!o.db.empty()) c.db_path = o.db;
  if (!o.intents.empty()) c.intents_path = o.intents;
  c.k = o.k;
  return c;
}

int cmd_ingest(const Options& o) {
  require_file(o.log_path, "log");
  if (o.db.empty()) throw UsageError("--db is required");
  const agm::AgmLog log = agm::parse_agm_log(read_file(o.log_path));
  EventStore store(o.db);
  const auto r = store.ingest(log.to_records());
  store.register_audio(log.audio_id, log.recording_start);
  fmt::print("inserted {} skipped {}\n", r.inserted, r.skipped);
  return kOk;
}

int cmd_bench(const Options& o) {
  const bench::DomainConfig domain = domain_from(o.domain);
  if (o.out.empty()) throw UsageError("--out is required");
  bench::TimelineParams params;
  params.audio_id = domain.name + "-" + std::to_string(o.seed);
  const auto timeline = bench::synth_timeline(domain, o.seed, params);
  const auto pairs = bench::generate_dataset(timeline, domain, o.seed, o.per_phase, o.complex);
  bench::write_dataset(o.out, pairs);
  {
    std::ofstream tl(timeline_path_for(o.out), std::ios::binary);
    tl << agm::serialize_agm_log(timeline_log(params.audio_id, timeline)) << '\n';
  }
  std::map<std::string, int> split, types;
  for (const auto& p : pairs) {
    split[std::string(to_string(p.ground_truth.category))]++;
    types[std::string(to_string(p.ground_truth.time_expression_type))]++;
  }
  fmt::print("wrote {} pairs to {} (timeline: {} events in {})\n", pairs.size(), o.out, timeline.size(),
             timeline_path_for(o.out));
  fmt::print("split: detection {} counting {} summary {}\n", split["detection"], split["counting"], split["summary"]);
  if (o.complex) {
    fmt::print("time expression types:");
    for (const auto& [t, n] : types) fmt::print(" {}={:.1f}%", t, 100.0 * n / static_cast<double>(pairs.size()));
    fmt::print("\n");
  }
  return kOk;
}

int cmd_eval(const Options& o) {
  require_file(o.dataset, "dataset");
  if (o.db.empty() || (o.db != ":memory:" && !fs::exists(o.db))) throw UsageError("--db must name an existing database");
  if (o.pipeline != "larag" && o.pipeline != "rag" && o.pipeline != "text2sql")
    throw UsageError("--pipeline must be larag, rag, or text2sql");
  const auto dataset = bench::read_dataset(o.dataset);
  if (dataset.empty()) throw Error(ErrorCode::InvalidArgument, "dataset is empty");
  auto store = std::make_shared<EventStore>(o.db);
  const ModelClients clients = clients_from_env(o.stub);
  const ServiceConfig cfg = service_config(o);

  AnswerFn answer_fn;
  std::unique_ptr<QaPipeline> pipeline;
  std::map<std::string, std::vector<Chunk>> indexes;
  if (o.pipeline == "larag") {
    PipelineDeps deps;
    deps.store = store.get();
    deps.llm = clients.llm;
    deps.embedder = clients.embedder;
    deps.classifier = std::make_shared<IntentClassifier>(
        cfg.intents_path.empty() ? IntentConfig::defaults() : IntentConfig::load(cfg.intents_path), clients.embedder);
    deps.shifts = cfg.shifts;
    deps.k = o.k;
    pipeline = std::make_unique<QaPipeline>(std::move(deps));
    answer_fn = [&](const bench::QAPair& p) {
      auto env = pipeline->answer(p.question, p.audio_id);
      auto stages = env.latency_ms;
      stages["model"] = env.model_ms;
      return PairOutcome{env.answer_text, stages};
    };
  } else if (o.pipeline == "rag") {
    for (const auto& p : dataset)
      if (!indexes.count(p.audio_id))
        indexes[p.audio_id] = build_chunks(store->query_interval(p.audio_id, TimeInterval::full_day()), *clients.embedder);
    answer_fn = [&](const bench::QAPair& p) {
      return PairOutcome{rag_answer(p.question, indexes.at(p.audio_id), *clients.embedder, *clients.llm, o.k), {}};
    };
  } else {
    answer_fn = [&](const bench::QAPair& p) {
      return PairOutcome{text2sql_answer(p.question, p.audio_id, *store, *clients.llm).answer, {}};
    };
  }
  const Report report = run_eval(dataset, answer_fn, o.judge ? clients.llm.get() : nullptr, o.jobs);
  fmt::print("pipeline {} ({} clients)\n{}", o.pipeline, clients.stub ? "stub" : "remote", report.to_table());
  if (!o.out.empty()) {
    std::ofstream out(o.out, std::ios::binary);
    out << report.to_json() << '\n';
  }
  return kOk;
}

int cmd_timeres(const Options& o) {
  const std::string suite = o.suite.empty() ? std::string(LARAG_DATA_DIR) + "/data/timeres_suite.json" : o.suite;
  require_file(suite, "suite");
  const auto cases = load_time_suite(suite);
  const ModelClients clients = clients_from_env(o.stub);
  const ServiceConfig cfg = service_config(o);
  std::vector<TimeStrategy> strategies;
  if (o.strategy == "all" || o.strategy == "rules") strategies.push_back(TimeStrategy::rules_only);
  if (o.strategy == "all" || o.strategy == "llm") strategies.push_back(TimeStrategy::llm_only);
  if (o.strategy == "all" || o.strategy == "combined") strategies.push_back(TimeStrategy::combined);
  if (strategies.empty()) throw UsageError("--strategy must be all, rules, llm, or combined");
  for (auto s : strategies) {
    const auto r = run_time_suite(cases, s, cfg.shifts, clients.llm.get());
    fmt::print("{}: overall {:.2f}% ({}/{})\n", to_string(s), r.overall.percent(), r.overall.correct, r.overall.total);
    for (const auto& cat : time_suite_categories()) {
      auto it = r.by_category.find(cat);
      if (it != r.by_category.end())
        fmt::print("  {:<24}{:>7.2f}% ({}/{})\n", cat, it->second.percent(), it->second.correct, it->second.total);
    }
    for (const auto& [d, acc] : r.by_difficulty)
      fmt::print("  difficulty {:<13}{:>7.2f}% ({}/{})\n", d, acc.percent(), acc.correct, acc.total);
    for (const auto& f : r.failures) fmt::print("  miss {}\n", f);
  }
  return kOk;
}

int cmd_serve(const Options& o) {
  ServiceConfig cfg = service_config(o);
  cfg.apply_env();
  if (!o.addr.empty()) {
    const auto colon = o.addr.rfind(':');
    if (colon == std::string::npos) throw UsageError("--addr must be host:port");
    cfg.host = o.addr.substr(0, colon);
    cfg.port = std::stoi(o.addr.substr(colon + 1));
  }
  if (!o.manual.empty()) cfg.manual_path = o.manual;
  auto store = std::make_shared<EventStore>(cfg.db_path);
  Service service(cfg, store, clients_from_env(o.stub));
  fmt::print("listening on http://{}:{} (db {})\n", cfg.host, cfg.port, cfg.db_path);
  std::fflush(stdout);
  service.serve();
  return kOk;
}

int cmd_anomaly(const Options& o) {
  if (o.db.empty() || (o.db != ":memory:" && !fs::exists(o.db))) throw UsageError("--db must name an existing database");
  if (o.audio_id.empty()) throw UsageError("--audio-id is required");
  ServiceConfig cfg = service_config(o);
  cfg.anomaly.z = o.z;
  cfg.anomaly.max_distance_minutes = o.max_minutes;
  if (!o.manual.empty()) cfg.manual_path = o.manual;
  auto store = std::make_shared<EventStore>(cfg.db_path);
  const ModelClients clients = clients_from_env(o.stub);
  Service service(cfg, store, clients);
  QueryParams params{{"kind", o.kind}, {"baseline", o.baseline}};
  const HttpResponse r = service.anomalies(o.audio_id, params);
  const auto doc = nlohmann::json::parse(r.body);
  if (r.status != 200) {
    fmt::print(stderr, "error: {} ({})\n", doc.value("error", ""), doc.value("detail", ""));
    return kDataError;
  }
  const std::string table = doc["table"].get<std::string>();
  fmt::print("{}", table);
  std::optional<std::string> manual;
  if (!cfg.manual_path.empty()) manual = read_file(cfg.manual_path);
  fmt::print("\n{}\n", explain_anomalies(table, manual, *clients.llm));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-grounded question answering over long audio event logs"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config_path, "service/pipeline config (JSON); also LARAG_CONFIG");
  app.add_option("--db", o.db, "SQLite database path");
  app.add_flag("--stub", o.stub, "use the offline stub LLM and trigram embedder");
  app.add_option("--intents", o.intents, "intent keyword/exemplar config");
  app.add_option("--k", o.k, "top-k tags (pipeline) or chunks (rag)")->check(CLI::PositiveNumber);

  auto* ingest = app.add_subcommand("ingest", "load an AGM event log into the store");
  ingest->add_option("--log", o.log_path, "AGM log file")->required();
  ingest->add_option("--db", o.db, "SQLite database path");

  auto* bench_cmd = app.add_subcommand("bench", "generate a synthetic QA benchmark and its timeline");
  bench_cmd->add_option("--domain", o.domain, "industrial_iot, home_iot, or a domain .json");
  bench_cmd->add_option("--seed", o.seed, "RNG seed");
  bench_cmd->add_flag("--complex", o.complex, "mixed temporal phrasing instead of HH:MM:SS ranges");
  bench_cmd->add_option("--per-phase", o.per_phase, "pairs per phase")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--out", o.out, "dataset path (JSONL)")->required();

  auto* eval = app.add_subcommand("eval", "score a pipeline over a dataset");
  eval->add_option("--dataset", o.dataset, "dataset JSONL")->required();
  eval->add_option("--pipeline", o.pipeline, "larag, rag, or text2sql");
  eval->add_option("--db", o.db, "database holding the dataset timeline");
  eval->add_option("--k", o.k, "top-k")->check(CLI::PositiveNumber);
  eval->add_option("--jobs", o.jobs, "parallel pairs")->check(CLI::PositiveNumber);
  eval->add_option("--out", o.out, "report JSON path");
  eval->add_flag("--judge", o.judge, "score summaries with the LLM judge");
  eval->add_flag("--stub", o.stub, "offline stub clients");

  auto* timeres = app.add_subcommand("timeres-eval", "evaluate temporal resolution on the labelled suite");
  timeres->add_option("--suite", o.suite, "suite JSON (default data/timeres_suite.json)");
  timeres->add_option("--strategy", o.strategy, "all, rules, llm, or combined");
  timeres->add_flag("--stub", o.stub, "offline stub fallback");

  auto* serve = app.add_subcommand("serve", "run the HTTP service");
  serve->add_option("--addr", o.addr, "host:port (overrides config and LARAG_ADDR)");
  serve->add_option("--db", o.db, "SQLite database path");
  serve->add_option("--manual", o.manual, "manual excerpt for anomaly explanations");
  serve->add_flag("--stub", o.stub, "offline stub clients");

  auto* anomaly = app.add_subcommand("anomaly", "report loudness and start-time anomalies");
  anomaly->add_option("--db", o.db, "SQLite database path");
  anomaly->add_option("--audio-id", o.audio_id, "recording to check")->required();
  anomaly->add_option("--kind", o.kind, "all, loudness, start_time, or pitch");
  anomaly->add_option("--z", o.z, "loudness z threshold");
  anomaly->add_option("--max-minutes", o.max_minutes, "start-time distance threshold");
  anomaly->add_option("--baseline", o.baseline, "audio_id supplying the baseline (default: same)");
  anomaly->add_option("--manual", o.manual, "manual excerpt file");
  anomaly->add_flag("--stub", o.stub, "offline stub clients");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsageError;
  }

  try {
    if (*ingest) return cmd_ingest(o);
    if (*bench_cmd) return cmd_bench(o);
    if (*eval) return cmd_eval(o);
    if (*timeres) return cmd_timeres(o);
    if (*serve) return cmd_serve(o);
    if (*anomaly) return cmd_anomaly(o);
  } catch (const UsageError& e) {
    fmt::print(stderr, "usage error: {}\n", e.what());
    return kUsageError;
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}: {}\n", to_string(e.code()), e.what());
    return kDataError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kDataError;
  }
  return kUsageError;
}
