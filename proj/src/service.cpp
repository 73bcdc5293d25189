#include "larag/service.hpp"

#include <fmt/format.h>
#include <httplib.h>

#include <cstdlib>
#include <fstream>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "larag/agm_adapter.hpp"
#include "larag/anomaly.hpp"
#include "larag/benchgen.hpp"
#include "larag/clock.hpp"
#include "larag/error.hpp"

namespace larag {

using nlohmann::json;

namespace {

std::int64_t now_ms() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

HttpResponse ok(const json& body, int status = 200) { return {status, body.dump()}; }

HttpResponse fail(ErrorCode code, std::string_view detail) {
  return {http_status(code), error_body(to_string(code), detail)};
}

HttpResponse fail(const Error& e) { return fail(e.code(), e.what()); }

json event_json(const EventRecord& e) {
  json j{{"id", e.id},
         {"audio_id", e.audio_id},
         {"tag", e.tag},
         {"start_s", e.start_s},
         {"end_s", e.end_s},
         {"start", format_hms(e.start_s)},
         {"end", format_hms(e.end_s)},
         {"confidence", e.confidence}};
  j["loudness_lufs"] = e.loudness_lufs ? json(*e.loudness_lufs) : json(nullptr);
  return j;
}

json interval_json(const TimeInterval& iv) {
  json j{{"start_s", iv.start_s},
         {"end_s", iv.end_s},
         {"start", format_hms(iv.start_s)},
         {"end", iv.end_s >= kDaySeconds ? std::string("24:00:00") : format_hms(iv.end_s)},
         {"type", std::string(to_string(iv.type))},
         {"source", std::string(to_string(iv.source))}};
  if (iv.continuation) j["continuation"] = {{"start_s", iv.continuation->start_s}, {"end_s", iv.continuation->end_s}};
  return j;
}

json turn_json(const ChatTurn& t) { return {{"role", t.role}, {"text", t.text}, {"timestamp_ms", t.timestamp_ms}}; }

std::optional<json> parse_body(const std::string& body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  return doc;
}

std::optional<double> param_number(const QueryParams& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end() || it->second.empty()) return std::nullopt;
  std::size_t used = 0;
  double v = std::stod(it->second, &used);
  if (used != it->second.size()) throw Error(ErrorCode::InvalidArgument, "bad number for '" + key + "'");
  return v;
}

std::optional<double> param_time(const QueryParams& params, const std::string& key) {
  auto it = params.find(key);
  if (it == params.end() || it->second.empty()) return std::nullopt;
  if (it->second.find(':') != std::string::npos) {
    auto v = parse_hms(it->second);
    if (!v) throw Error(ErrorCode::InvalidArgument, "bad clock time for '" + key + "'");
    return v;
  }
  return param_number(params, key);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLog:
    case ErrorCode::SchemaViolation:
    case ErrorCode::InvalidArgument:
    case ErrorCode::InvalidWindow: return 400;
    case ErrorCode::UnknownAudioId: return 404;
    case ErrorCode::ConstraintViolation: return 409;
    case ErrorCode::MissingBaseline:
    case ErrorCode::InsufficientBaseline:
    case ErrorCode::NotSupported: return 422;
    case ErrorCode::StoreUnavailable:
    case ErrorCode::StorageFailure: return 503;
    case ErrorCode::ClientUnavailable:
    case ErrorCode::Timeout:
    case ErrorCode::HttpError:
    case ErrorCode::MalformedResponse:
    case ErrorCode::EmbedderUnavailable:
    case ErrorCode::ProviderUnavailable: return 502;
    default: return 500;
  }
}

std::string error_body(std::string_view code, std::string_view detail) {
  return json{{"error", std::string(code)}, {"detail", std::string(detail)}}.dump();
}

std::string envelope_to_json(const AnswerEnvelope& env) {
  json evidence = json::array();
  for (const auto& e : env.evidence) evidence.push_back(event_json(e));
  json j{{"answer_text", env.answer_text},
         {"rephrased_query", env.rephrased_query},
         {"intent",
          {{"kind", std::string(to_string(env.intent.kind))},
           {"score", env.intent.score},
           {"method", std::string(to_string(env.intent.method))}}},
         {"interval", interval_json(env.interval)},
         {"evidence", evidence},
         {"latency_ms", env.latency_ms},
         {"total_ms", env.total_ms},
         {"model_ms", env.model_ms}};
  if (env.error) j["error"] = *env.error;
  return j.dump();
}

ServiceConfig ServiceConfig::load(const std::string& path) {
  ServiceConfig c;
  json doc;
  try {
    doc = json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, fmt::format("config {}: {}", path, e.what()));
  }
  if (doc.contains("listen")) {
    const std::string listen = doc["listen"].get<std::string>();
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "listen must be host:port");
    c.host = listen.substr(0, colon);
    c.port = std::stoi(listen.substr(colon + 1));
  }
  c.db_path = doc.value("db", c.db_path);
  c.cors_origin = doc.value("cors_origin", c.cors_origin);
  c.session_ttl = std::chrono::hours(doc.value("session_ttl_hours", 24));
  c.intents_path = doc.value("intents", std::string());
  c.manual_path = doc.value("manual", std::string());
  c.k = doc.value("k", c.k);
  if (doc.contains("anomaly")) {
    const auto& a = doc["anomaly"];
    c.anomaly.z = a.value("z", c.anomaly.z);
    c.anomaly.max_distance_minutes = a.value("max_distance_minutes", c.anomaly.max_distance_minutes);
    c.anomaly.gap_minutes = a.value("gap_minutes", c.anomaly.gap_minutes);
  }
  if (doc.contains("shifts")) {
    c.shifts.shifts.clear();
    for (const auto& s : doc["shifts"]) {
      auto start = parse_hms(s.at("start").get<std::string>()), end = parse_hms(s.at("end").get<std::string>());
      if (!start || !end) throw Error(ErrorCode::InvalidArgument, "bad shift bounds in " + path);
      c.shifts.shifts.emplace_back(s.at("name").get<std::string>(), Span{*start, *end});
    }
    c.shifts.normalize_and_validate();
  }
  return c;
}

void ServiceConfig::apply_env() {
  if (const char* addr = std::getenv("LARAG_ADDR"); addr && *addr) {
    const std::string a(addr);
    const auto colon = a.rfind(':');
    if (colon == std::string::npos) throw Error(ErrorCode::InvalidArgument, "LARAG_ADDR must be host:port");
    host = a.substr(0, colon);
    port = std::stoi(a.substr(colon + 1));
  }
}

Service::Service(ServiceConfig config, std::shared_ptr<EventStore> store, ModelClients clients)
    : config_(std::move(config)), store_(std::move(store)), clients_(std::move(clients)) {
  if (!store_) throw Error(ErrorCode::StoreUnavailable, "service has no event store");
  PipelineDeps deps;
  deps.store = store_.get();
  deps.llm = clients_.llm;
  deps.embedder = clients_.embedder;
  deps.classifier = std::make_shared<IntentClassifier>(
      config_.intents_path.empty() ? IntentConfig::defaults() : IntentConfig::load(config_.intents_path),
      clients_.embedder);
  deps.shifts = config_.shifts;
  deps.k = config_.k;
  deps.anomaly = config_.anomaly;
  if (!config_.manual_path.empty()) deps.anomaly.manual_text = read_text_file(config_.manual_path);
  deps.extra_vocabulary = [this] { return enrolled_tags(); };
  pipeline_ = std::make_unique<QaPipeline>(std::move(deps));
}

Service::~Service() = default;

HttpResponse Service::health() const { return ok({{"status", "ok"}, {"stub", clients_.stub}}); }

HttpResponse Service::ingest(const std::string& audio_id, const std::string& body) {
  try {
    const agm::AgmLog log = agm::parse_agm_log(body);
    if (log.audio_id != audio_id)
      return fail(ErrorCode::SchemaViolation,
                  fmt::format("log audio_id '{}' does not match path '{}'", log.audio_id, audio_id));
    const auto records = log.to_records();
    const IngestResult r = store_->ingest(records);
    store_->register_audio(audio_id, log.recording_start);
    return ok({{"audio_id", audio_id}, {"inserted", r.inserted}, {"skipped", r.skipped}});
  } catch (const Error& e) {
    return fail(e);
  }
}

HttpResponse Service::list_events(const std::string& audio_id, const QueryParams& params) const {
  try {
    TimeInterval iv = TimeInterval::full_day();
    if (auto s = param_time(params, "start")) iv.start_s = *s;
    if (auto e = param_time(params, "end")) iv.end_s = *e;
    if (!(iv.start_s < iv.end_s)) return fail(ErrorCode::InvalidArgument, "start must be before end");
    TagFilter tags;
    if (auto it = params.find("tag"); it != params.end() && !it->second.empty()) tags = std::vector{it->second};
    json rows = json::array();
    for (const auto& e : store_->query_interval(audio_id, iv, tags)) rows.push_back(event_json(e));
    return ok({{"audio_id", audio_id}, {"events", rows}});
  } catch (const Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    return fail(ErrorCode::InvalidArgument, e.what());
  }
}

HttpResponse Service::create_session(const std::string& body) {
  auto doc = parse_body(body);
  if (!doc || !doc->contains("audio_id") || !(*doc)["audio_id"].is_string())
    return fail(ErrorCode::InvalidArgument, "body must be {\"audio_id\": string}");
  const std::string audio_id = (*doc)["audio_id"].get<std::string>();
  try {
    if (!store_->has_audio(audio_id)) return fail(ErrorCode::UnknownAudioId, "unknown audio_id '" + audio_id + "'");
  } catch (const Error& e) {
    return fail(e);
  }
  auto session = std::make_shared<Session>();
  session->audio_id = audio_id;
  session->created_at = std::chrono::system_clock::now();
  {
    std::lock_guard lock(sessions_mutex_);
    static thread_local std::mt19937_64 rng{std::random_device{}()};
    session->id = fmt::format("s{:016x}{:04x}", rng(), ++session_counter_ & 0xffff);
    sessions_[session->id] = session;
  }
  return ok({{"session_id", session->id}, {"audio_id", audio_id}, {"history", json::array()}}, 201);
}

std::shared_ptr<Session> Service::find_session(const std::string& id) {
  std::lock_guard lock(sessions_mutex_);
  const auto now = std::chrono::system_clock::now();
  for (auto it = sessions_.begin(); it != sessions_.end();) {
    if (now - it->second->created_at > config_.session_ttl)
      it = sessions_.erase(it);
    else
      ++it;
  }
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

HttpResponse Service::get_session(const std::string& session_id) {
  auto session = find_session(session_id);
  if (!session) return {404, error_body("UnknownSession", "no session '" + session_id + "'")};
  std::lock_guard lock(session->mutex);
  json history = json::array();
  for (const auto& t : session->history) history.push_back(turn_json(t));
  return ok({{"session_id", session->id}, {"audio_id", session->audio_id}, {"history", history}});
}

HttpResponse Service::chat(const std::string& session_id, const std::string& body) {
  auto session = find_session(session_id);
  if (!session) return {404, error_body("UnknownSession", "no session '" + session_id + "'")};
  auto doc = parse_body(body);
  if (!doc || !doc->contains("text") || !(*doc)["text"].is_string() || (*doc)["text"].get<std::string>().empty())
    return fail(ErrorCode::InvalidArgument, "body must be {\"text\": nonempty string}");
  const std::string text = (*doc)["text"].get<std::string>();
  std::lock_guard lock(session->mutex);
  try {
    AnswerEnvelope env = pipeline_->answer(text, session->audio_id, session->history);
    session->history.push_back({"user", text, now_ms()});
    session->history.push_back({"assistant", env.answer_text, now_ms()});
    return {200, envelope_to_json(env)};
  } catch (const Error& e) {
    return fail(e);
  }
}

HttpResponse Service::anomalies(const std::string& audio_id, const QueryParams& params) const {
  try {
    if (!store_->has_audio(audio_id)) return fail(ErrorCode::UnknownAudioId, "unknown audio_id '" + audio_id + "'");
    std::string kind = "all";
    if (auto it = params.find("kind"); it != params.end() && !it->second.empty()) kind = to_lower(it->second);
    if (kind == "pitch") return fail(ErrorCode::NotSupported, "pitch anomalies need raw audio, which is never uploaded");
    if (kind != "all" && kind != "loudness" && kind != "start_time")
      return fail(ErrorCode::InvalidArgument, "kind must be loudness, start_time, pitch, or all");
    const double z = param_number(params, "z").value_or(config_.anomaly.z);
    const double max_minutes = param_number(params, "max_minutes").value_or(config_.anomaly.max_distance_minutes);
    std::string baseline_id = audio_id;
    if (auto it = params.find("baseline"); it != params.end() && !it->second.empty()) baseline_id = it->second;
    if (!store_->has_audio(baseline_id)) return fail(ErrorCode::UnknownAudioId, "unknown baseline '" + baseline_id + "'");

    const auto baselines = fit_baseline(store_->query_interval(baseline_id, TimeInterval::full_day()),
                                        config_.anomaly.gap_minutes);
    bool any_usable = false;
    for (const auto& [tag, b] : baselines) any_usable = any_usable || b.sufficient();
    if (!any_usable)
      return fail(ErrorCode::InsufficientBaseline, "no tag has the 2 historical events a baseline needs");

    TimeInterval iv = TimeInterval::full_day();
    if (auto s = param_time(params, "start")) iv.start_s = *s;
    if (auto e = param_time(params, "end")) iv.end_s = *e;
    const auto events = store_->query_interval(audio_id, iv);
    AnomalyResult all;
    std::set<std::string> skipped;
    auto take = [&](AnomalyResult r) {
      all.records.insert(all.records.end(), r.records.begin(), r.records.end());
      skipped.insert(r.skipped_tags.begin(), r.skipped_tags.end());
    };
    if (kind != "start_time") take(loudness_anomalies(events, baselines, z));
    if (kind != "loudness") take(start_time_anomalies(events, baselines, max_minutes));
    std::stable_sort(all.records.begin(), all.records.end(), [](const AnomalyRecord& a, const AnomalyRecord& b) {
      return a.event.start_s < b.event.start_s || (a.event.start_s == b.event.start_s && a.event.tag < b.event.tag);
    });
    json rows = json::array();
    for (const auto& r : all.records)
      rows.push_back({{"time", format_hms(r.event.start_s)},
                      {"tag", r.event.tag},
                      {"kind", std::string(to_string(r.kind))},
                      {"observed", r.observed},
                      {"expected_low", r.expected_low},
                      {"expected_high", r.expected_high},
                      {"deviation", r.deviation},
                      {"event", event_json(r.event)}});
    return ok({{"audio_id", audio_id},
               {"baseline", baseline_id},
               {"rows", rows},
               {"table", render_anomaly_table(all.records)},
               {"skipped_tags", std::vector<std::string>(skipped.begin(), skipped.end())}});
  } catch (const Error& e) {
    return fail(e);
  } catch (const std::exception& e) {
    return fail(ErrorCode::InvalidArgument, e.what());
  }
}

HttpResponse Service::enroll(const std::string& body) {
  auto doc = parse_body(body);
  if (!doc || !doc->contains("tag") || !(*doc)["tag"].is_string())
    return fail(ErrorCode::InvalidArgument, "body must be {\"tag\": string, \"example_refs\": [string]}");
  EnrolledSound sound;
  sound.tag = (*doc)["tag"].get<std::string>();
  if (sound.tag.empty() || sound.tag.find_first_of(" \t\n,|") != std::string::npos)
    return fail(ErrorCode::InvalidArgument, "tag must be nonempty without spaces, commas or pipes");
  if (doc->contains("example_refs")) {
    const auto& refs = (*doc)["example_refs"];
    if (!refs.is_array()) return fail(ErrorCode::InvalidArgument, "example_refs must be a list");
    for (const auto& r : refs) {
      if (!r.is_string()) return fail(ErrorCode::InvalidArgument, "example_refs must be strings");
      sound.example_refs.push_back(r.get<std::string>());
    }
  }
  sound.registered_at_ms = now_ms();
  std::lock_guard lock(sounds_mutex_);
  if (sounds_.count(sound.tag)) return fail(ErrorCode::ConstraintViolation, "tag '" + sound.tag + "' already registered");
  sounds_[sound.tag] = sound;
  return ok({{"tag", sound.tag}, {"example_refs", sound.example_refs}, {"registered_at_ms", sound.registered_at_ms}}, 201);
}

HttpResponse Service::list_sounds() const {
  std::lock_guard lock(sounds_mutex_);
  json rows = json::array();
  for (const auto& [tag, s] : sounds_)
    rows.push_back({{"tag", tag}, {"example_refs", s.example_refs}, {"registered_at_ms", s.registered_at_ms}});
  return ok({{"sounds", rows}});
}

HttpResponse Service::generate_bench(const std::string& body) {
  auto doc = parse_body(body.empty() ? "{}" : body);
  if (!doc || !doc->is_object()) return fail(ErrorCode::InvalidArgument, "body must be a JSON object");
  try {
    const std::string name = doc->value("domain", std::string("home_iot"));
    const auto domain = bench::DomainConfig::by_name(name);
    if (!domain) return fail(ErrorCode::InvalidArgument, "unknown domain '" + name + "'");
    const auto seed = doc->value("seed", std::uint64_t{0});
    const bool complex_mode = doc->value("complex", false);
    const int per_phase = doc->value("per_phase", 100);
    if (per_phase < 1 || per_phase > 1000) return fail(ErrorCode::InvalidArgument, "per_phase must be in 1..1000");

    bench::TimelineParams params;
    params.audio_id = domain->name + "-" + std::to_string(seed);
    const auto timeline = bench::synth_timeline(*domain, seed, params);
    const auto pairs = bench::generate_dataset(timeline, *domain, seed, per_phase, complex_mode);

    json out{{"audio_id", params.audio_id}, {"domain", domain->name}, {"seed", seed},
             {"complex", complex_mode},     {"timeline_events", timeline.size()}};
    if (doc->value("ingest", true)) {
      const IngestResult r = store_->ingest(timeline);
      store_->register_audio(params.audio_id, "2025-01-01T00:00:00Z");
      out["inserted"] = r.inserted;
      out["skipped"] = r.skipped;
    }
    std::map<std::string, int> split, types;
    json rows = json::array();
    for (const auto& p : pairs) {
      split[std::string(to_string(p.ground_truth.category))]++;
      types[std::string(to_string(p.ground_truth.time_expression_type))]++;
      rows.push_back(json::parse(bench::qa_to_json_line(p)));
    }
    out["split"] = split;
    out["time_expression_types"] = types;
    out["pairs"] = std::move(rows);
    return ok(out);
  } catch (const Error& e) {
    return fail(e);
  } catch (const json::exception& e) {
    return fail(ErrorCode::InvalidArgument, e.what());
  }
}

std::vector<std::string> Service::enrolled_tags() const {
  std::lock_guard lock(sounds_mutex_);
  std::vector<std::string> out;
  for (const auto& [tag, s] : sounds_) out.push_back(tag);
  return out;
}

void Service::mount(httplib::Server& server) {
  auto reply = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  auto params_of = [](const httplib::Request& req) {
    QueryParams p;
    for (const auto& [k, v] : req.params) p[k] = v;
    return p;
  };
  server.set_default_headers({{"Access-Control-Allow-Origin", config_.cors_origin},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  server.Get("/healthz", [=, this](const httplib::Request&, httplib::Response& res) { reply(res, health()); });
  server.Post(R"(/v1/audio/([^/]+)/events)", [=, this](const httplib::Request& req, httplib::Response& res) {
    reply(res, ingest(req.matches[1], req.body));
  });
  server.Get(R"(/v1/audio/([^/]+)/events)", [=, this](const httplib::Request& req, httplib::Response& res) {
    reply(res, list_events(req.matches[1], params_of(req)));
  });
  server.Get(R"(/v1/audio/([^/]+)/anomalies)", [=, this](const httplib::Request& req, httplib::Response& res) {
    reply(res, anomalies(req.matches[1], params_of(req)));
  });
  server.Post("/v1/sessions",
              [=, this](const httplib::Request& req, httplib::Response& res) { reply(res, create_session(req.body)); });
  server.Get(R"(/v1/sessions/([^/]+))", [=, this](const httplib::Request& req, httplib::Response& res) {
    reply(res, get_session(req.matches[1]));
  });
  server.Post(R"(/v1/sessions/([^/]+)/messages)", [=, this](const httplib::Request& req, httplib::Response& res) {
    reply(res, chat(req.matches[1], req.body));
  });
  server.Post("/v1/sounds", [=, this](const httplib::Request& req, httplib::Response& res) { reply(res, enroll(req.body)); });
  server.Get("/v1/sounds", [=, this](const httplib::Request&, httplib::Response& res) { reply(res, list_sounds()); });
  server.Post("/v1/bench",
              [=, this](const httplib::Request& req, httplib::Response& res) { reply(res, generate_bench(req.body)); });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string detail = "unknown error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      detail = e.what();
    } catch (...) {
    }
    res.status = 500;
    res.set_content(error_body("InternalError", detail), "application/json");
  });
}

void Service::serve() {
  httplib::Server server;
  mount(server);
  if (!server.listen(config_.host, config_.port))
    throw Error(ErrorCode::InvalidArgument, fmt::format("cannot listen on {}:{}", config_.host, config_.port));
}

}  // namespace larag
