#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "larag/error.hpp"
#include "larag/event_store.hpp"
#include "larag/model_clients.hpp"
#include "larag/qa_pipeline.hpp"

namespace httplib {
class Server;
}

namespace larag {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string db_path = ":memory:";
  std::string cors_origin = "*";
  std::chrono::hours session_ttl{24};
  std::string intents_path;  // empty: builtin defaults
  std::string manual_path;   // plain-text manual for anomaly explanations
  ShiftConfig shifts = ShiftConfig::defaults();
  AnomalySettings anomaly;
  std::size_t k = kDefaultTopK;

  /// JSON config file; LARAG_ADDR ("host:port") overrides the listen address.
  static ServiceConfig load(const std::string& path);
  void apply_env();
};

struct HttpResponse {
  int status = 200;
  std::string body;  // JSON
};

using QueryParams = std::map<std::string, std::string>;

struct Session {
  std::string id;
  std::string audio_id;
  std::vector<ChatTurn> history;
  std::chrono::system_clock::time_point created_at;
  std::mutex mutex;  // serializes turns within the session
};

struct EnrolledSound {
  std::string tag;
  std::vector<std::string> example_refs;
  std::int64_t registered_at_ms = 0;
};

class Service {
 public:
  Service(ServiceConfig config, std::shared_ptr<EventStore> store, ModelClients clients);
  ~Service();

  HttpResponse health() const;
  HttpResponse ingest(const std::string& audio_id, const std::string& body);
  HttpResponse list_events(const std::string& audio_id, const QueryParams& params) const;
  HttpResponse create_session(const std::string& body);
  HttpResponse get_session(const std::string& session_id);
  HttpResponse chat(const std::string& session_id, const std::string& body);
  HttpResponse anomalies(const std::string& audio_id, const QueryParams& params) const;
  HttpResponse enroll(const std::string& body);
  HttpResponse list_sounds() const;
  /// Synthesizes a benchmark timeline and dataset; by default the timeline
  /// is ingested under "<domain>-<seed>" so it can be queried right away.
  HttpResponse generate_bench(const std::string& body);

  std::vector<std::string> enrolled_tags() const;
  const QaPipeline& pipeline() const { return *pipeline_; }

  /// Registers every route (plus CORS preflight) on the server.
  void mount(httplib::Server& server);
  /// Blocking listen on config host:port.
  void serve();

 private:
  std::shared_ptr<Session> find_session(const std::string& id);

  ServiceConfig config_;
  std::shared_ptr<EventStore> store_;
  ModelClients clients_;
  std::unique_ptr<QaPipeline> pipeline_;

  mutable std::mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::uint64_t session_counter_ = 0;

  mutable std::mutex sounds_mutex_;
  std::map<std::string, EnrolledSound> sounds_;
};

/// HTTP status for a library error code.
int http_status(ErrorCode code);
std::string error_body(std::string_view code, std::string_view detail);

std::string envelope_to_json(const AnswerEnvelope& env);

}  // namespace larag
