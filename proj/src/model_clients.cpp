#include "larag/model_clients.hpp"

#include <httplib.h>

#include <cstdlib>
#include <json.hpp>

#include "larag/error.hpp"
#include "larag/stub_llm.hpp"

namespace larag {

using nlohmann::json;

std::pair<std::string, std::string> split_url(const std::string& url) {
  auto scheme = url.find("://");
  auto path_start = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

namespace {

httplib::Result post_json(const EndpointConfig& config, const json& body) {
  auto [base, path] = split_url(config.url);
  httplib::Client cli(base);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config.timeout - secs);
  cli.set_connection_timeout(secs.count(), usecs.count());
  cli.set_read_timeout(secs.count(), usecs.count());
  cli.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!config.api_key.empty()) headers.emplace("Authorization", "Bearer " + config.api_key);
  return cli.Post(path, headers, body.dump(), "application/json");
}

[[noreturn]] void throw_transport(const httplib::Result& res, ErrorCode unavailable) {
  if (res.error() == httplib::Error::Read || res.error() == httplib::Error::Write ||
      res.error() == httplib::Error::ConnectionTimeout)
    throw ClientError(ErrorCode::Timeout, "request timed out: " + httplib::to_string(res.error()));
  throw ClientError(unavailable, "endpoint unreachable: " + httplib::to_string(res.error()));
}

}  // namespace

HttpLlmClient::HttpLlmClient(EndpointConfig config) : config_(std::move(config)) {}

std::string HttpLlmClient::complete(const ChatRequest& request) {
  if (request.messages.empty()) throw Error(ErrorCode::InvalidArgument, "chat request needs at least one message");
  json body{{"model", config_.model}, {"temperature", request.temperature}, {"max_tokens", request.max_tokens}};
  json msgs = json::array();
  for (const auto& m : request.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  body["messages"] = std::move(msgs);

  auto res = post_json(config_, body);
  if (!res) throw_transport(res, ErrorCode::Timeout);
  if (res->status < 200 || res->status >= 300)
    throw ClientError(ErrorCode::HttpError, "chat endpoint returned HTTP " + std::to_string(res->status));
  try {
    auto reply = json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw ClientError(ErrorCode::MalformedResponse, std::string("unexpected chat reply: ") + e.what());
  }
}

Embedding Embedder::embed_one(const std::string& text) {
  std::string one[1] = {text};
  return embed(one).front();
}

std::vector<Embedding> TrigramEmbedder::embed(std::span<const std::string> texts) {
  return kernels::trigram_embed_batch(texts);
}

HttpEmbedder::HttpEmbedder(EndpointConfig config) : config_(std::move(config)) {}

std::vector<Embedding> HttpEmbedder::embed(std::span<const std::string> texts) {
  json body{{"model", config_.model}, {"input", json(std::vector<std::string>(texts.begin(), texts.end()))}};
  auto res = post_json(config_, body);
  if (!res) throw_transport(res, ErrorCode::ProviderUnavailable);
  if (res->status < 200 || res->status >= 300)
    throw ClientError(ErrorCode::ProviderUnavailable, "embedding endpoint returned HTTP " + std::to_string(res->status));
  try {
    auto reply = json::parse(res->body);
    const auto& data = reply.at("data");
    if (data.size() != texts.size())
      throw ClientError(ErrorCode::MalformedResponse, "embedding count does not match input count");
    std::vector<Embedding> out;
    out.reserve(data.size());
    for (const auto& d : data) out.push_back(d.at("embedding").get<Embedding>());
    return out;
  } catch (const json::exception& e) {
    throw ClientError(ErrorCode::MalformedResponse, std::string("unexpected embedding reply: ") + e.what());
  }
}

ModelClients clients_from_env(bool force_stub) {
  auto env = [](const char* name) -> std::string {
    const char* v = std::getenv(name);
    return v ? v : "";
  };
  ModelClients clients;
  const std::string llm_url = env("LARAG_LLM_URL");
  const std::string embed_url = env("LARAG_EMBED_URL");
  if (!force_stub && !llm_url.empty()) {
    clients.llm = std::make_shared<HttpLlmClient>(
        EndpointConfig{llm_url, env("LARAG_LLM_MODEL"), env("LARAG_API_KEY"), std::chrono::milliseconds(30000)});
    clients.stub = false;
  } else {
    clients.llm = std::make_shared<StubLlmClient>();
  }
  if (!force_stub && !embed_url.empty()) {
    clients.embedder = std::make_shared<HttpEmbedder>(
        EndpointConfig{embed_url, env("LARAG_LLM_MODEL"), env("LARAG_API_KEY"), std::chrono::milliseconds(30000)});
  } else {
    clients.embedder = std::make_shared<TrigramEmbedder>();
  }
  return clients;
}

}  // namespace larag
