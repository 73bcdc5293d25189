#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "larag/kernels.hpp"

namespace larag {

struct ChatMessage {
  std::string role;  // system | user | assistant
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  int max_tokens = 512;
  double temperature = 0.0;
};

/// Chat-completion boundary. Implementations throw ClientError (Timeout,
/// HttpError, MalformedResponse, ClientUnavailable); callers degrade.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

/// Wraps a callable; used by tests and for scripted replies.
class FunctionLlmClient final : public LlmClient {
 public:
  using Fn = std::function<std::string(const ChatRequest&)>;
  explicit FunctionLlmClient(Fn fn) : fn_(std::move(fn)) {}
  std::string complete(const ChatRequest& request) override { return fn_(request); }

 private:
  Fn fn_;
};

struct EndpointConfig {
  std::string url;  // e.g. http://localhost:8000/v1/chat/completions
  std::string model;
  std::string api_key;
  std::chrono::milliseconds timeout{30000};
};

/// OpenAI-compatible chat endpoint over plain HTTP.
class HttpLlmClient final : public LlmClient {
 public:
  explicit HttpLlmClient(EndpointConfig config);
  std::string complete(const ChatRequest& request) override;

 private:
  EndpointConfig config_;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<Embedding> embed(std::span<const std::string> texts) = 0;
  /// True for the offline trigram embedder (changes intent thresholds).
  virtual bool is_fallback() const { return false; }

  Embedding embed_one(const std::string& text);
};

class TrigramEmbedder final : public Embedder {
 public:
  std::vector<Embedding> embed(std::span<const std::string> texts) override;
  bool is_fallback() const override { return true; }
};

/// OpenAI-compatible /embeddings endpoint. Throws ClientError(ProviderUnavailable).
class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(EndpointConfig config);
  std::vector<Embedding> embed(std::span<const std::string> texts) override;

 private:
  EndpointConfig config_;
};

struct ModelClients {
  std::shared_ptr<LlmClient> llm;
  std::shared_ptr<Embedder> embedder;
  bool stub = true;
};

/// Reads LARAG_LLM_URL, LARAG_LLM_MODEL, LARAG_EMBED_URL, LARAG_API_KEY.
/// Unset variables (or force_stub) select the stub LLM and trigram embedder.
ModelClients clients_from_env(bool force_stub = false);

/// Splits "http://host:port/path" into (scheme://host:port, /path).
std::pair<std::string, std::string> split_url(const std::string& url);

}  // namespace larag
