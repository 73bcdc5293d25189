#pragma once

#include <span>
#include <string>
#include <vector>

#include "larag/event_store.hpp"
#include "larag/model_clients.hpp"
#include "larag/types.hpp"

namespace larag {

inline constexpr double kChunkSeconds = 240.0;

/// "<tag> at HH:MM:SS for <dur>s, <loudness> LUFS", one per event.
std::vector<std::string> events_to_snippets(std::span<const EventRecord> events);

struct Chunk {
  std::size_t chunk_id = 0;
  TimeInterval window;
  std::string text;
  Embedding embedding;
};

/// Partitions [0, day_end) into 4-minute windows (the last may be shorter);
/// windows without events are not indexed.
std::vector<Chunk> build_chunks(std::span<const EventRecord> events, Embedder& embedder,
                                double day_end_s = 86400.0);

/// Window bounds only, used to check the partition.
std::vector<Span> chunk_windows(double day_end_s = 86400.0);

/// Chunk indices by descending cosine to the query (ties to the lower index).
std::vector<std::size_t> rank_chunks(std::string_view query, std::span<const Chunk> chunks, Embedder& embedder,
                                     std::size_t k);

/// Throws Error(EmptyIndex) for an empty index.
std::string rag_answer(std::string_view query, std::span<const Chunk> chunks, Embedder& embedder, LlmClient& client,
                       std::size_t k = 5);

/// Conservative check: one statement, starting with SELECT or WITH, no write
/// or pragma keywords. Throws Error(InvalidSQL). The store's authorizer is the
/// second line of defence.
void validate_sql(std::string_view sql);

/// Strips code fences and a trailing semicolon from a model reply.
std::string extract_sql(std::string_view reply);

struct Text2SqlResult {
  std::string answer;
  std::string sql;
  std::optional<std::string> error;  // InvalidSQL / ExecutionError detail
};

Text2SqlResult text2sql_answer(std::string_view query, const std::string& audio_id, const EventStore& store,
                               LlmClient& client);

}  // namespace larag
