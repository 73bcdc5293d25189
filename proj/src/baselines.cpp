#include "larag/baselines.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <regex>

#include "larag/clock.hpp"
#include "larag/error.hpp"
#include "larag/kernels.hpp"
#include "larag/prompts.hpp"

namespace larag {

std::vector<std::string> events_to_snippets(std::span<const EventRecord> events) {
  std::vector<std::string> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    const std::string loud = e.loudness_lufs ? fmt::format("{:.1f}", *e.loudness_lufs) : std::string("n/a");
    out.push_back(fmt::format("{} at {} for {:.1f}s, {} LUFS", e.tag, format_hms(e.start_s), e.end_s - e.start_s, loud));
  }
  return out;
}

std::vector<Span> chunk_windows(double day_end_s) {
  std::vector<Span> out;
  for (double s = 0.0; s < day_end_s; s += kChunkSeconds) out.push_back({s, std::min(s + kChunkSeconds, day_end_s)});
  return out;
}

std::vector<Chunk> build_chunks(std::span<const EventRecord> events, Embedder& embedder, double day_end_s) {
  std::vector<EventRecord> sorted(events.begin(), events.end());
  std::sort(sorted.begin(), sorted.end(), [](const EventRecord& a, const EventRecord& b) {
    return a.start_s < b.start_s || (a.start_s == b.start_s && a.tag < b.tag);
  });
  std::vector<Chunk> chunks;
  std::size_t next = 0;
  for (const auto& w : chunk_windows(day_end_s)) {
    std::vector<EventRecord> inside;
    while (next < sorted.size() && sorted[next].start_s < w.end_s) {
      if (sorted[next].start_s >= w.start_s) inside.push_back(sorted[next]);
      ++next;
    }
    if (inside.empty()) continue;
    Chunk c;
    c.chunk_id = static_cast<std::size_t>(w.start_s / kChunkSeconds);
    c.window = TimeInterval{w.start_s, w.end_s, ExpressionType::h24, ResolutionSource::rules, std::nullopt};
    for (const auto& s : events_to_snippets(inside)) c.text += s + "\n";
    chunks.push_back(std::move(c));
  }
  std::vector<std::string> texts;
  texts.reserve(chunks.size());
  for (const auto& c : chunks) texts.push_back(c.text);
  if (!texts.empty()) {
    auto vectors = embedder.embed(texts);
    for (std::size_t i = 0; i < chunks.size() && i < vectors.size(); ++i) chunks[i].embedding = std::move(vectors[i]);
  }
  return chunks;
}

std::vector<std::size_t> rank_chunks(std::string_view query, std::span<const Chunk> chunks, Embedder& embedder,
                                     std::size_t k) {
  if (chunks.empty()) throw Error(ErrorCode::EmptyIndex, "no chunks indexed");
  std::vector<Embedding> rows;
  rows.reserve(chunks.size());
  for (const auto& c : chunks) rows.push_back(c.embedding);
  const auto q = embedder.embed_one(std::string(query));
  return kernels::top_k(kernels::cosine_scores(q, rows), k);
}

std::string rag_answer(std::string_view query, std::span<const Chunk> chunks, Embedder& embedder, LlmClient& client,
                       std::size_t k) {
  const auto top = rank_chunks(query, chunks, embedder, k);
  std::string context;
  for (auto i : top) context += chunks[i].text;
  if (!context.empty() && context.back() == '\n') context.pop_back();
  const std::string user =
      prompts::render(prompts::template_text("rag_answer"), {{"chunks", context}, {"question", std::string(query)}});
  return client.complete(ChatRequest{{{"system", prompts::system_message("rag-answer")}, {"user", user}}});
}

std::string extract_sql(std::string_view reply) {
  std::string s(reply);
  static const std::regex kFence(R"(```(?:sql|sqlite)?\s*([\s\S]*?)```)", std::regex::icase);
  std::smatch m;
  if (std::regex_search(s, m, kFence)) s = m[1].str();
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  s = s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
  while (!s.empty() && (s.back() == ';' || std::isspace(static_cast<unsigned char>(s.back())))) s.pop_back();
  return s;
}

void validate_sql(std::string_view sql) {
  std::string s = to_lower(sql);
  // Blank out string literals so keywords inside them do not count.
  bool in_str = false;
  for (auto& c : s) {
    if (c == '\'') in_str = !in_str;
    else if (in_str) c = ' ';
  }
  if (in_str) throw Error(ErrorCode::InvalidSQL, "unterminated string literal");
  auto body = s;
  while (!body.empty() && (body.back() == ';' || std::isspace(static_cast<unsigned char>(body.back())))) body.pop_back();
  if (body.find(';') != std::string::npos) throw Error(ErrorCode::InvalidSQL, "multiple statements");
  if (body.find("--") != std::string::npos || body.find("/*") != std::string::npos)
    throw Error(ErrorCode::InvalidSQL, "comments are not allowed");
  static const std::regex kStart(R"(^\s*(select|with)\b)");
  if (!std::regex_search(body, kStart)) throw Error(ErrorCode::InvalidSQL, "only SELECT statements are allowed");
  static const std::regex kForbidden(
      R"(\b(insert|update|delete|drop|create|alter|attach|detach|pragma|replace|vacuum|reindex|analyze|begin|commit|rollback|savepoint|release|into)\b)");
  std::smatch m;
  if (std::regex_search(body, m, kForbidden))
    throw Error(ErrorCode::InvalidSQL, fmt::format("forbidden keyword '{}'", m[1].str()));
}

Text2SqlResult text2sql_answer(std::string_view query, const std::string& audio_id, const EventStore& store,
                               LlmClient& client) {
  Text2SqlResult out;
  const auto tags = store.distinct_tags(audio_id, TimeInterval::full_day());
  const std::string schema = std::string(EventStore::kEventsDdl) + ";\n" + std::string(EventStore::kUniqueIndexDdl) + ";";
  const std::string user = prompts::render(prompts::template_text("text2sql"),
                                           {{"schema", schema},
                                            {"vocabulary", prompts::vocabulary_line(tags)},
                                            {"audio_id", audio_id},
                                            {"question", std::string(query)}});
  out.sql = extract_sql(client.complete(ChatRequest{{{"system", prompts::system_message("text2sql")}, {"user", user}}}));
  QueryResult result;
  try {
    validate_sql(out.sql);
    result = store.execute_readonly(out.sql, 1000);
  } catch (const Error& e) {
    out.error = fmt::format("{}: {}", to_string(e.code()), e.what());
    out.answer = fmt::format("The generated SQL could not be used ({}).", *out.error);
    return out;
  }
  const std::string answer_prompt = prompts::render(
      prompts::template_text("sql_answer"), {{"question", std::string(query)}, {"sql", out.sql}, {"table", result.render()}});
  out.answer =
      client.complete(ChatRequest{{{"system", prompts::system_message("sql-answer")}, {"user", answer_prompt}}});
  return out;
}

}  // namespace larag
