#include "larag/kernels.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <exception>
#include <numeric>

namespace larag {

double cosine(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = std::min(a.size(), b.size());
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  for (std::size_t i = n; i < a.size(); ++i) na += a[i] * a[i];
  for (std::size_t i = n; i < b.size(); ++i) nb += b[i] * b[i];
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

Embedding trigram_embedding(std::string_view text) {
  Embedding v(kTrigramDim, 0.0);
  if (text.empty()) return v;
  std::string padded;
  padded.reserve(text.size() + 2);
  padded.push_back(' ');
  for (unsigned char c : text) padded.push_back(static_cast<char>(std::tolower(c)));
  padded.push_back(' ');
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    std::uint32_t h = 2166136261u;  // FNV-1a
    for (std::size_t j = i; j < i + 3; ++j) {
      h ^= static_cast<unsigned char>(padded[j]);
      h *= 16777619u;
    }
    v[h % kTrigramDim] += 1.0;
  }
  double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  for (double& x : v) x /= norm;
  return v;
}

namespace kernels {

std::vector<double> cosine_scores(std::span<const double> query, std::span<const Embedding> rows) {
  std::vector<double> out(rows.size());
  const long n = static_cast<long>(rows.size());
#pragma omp parallel for schedule(static) if (n > 256)
  for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = cosine(query, rows[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<Embedding> trigram_embed_batch(std::span<const std::string> texts) {
  std::vector<Embedding> out(texts.size());
  const long n = static_cast<long>(texts.size());
#pragma omp parallel for schedule(dynamic, 16) if (n > 64)
  for (long i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = trigram_embedding(texts[static_cast<std::size_t>(i)]);
  return out;
}

std::vector<std::vector<Span>> scores_to_events_batch(std::span<const agm::FramewiseScores> batch,
                                                      double threshold, double filter_seconds) {
  std::vector<std::vector<Span>> out(batch.size());
  std::exception_ptr failure;
  const long n = static_cast<long>(batch.size());
#pragma omp parallel for schedule(dynamic)
  for (long i = 0; i < n; ++i) {
    try {
      out[static_cast<std::size_t>(i)] =
          agm::scores_to_events(batch[static_cast<std::size_t>(i)], threshold, filter_seconds);
    } catch (...) {
#pragma omp critical(larag_batch_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  k = std::min(k, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<long>(k), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });
  idx.resize(k);
  return idx;
}

}  // namespace kernels

namespace kernels::serial {

std::vector<double> cosine_scores(std::span<const double> query, std::span<const Embedding> rows) {
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(cosine(query, r));
  return out;
}

std::vector<Embedding> trigram_embed_batch(std::span<const std::string> texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(trigram_embedding(t));
  return out;
}

std::vector<std::vector<Span>> scores_to_events_batch(std::span<const agm::FramewiseScores> batch,
                                                      double threshold, double filter_seconds) {
  std::vector<std::vector<Span>> out;
  out.reserve(batch.size());
  for (const auto& s : batch) out.push_back(agm::scores_to_events(s, threshold, filter_seconds));
  return out;
}

}  // namespace kernels::serial

}  // namespace larag
