#pragma once

// Data-parallel inner loops shared by retrieval, intent routing, and the
// AGM post-processing batch path. Each kernel has an OpenMP version and a
// serial reference; tests hold them equal and bench/ compares them.

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "larag/agm_adapter.hpp"

namespace larag {

using Embedding = std::vector<double>;

inline constexpr std::size_t kTrigramDim = 256;

/// Cosine similarity; 0 when either vector is all zeros.
double cosine(std::span<const double> a, std::span<const double> b);

/// Character-trigram hashing into kTrigramDim buckets, unit-normalized.
/// Empty text maps to the zero vector.
Embedding trigram_embedding(std::string_view text);

namespace kernels {

std::vector<double> cosine_scores(std::span<const double> query, std::span<const Embedding> rows);
std::vector<Embedding> trigram_embed_batch(std::span<const std::string> texts);
std::vector<std::vector<Span>> scores_to_events_batch(std::span<const agm::FramewiseScores> batch,
                                                      double threshold, double filter_seconds);

/// Indices of the k highest scores, descending; ties go to the lower index.
std::vector<std::size_t> top_k(std::span<const double> scores, std::size_t k);

}  // namespace kernels

namespace kernels::serial {

std::vector<double> cosine_scores(std::span<const double> query, std::span<const Embedding> rows);
std::vector<Embedding> trigram_embed_batch(std::span<const std::string> texts);
std::vector<std::vector<Span>> scores_to_events_batch(std::span<const agm::FramewiseScores> batch,
                                                      double threshold, double filter_seconds);

}  // namespace kernels::serial

}  // namespace larag
