#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "larag/model_clients.hpp"
#include "larag/types.hpp"

namespace larag {

enum class AnomalyKind { loudness, start_time };
std::string_view to_string(AnomalyKind kind);

/// deviation is a z-score for loudness (absolute LUFS difference when the
/// baseline std is 0) and minutes to the nearest cluster for start times.
struct AnomalyRecord {
  EventRecord event;
  AnomalyKind kind = AnomalyKind::loudness;
  double observed = 0.0;
  double expected_low = 0.0;
  double expected_high = 0.0;
  double deviation = 0.0;
};

struct StartCluster {
  double center_s = 0.0;
  double min_s = 0.0;
  double max_s = 0.0;
  std::size_t size = 0;

  friend bool operator==(const StartCluster&, const StartCluster&) = default;
};

struct TagBaseline {
  std::string tag;
  double loudness_mean = 0.0;
  double loudness_std = 0.0;  // population std
  std::size_t loudness_n = 0;
  std::vector<StartCluster> start_clusters;
  std::size_t events = 0;
  /// Fewer than 2 events: detectors skip the tag.
  bool sufficient() const { return events >= 2; }
};

using Baselines = std::map<std::string, TagBaseline>;

/// Per tag: loudness mean/std and start-time clusters split where consecutive
/// sorted starts are more than gap_minutes apart.
Baselines fit_baseline(std::span<const EventRecord> historical, double gap_minutes = 30.0);

struct AnomalyResult {
  std::vector<AnomalyRecord> records;
  std::vector<std::string> skipped_tags;  // no usable baseline
};

/// Flags |loudness - mean| > z * std; with std 0 any difference flags.
AnomalyResult loudness_anomalies(std::span<const EventRecord> events, const Baselines& baselines, double z = 3.0);
/// Flags starts farther than max_distance_minutes from every cluster range.
AnomalyResult start_time_anomalies(std::span<const EventRecord> events, const Baselines& baselines,
                                   double max_distance_minutes = 45.0);

/// Fixed-width table sorted by time. Rows begin with the HH:MM:SS start.
std::string render_anomaly_table(std::vector<AnomalyRecord> records);

/// Asks the client to explain the table. On client failure returns the table
/// followed by a notice that no explanation is available.
std::string explain_anomalies(const std::string& table, const std::optional<std::string>& manual_text,
                              LlmClient& client);
ChatRequest anomaly_explain_request(const std::string& table, const std::optional<std::string>& manual_text);

enum class AnomalySubtype { any, loudness, start_time, pitch };
/// Keyword routing inside the anomaly intent.
AnomalySubtype anomaly_subtype(std::string_view question);

}  // namespace larag
