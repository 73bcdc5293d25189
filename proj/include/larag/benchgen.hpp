#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "larag/time_resolution.hpp"
#include "larag/types.hpp"

namespace larag::bench {

using Rng = std::mt19937_64;

struct DomainConfig {
  std::string name;  // industrial_iot | home_iot
  std::vector<std::string> classes;
  std::map<std::string, std::vector<std::string>> synonyms;
  std::vector<std::string> unrelated;
  ShiftConfig shifts = ShiftConfig::defaults();
  bool shift_queries_enabled = true;

  static DomainConfig industrial_iot();
  static DomainConfig home_iot();
  /// "industrial_iot"/"industrial"/"iiot", "home_iot"/"home"/"hiot".
  static std::optional<DomainConfig> by_name(std::string_view name);
  static DomainConfig load(const std::string& path);
  std::string to_json() const;

  /// Throws Error(InvalidArgument) on duplicate classes or synonyms for unknown tags.
  void validate() const;
};

/// Synonym tables of both builtin domains, keyed by tag.
std::map<std::string, std::vector<std::string>> builtin_tag_aliases();

struct LoudnessDist {
  double mean_lufs = -24.0;
  double std_lufs = 3.0;
};

struct TimelineParams {
  std::string audio_id = "bench";
  double duration_s = 86400.0;
  std::map<std::string, double> rates_per_hour;  // empty: default_rates()
  Span dur_range_s{1.0, 6.0};
  LoudnessDist loudness;
};

/// Deterministic per-class rates between 1 and 4 events/hour.
std::map<std::string, double> default_rates(const DomainConfig& config);

/// Per tag: Poisson(rate * hours) events placed uniformly, same-tag overlaps
/// rejected. Throws Error(PlacementFailure) past 10,000 rejections for a tag.
std::vector<EventRecord> synth_timeline(const DomainConfig& config, std::uint64_t seed, const TimelineParams& params);

struct SampledExpression {
  std::string phrase;
  TimeInterval interval;
  ExpressionType type = ExpressionType::h24;
};

/// Complex-mode type weights, in percent. Shift mass moves to h24 when the
/// domain disables shift queries.
std::map<ExpressionType, double> expression_distribution(const DomainConfig& config);

SampledExpression sample_time_expression(Rng& rng, const DomainConfig& config, bool complex_mode);

struct GroundTruthStats {
  bool detected = false;
  std::int64_t count = 0;
  std::optional<double> first_s;
  std::optional<double> last_s;

  friend bool operator==(const GroundTruthStats&, const GroundTruthStats&) = default;
};

struct GroundTruth {
  IntentKind category = IntentKind::detection;
  std::string subcategory;
  double start_s = 0.0;
  double end_s = 0.0;
  std::optional<Span> continuation;
  std::vector<std::string> tags;
  ExpressionType time_expression_type = ExpressionType::h24;
  GroundTruthStats stats;

  TimeInterval interval() const;
};

struct QAPair {
  std::string audio_id;
  std::string question;
  std::string reference_answer;
  GroundTruth ground_truth;
};

GroundTruthStats compute_ground_truth(std::span<const EventRecord> timeline, const TimeInterval& interval,
                                      std::span<const std::string> tags);

/// "- dog_bark: 3 event(s), first at 08:15:00, last at 09:02:11"
std::string summary_bullet(const std::string& tag, std::int64_t count, std::optional<double> first_s,
                           std::optional<double> last_s);
inline constexpr std::string_view kNoEventsBullet = "- no events detected";

/// Canonical summary: one bullet per tag with events in the interval, sorted by tag.
std::string summary_reference(std::span<const EventRecord> timeline, const TimeInterval& interval,
                              std::span<const std::string> tags);

inline const std::vector<std::string>& phase_names() {
  static const std::vector<std::string> kPhases = {"original_labels", "synonyms", "unrelated_events",
                                                   "specific_summary", "generic_summary"};
  return kPhases;
}

/// Five phases; phases 1-3 emit detection+counting pairs, 4-5 summaries.
/// Throws Error(GenerationExhausted) naming the phase when 10x per_phase
/// attempts do not fill it.
std::vector<QAPair> generate_dataset(std::span<const EventRecord> timeline, const DomainConfig& config,
                                     std::uint64_t seed, int per_phase = 100, bool complex_mode = false);

std::string qa_to_json_line(const QAPair& pair);
QAPair qa_from_json_line(std::string_view line);
void write_dataset(const std::string& path, std::span<const QAPair> pairs);
std::vector<QAPair> read_dataset(const std::string& path);

}  // namespace larag::bench
