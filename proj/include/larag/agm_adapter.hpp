#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "larag/types.hpp"

namespace larag::agm {

struct RawEvent {
  std::string tag;
  double start_s = 0.0;
  double end_s = 0.0;
  double confidence = 0.0;
  std::optional<double> loudness_lufs;

  friend bool operator==(const RawEvent&, const RawEvent&) = default;
};

/// Parsed output of the audio grounding model for one recording.
struct AgmLog {
  std::string audio_id;
  std::string recording_start;  // ISO-8601, UTC
  std::optional<double> frame_rate_hz;
  std::vector<RawEvent> events;

  std::vector<EventRecord> to_records() const;
};

struct FramewiseScores {
  std::string tag;
  std::vector<double> scores;
  double frame_rate_hz = 0.0;
};

/// Throws Error(MalformedLog) on syntax errors and Error(SchemaViolation)
/// listing every offending entry when fields are missing or invalid.
AgmLog parse_agm_log(std::string_view text);
std::string serialize_agm_log(const AgmLog& log);

using Binary = std::vector<std::uint8_t>;

/// Centered running median over a 0/1 sequence with replicate padding.
Binary median_filter(std::span<const std::uint8_t> binary, int window_frames);

/// round(filter_seconds * frame_rate), bumped to the next odd number.
int filter_window_frames(double filter_seconds, double frame_rate_hz);

inline constexpr double kDefaultThreshold = 0.8;
inline constexpr double kDefaultFilterSeconds = 0.3;
inline constexpr double kEnrollmentThreshold = 0.5;

/// Binarize (score >= threshold), median filter, then emit maximal runs of
/// ones as [start, end) second offsets.
std::vector<Span> scores_to_events(const FramewiseScores& s, double threshold = kDefaultThreshold,
                                   double filter_seconds = kDefaultFilterSeconds);

/// Per-second scores from the enrollment model; whole-second runs, no filter.
std::vector<Span> enrollment_scores_to_events(std::span<const double> per_second_scores,
                                              double threshold = kEnrollmentThreshold);

/// Maximal runs of ones, as [first, last+1) frame indices.
std::vector<std::pair<std::size_t, std::size_t>> runs_of_ones(std::span<const std::uint8_t> binary);

}  // namespace larag::agm
