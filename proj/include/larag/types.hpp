#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace larag {

/// One detected acoustic event. Times are second offsets from the recording
/// start; id is 0 until the record has been stored.
struct EventRecord {
  std::int64_t id = 0;
  std::string audio_id;
  std::string tag;
  double start_s = 0.0;
  double end_s = 0.0;
  double confidence = 1.0;
  std::optional<double> loudness_lufs;

  bool same_content(const EventRecord& other) const;
};

enum class ExpressionType { full_day, h24, h12, shift, before_after, duration, half, relative };
enum class ResolutionSource { rules, llm, fallback_default };

std::string_view to_string(ExpressionType type);
std::optional<ExpressionType> expression_type_from_string(std::string_view name);
std::string_view to_string(ResolutionSource source);

struct Span {
  double start_s = 0.0;
  double end_s = 0.0;

  bool contains(double t) const { return t >= start_s && t < end_s; }
  double length() const { return end_s - start_s; }
  friend bool operator==(const Span&, const Span&) = default;
};

/// Half-open range [start_s, end_s) within one recording day. A shift that
/// crosses midnight resolves to [start, 86400) plus a continuation [0, end).
struct TimeInterval {
  double start_s = 0.0;
  double end_s = 86400.0;
  ExpressionType type = ExpressionType::full_day;
  ResolutionSource source = ResolutionSource::fallback_default;
  std::optional<Span> continuation;

  bool contains(double t) const {
    return (t >= start_s && t < end_s) || (continuation && continuation->contains(t));
  }
  std::vector<Span> spans() const;
  bool same_bounds(const TimeInterval& other) const;

  static TimeInterval full_day(ResolutionSource source = ResolutionSource::fallback_default);
};

enum class IntentKind { summary, detection, counting, anomaly };
enum class IntentMethod { keyword, embedding, fallback_default };

std::string_view to_string(IntentKind kind);
std::optional<IntentKind> intent_kind_from_string(std::string_view name);
std::string_view to_string(IntentMethod method);

struct Intent {
  IntentKind kind = IntentKind::summary;
  double score = 0.0;
  IntentMethod method = IntentMethod::fallback_default;
};

/// Tag with underscores and hyphens turned into spaces ("dog_bark" -> "dog bark").
std::string humanize_tag(std::string_view tag);

std::string to_lower(std::string_view text);

}  // namespace larag
