#include "larag/types.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace larag {

bool EventRecord::same_content(const EventRecord& o) const {
  return audio_id == o.audio_id && tag == o.tag && start_s == o.start_s && end_s == o.end_s &&
         confidence == o.confidence && loudness_lufs == o.loudness_lufs;
}

namespace {
constexpr std::pair<ExpressionType, std::string_view> kExpressionNames[] = {
    {ExpressionType::full_day, "full_day"}, {ExpressionType::h24, "h24"},
    {ExpressionType::h12, "h12"},           {ExpressionType::shift, "shift"},
    {ExpressionType::before_after, "before_after"},
    {ExpressionType::duration, "duration"}, {ExpressionType::half, "half"},
    {ExpressionType::relative, "relative"},
};
constexpr std::pair<IntentKind, std::string_view> kIntentNames[] = {
    {IntentKind::summary, "summary"},
    {IntentKind::detection, "detection"},
    {IntentKind::counting, "counting"},
    {IntentKind::anomaly, "anomaly"},
};
}  // namespace

std::string_view to_string(ExpressionType type) {
  for (const auto& [t, name] : kExpressionNames)
    if (t == type) return name;
  return "unknown";
}

std::optional<ExpressionType> expression_type_from_string(std::string_view name) {
  for (const auto& [t, n] : kExpressionNames)
    if (n == name) return t;
  return std::nullopt;
}

std::string_view to_string(ResolutionSource source) {
  switch (source) {
    case ResolutionSource::rules: return "rules";
    case ResolutionSource::llm: return "llm";
    case ResolutionSource::fallback_default: return "default";
  }
  return "unknown";
}

std::string_view to_string(IntentKind kind) {
  for (const auto& [k, name] : kIntentNames)
    if (k == kind) return name;
  return "unknown";
}

std::optional<IntentKind> intent_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kIntentNames)
    if (n == name) return k;
  return std::nullopt;
}

std::string_view to_string(IntentMethod method) {
  switch (method) {
    case IntentMethod::keyword: return "keyword";
    case IntentMethod::embedding: return "embedding";
    case IntentMethod::fallback_default: return "default";
  }
  return "unknown";
}

std::vector<Span> TimeInterval::spans() const {
  std::vector<Span> out{{start_s, end_s}};
  if (continuation) out.push_back(*continuation);
  return out;
}

bool TimeInterval::same_bounds(const TimeInterval& other) const {
  auto close = [](double a, double b) { return std::abs(a - b) < 1e-6; };
  if (!close(start_s, other.start_s) || !close(end_s, other.end_s)) return false;
  if (continuation.has_value() != other.continuation.has_value()) return false;
  return !continuation || (close(continuation->start_s, other.continuation->start_s) &&
                           close(continuation->end_s, other.continuation->end_s));
}

TimeInterval TimeInterval::full_day(ResolutionSource source) {
  return TimeInterval{0.0, 86400.0, ExpressionType::full_day, source, std::nullopt};
}

std::string humanize_tag(std::string_view tag) {
  std::string out(tag);
  std::replace_if(out.begin(), out.end(), [](char c) { return c == '_' || c == '-'; }, ' ');
  return out;
}

std::string to_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace larag
