#include "larag/agm_adapter.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "larag/error.hpp"

namespace larag::agm {

using nlohmann::json;

namespace {

std::optional<double> number_field(const json& obj, const char* key, std::vector<std::string>& problems,
                                   const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    problems.push_back(where + ": missing field '" + key + "'");
    return std::nullopt;
  }
  if (!it->is_number()) {
    problems.push_back(where + ": field '" + key + "' is not a number");
    return std::nullopt;
  }
  return it->get<double>();
}

}  // namespace

std::vector<EventRecord> AgmLog::to_records() const {
  std::vector<EventRecord> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    out.push_back(EventRecord{0, audio_id, e.tag, e.start_s, e.end_s, e.confidence, e.loudness_lufs});
  }
  return out;
}

AgmLog parse_agm_log(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedLog, e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::MalformedLog, "top-level value must be an object");

  std::vector<std::string> problems;
  AgmLog log;
  if (auto it = doc.find("audio_id"); it != doc.end() && it->is_string() && !it->get<std::string>().empty())
    log.audio_id = it->get<std::string>();
  else
    problems.push_back("missing or empty 'audio_id'");
  if (auto it = doc.find("recording_start"); it != doc.end() && it->is_string())
    log.recording_start = it->get<std::string>();
  else
    problems.push_back("missing 'recording_start'");
  if (auto it = doc.find("frame_rate_hz"); it != doc.end() && !it->is_null()) {
    if (!it->is_number() || it->get<double>() <= 0.0)
      problems.push_back("'frame_rate_hz' must be a positive number");
    else
      log.frame_rate_hz = it->get<double>();
  }

  auto events = doc.find("events");
  if (events == doc.end() || !events->is_array()) {
    problems.push_back("missing 'events' array");
  } else {
    log.events.reserve(events->size());
    for (std::size_t i = 0; i < events->size(); ++i) {
      const json& e = (*events)[i];
      const std::string where = "events[" + std::to_string(i) + "]";
      if (!e.is_object()) {
        problems.push_back(where + ": not an object");
        continue;
      }
      RawEvent ev;
      const std::size_t before = problems.size();
      if (auto t = e.find("tag"); t != e.end() && t->is_string() && !t->get<std::string>().empty())
        ev.tag = t->get<std::string>();
      else
        problems.push_back(where + ": missing or empty 'tag'");
      auto start = number_field(e, "start_s", problems, where);
      auto end = number_field(e, "end_s", problems, where);
      auto conf = number_field(e, "confidence", problems, where);
      auto loud = e.find("loudness_lufs");
      if (loud == e.end())
        problems.push_back(where + ": missing field 'loudness_lufs'");
      else if (loud->is_number())
        ev.loudness_lufs = loud->get<double>();
      else if (!loud->is_null())
        problems.push_back(where + ": 'loudness_lufs' must be a number or null");
      if (start && *start < 0.0) problems.push_back(where + ": start_s < 0");
      if (start && end && !(*start < *end)) problems.push_back(where + ": start_s >= end_s");
      if (conf && (*conf < 0.0 || *conf > 1.0)) problems.push_back(where + ": confidence outside [0,1]");
      if (problems.size() == before) {
        ev.start_s = *start;
        ev.end_s = *end;
        ev.confidence = *conf;
        log.events.push_back(std::move(ev));
      }
    }
  }

  if (!problems.empty()) {
    std::string detail;
    for (const auto& p : problems) {
      if (!detail.empty()) detail += "; ";
      detail += p;
    }
    throw Error(ErrorCode::SchemaViolation, detail);
  }
  return log;
}

std::string serialize_agm_log(const AgmLog& log) {
  json doc;
  doc["audio_id"] = log.audio_id;
  doc["recording_start"] = log.recording_start;
  if (log.frame_rate_hz) doc["frame_rate_hz"] = *log.frame_rate_hz;
  json events = json::array();
  for (const auto& e : log.events) {
    json j{{"tag", e.tag}, {"start_s", e.start_s}, {"end_s", e.end_s}, {"confidence", e.confidence}};
    j["loudness_lufs"] = e.loudness_lufs ? json(*e.loudness_lufs) : json(nullptr);
    events.push_back(std::move(j));
  }
  doc["events"] = std::move(events);
  return doc.dump(2);
}

Binary median_filter(std::span<const std::uint8_t> binary, int window_frames) {
  if (window_frames <= 0 || window_frames % 2 == 0)
    throw Error(ErrorCode::InvalidWindow, "median window must be odd and positive, got " +
                                              std::to_string(window_frames));
  if (binary.empty()) throw Error(ErrorCode::InvalidWindow, "median filter needs a nonempty sequence");

  // For 0/1 input the median is 1 iff more than half the window is 1, so a
  // running sum over the replicate-padded sequence is enough.
  const long n = static_cast<long>(binary.size());
  const long half = window_frames / 2;
  auto at = [&](long i) -> int { return binary[static_cast<std::size_t>(std::clamp(i, 0L, n - 1))] ? 1 : 0; };
  Binary out(binary.size());
  int ones = 0;
  for (long j = -half; j <= half; ++j) ones += at(j);
  for (long i = 0; i < n; ++i) {
    out[static_cast<std::size_t>(i)] = ones > half ? 1 : 0;
    ones += at(i + half + 1) - at(i - half);
  }
  return out;
}

int filter_window_frames(double filter_seconds, double frame_rate_hz) {
  int w = static_cast<int>(std::lround(filter_seconds * frame_rate_hz));
  if (w < 1) w = 1;
  if (w % 2 == 0) ++w;
  return w;
}

std::vector<std::pair<std::size_t, std::size_t>> runs_of_ones(std::span<const std::uint8_t> binary) {
  std::vector<std::pair<std::size_t, std::size_t>> runs;
  std::size_t i = 0;
  while (i < binary.size()) {
    if (!binary[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < binary.size() && binary[j]) ++j;
    runs.emplace_back(i, j);
    i = j;
  }
  return runs;
}

std::vector<Span> scores_to_events(const FramewiseScores& s, double threshold, double filter_seconds) {
  if (!(s.frame_rate_hz > 0.0)) throw Error(ErrorCode::InvalidArgument, "frame_rate_hz must be positive");
  if (s.scores.empty()) return {};
  Binary binary(s.scores.size());
  std::transform(s.scores.begin(), s.scores.end(), binary.begin(),
                 [threshold](double v) { return v >= threshold ? 1 : 0; });
  const Binary filtered = median_filter(binary, filter_window_frames(filter_seconds, s.frame_rate_hz));
  std::vector<Span> out;
  for (auto [first, last] : runs_of_ones(filtered)) {
    out.push_back({static_cast<double>(first) / s.frame_rate_hz, static_cast<double>(last) / s.frame_rate_hz});
  }
  return out;
}

std::vector<Span> enrollment_scores_to_events(std::span<const double> per_second_scores, double threshold) {
  Binary binary(per_second_scores.size());
  std::transform(per_second_scores.begin(), per_second_scores.end(), binary.begin(),
                 [threshold](double v) { return v >= threshold ? 1 : 0; });
  std::vector<Span> out;
  for (auto [first, last] : runs_of_ones(binary)) {
    out.push_back({static_cast<double>(first), static_cast<double>(last)});
  }
  return out;
}

}  // namespace larag::agm
