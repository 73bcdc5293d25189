#include "larag/anomaly.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "larag/clock.hpp"
#include "larag/error.hpp"
#include "larag/intent_classifier.hpp"
#include "larag/prompts.hpp"

namespace larag {

std::string_view to_string(AnomalyKind kind) { return kind == AnomalyKind::loudness ? "loudness" : "start_time"; }

Baselines fit_baseline(std::span<const EventRecord> historical, double gap_minutes) {
  std::map<std::string, std::vector<const EventRecord*>> by_tag;
  for (const auto& e : historical) by_tag[e.tag].push_back(&e);
  Baselines out;
  const double gap_s = gap_minutes * 60.0;
  for (auto& [tag, list] : by_tag) {
    TagBaseline b;
    b.tag = tag;
    b.events = list.size();
    // Sorted copies keep the sums independent of input order.
    std::vector<double> loud, starts;
    for (const auto* e : list) {
      starts.push_back(e->start_s);
      if (e->loudness_lufs) loud.push_back(*e->loudness_lufs);
    }
    std::sort(loud.begin(), loud.end());
    std::sort(starts.begin(), starts.end());
    if (!loud.empty()) {
      double sum = 0.0;
      for (double v : loud) sum += v;
      b.loudness_mean = sum / static_cast<double>(loud.size());
      double sq = 0.0;
      for (double v : loud) sq += (v - b.loudness_mean) * (v - b.loudness_mean);
      b.loudness_std = std::sqrt(sq / static_cast<double>(loud.size()));
      b.loudness_n = loud.size();
    }
    for (std::size_t i = 0; i < starts.size(); ++i) {
      if (i == 0 || starts[i] - starts[i - 1] > gap_s) b.start_clusters.push_back({0.0, starts[i], starts[i], 0});
      auto& c = b.start_clusters.back();
      c.max_s = starts[i];
      c.center_s += starts[i];
      ++c.size;
    }
    for (auto& c : b.start_clusters) c.center_s /= static_cast<double>(c.size);
    out.emplace(tag, std::move(b));
  }
  return out;
}

namespace {

const TagBaseline* usable(const Baselines& baselines, const std::string& tag, std::set<std::string>& skipped) {
  auto it = baselines.find(tag);
  if (it == baselines.end() || !it->second.sufficient()) {
    skipped.insert(tag);
    return nullptr;
  }
  return &it->second;
}

}  // namespace

AnomalyResult loudness_anomalies(std::span<const EventRecord> events, const Baselines& baselines, double z) {
  AnomalyResult out;
  std::set<std::string> skipped;
  for (const auto& e : events) {
    if (!e.loudness_lufs) continue;
    const TagBaseline* b = usable(baselines, e.tag, skipped);
    if (!b) continue;
    if (b->loudness_n < 2) {
      skipped.insert(e.tag);
      continue;
    }
    const double diff = std::abs(*e.loudness_lufs - b->loudness_mean);
    const double allowed = z * b->loudness_std;
    if (!(diff > allowed)) continue;
    const double deviation = b->loudness_std > 0 ? diff / b->loudness_std : diff;
    out.records.push_back({e, AnomalyKind::loudness, *e.loudness_lufs, b->loudness_mean - allowed,
                           b->loudness_mean + allowed, deviation});
  }
  out.skipped_tags.assign(skipped.begin(), skipped.end());
  return out;
}

AnomalyResult start_time_anomalies(std::span<const EventRecord> events, const Baselines& baselines,
                                   double max_distance_minutes) {
  AnomalyResult out;
  std::set<std::string> skipped;
  for (const auto& e : events) {
    const TagBaseline* b = usable(baselines, e.tag, skipped);
    if (!b) continue;
    const StartCluster* nearest = nullptr;
    double best = 0.0;
    for (const auto& c : b->start_clusters) {
      const double d = e.start_s < c.min_s ? c.min_s - e.start_s : e.start_s > c.max_s ? e.start_s - c.max_s : 0.0;
      if (!nearest || d < best) {
        nearest = &c;
        best = d;
      }
    }
    if (!nearest) continue;
    const double minutes = best / 60.0;
    if (!(minutes > max_distance_minutes)) continue;
    out.records.push_back({e, AnomalyKind::start_time, e.start_s, nearest->min_s, nearest->max_s, minutes});
  }
  out.skipped_tags.assign(skipped.begin(), skipped.end());
  return out;
}

std::string render_anomaly_table(std::vector<AnomalyRecord> records) {
  std::stable_sort(records.begin(), records.end(), [](const AnomalyRecord& a, const AnomalyRecord& b) {
    if (a.event.start_s != b.event.start_s) return a.event.start_s < b.event.start_s;
    if (a.event.tag != b.event.tag) return a.event.tag < b.event.tag;
    return a.kind < b.kind;
  });
  std::string out = fmt::format("{:<10}{:<22}{:<12}{:<14}{:<22}{}\n", "time", "tag", "kind", "observed", "expected",
                                "deviation");
  for (const auto& r : records) {
    std::string observed, expected, deviation;
    if (r.kind == AnomalyKind::loudness) {
      observed = fmt::format("{:.1f} LUFS", r.observed);
      expected = fmt::format("{:.1f}..{:.1f}", r.expected_low, r.expected_high);
      deviation = fmt::format("z={:.2f}", r.deviation);
    } else {
      observed = format_hms(r.observed);
      expected = format_hms(r.expected_low) + ".." + format_hms(r.expected_high);
      deviation = fmt::format("{:.1f} min", r.deviation);
    }
    out += fmt::format("{:<10}{:<22}{:<12}{:<14}{:<22}{}\n", format_hms(r.event.start_s), r.event.tag,
                       to_string(r.kind), observed, expected, deviation);
  }
  return out;
}

ChatRequest anomaly_explain_request(const std::string& table, const std::optional<std::string>& manual_text) {
  const std::string manual = manual_text ? "Manual excerpt:\n" + *manual_text + "\n" : std::string();
  const std::string user = prompts::render(prompts::template_text("anomaly_explain"), {{"table", table}, {"manual", manual}});
  return ChatRequest{{{"system", prompts::system_message("anomaly-explain")}, {"user", user}}};
}

std::string explain_anomalies(const std::string& table, const std::optional<std::string>& manual_text,
                              LlmClient& client) {
  try {
    std::string reply = client.complete(anomaly_explain_request(table, manual_text));
    if (!reply.empty()) return reply;
    return table + "(no explanation available: empty reply)";
  } catch (const std::exception& e) {
    return table + fmt::format("(no explanation available: {})", e.what());
  }
}

AnomalySubtype anomaly_subtype(std::string_view question) {
  const std::string q = " " + normalize_words(question) + " ";
  for (const char* k : {" pitch ", " frequency ", " frequencies ", " tone ", " spectral "})
    if (q.find(k) != std::string::npos) return AnomalySubtype::pitch;
  for (const char* k : {" loud ", " louder ", " loudness ", " volume ", " quiet ", " quieter "})
    if (q.find(k) != std::string::npos) return AnomalySubtype::loudness;
  for (const char* k : {" start ", " started ", " time ", " timing ", " early ", " late ", " when "})
    if (q.find(k) != std::string::npos) return AnomalySubtype::start_time;
  return AnomalySubtype::any;
}

}  // namespace larag
