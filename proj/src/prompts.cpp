#include "larag/prompts.hpp"

#include <fmt/format.h>

#include "larag/clock.hpp"
#include "larag/error.hpp"
#include "larag/prompt_assets.hpp"

namespace larag::prompts {

namespace {

const assets::PromptAsset& find_asset(std::string_view name) {
  for (const auto& a : assets::kPrompts)
    if (a.name == name) return a;
  throw Error(ErrorCode::InvalidArgument, fmt::format("unknown prompt template '{}'", name));
}

}  // namespace

std::string_view template_text(std::string_view name) { return find_asset(name).text; }
std::string_view template_version(std::string_view name) { return find_asset(name).version; }

std::vector<std::string> template_names() {
  std::vector<std::string> out;
  for (const auto& a : assets::kPrompts) out.emplace_back(a.name);
  return out;
}

std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  out.reserve(tmpl.size() + 256);
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      auto close = tmpl.find('}', i + 1);
      if (close != std::string_view::npos) {
        auto it = values.find(std::string(tmpl.substr(i + 1, close - i - 1)));
        if (it != values.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

std::string marker_line(std::string_view task) { return fmt::format("### task: {}", task); }

std::optional<std::string> task_of(const ChatRequest& request) {
  static constexpr std::string_view kPrefix = "### task: ";
  for (const auto& m : request.messages) {
    if (m.role != "system") continue;
    if (m.content.rfind(kPrefix, 0) != 0) continue;
    auto eol = m.content.find('\n');
    return m.content.substr(kPrefix.size(), eol == std::string::npos ? std::string::npos : eol - kPrefix.size());
  }
  return std::nullopt;
}

std::string system_message(std::string_view task) {
  return marker_line(task) +
         "\nYou are an assistant for acoustic monitoring. You only know what the provided event logs say; "
         "never invent events, times, or counts.";
}

std::string clock_range(double start_s, double end_s) {
  return format_hms(start_s) + "\xE2\x80\x93" + format_hms(end_s);
}

std::string evidence_line(const EventRecord& e) {
  std::string loud = e.loudness_lufs ? fmt::format("{:.1f} LUFS", *e.loudness_lufs) : std::string("n/a");
  return fmt::format("{} | {} | {:.2f} | {}", clock_range(e.start_s, e.end_s), e.tag, e.confidence, loud);
}

std::string evidence_block(std::span<const EventRecord> events) {
  if (events.empty()) return std::string(kNoEvidenceLine);
  std::string out;
  for (const auto& e : events) {
    if (!out.empty()) out += '\n';
    out += evidence_line(e);
  }
  return out;
}

std::string interval_statement(const TimeInterval& interval) {
  std::string out = clock_range(interval.start_s, interval.end_s);
  if (interval.continuation)
    out += " and " + clock_range(interval.continuation->start_s, interval.continuation->end_s);
  return out;
}

std::string vocabulary_line(std::span<const std::string> tags) {
  std::string out;
  for (const auto& t : tags) {
    if (!out.empty()) out += ", ";
    out += t;
  }
  return out.empty() ? std::string("(none)") : out;
}

}  // namespace larag::prompts
