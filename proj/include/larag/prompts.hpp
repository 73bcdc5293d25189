#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "larag/model_clients.hpp"
#include "larag/types.hpp"

namespace larag::prompts {

/// Template text by name ("summary", "detection_counting", ...). Throws
/// Error(InvalidArgument) for unknown names.
std::string_view template_text(std::string_view name);
std::string_view template_version(std::string_view name);
std::vector<std::string> template_names();

/// Replaces {placeholder} occurrences; unknown placeholders are left as-is.
std::string render(std::string_view tmpl, const std::map<std::string, std::string>& values);

/// First line of every system message; the stub client dispatches on it.
std::string marker_line(std::string_view task);
std::optional<std::string> task_of(const ChatRequest& request);
std::string system_message(std::string_view task);

/// "08:15:00–08:15:03 | dog_bark | 0.91 | -21.4 LUFS"
std::string evidence_line(const EventRecord& e);
inline constexpr std::string_view kNoEvidenceLine = "no events detected in this interval";
std::string evidence_block(std::span<const EventRecord> events);
std::string interval_statement(const TimeInterval& interval);
std::string vocabulary_line(std::span<const std::string> tags);

/// Second offset rendered as HH:MM:SS, with interval ends at the day end
/// shown as 23:59:59.
std::string clock_range(double start_s, double end_s);

}  // namespace larag::prompts
