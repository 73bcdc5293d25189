#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace larag {

inline constexpr double kDaySeconds = 86400.0;

/// Renders a second offset as HH:MM:SS (floor to whole seconds). The day end
/// (86400) renders as 23:59:59.
std::string format_hms(double seconds);

/// Parses HH:MM:SS or HH:MM (24-hour). Accepts 24:00[:00] as the day end.
std::optional<double> parse_hms(std::string_view text);

/// Milliseconds since an arbitrary steady epoch.
double steady_ms();

}  // namespace larag
