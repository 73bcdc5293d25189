#include "larag/clock.hpp"
#include "larag/error.hpp"

#include <chrono>
#include <cmath>
#include <fmt/format.h>

namespace larag {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedLog: return "MalformedLog";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::ConstraintViolation: return "ConstraintViolation";
    case ErrorCode::StorageFailure: return "StorageFailure";
    case ErrorCode::UnknownAudioId: return "UnknownAudioId";
    case ErrorCode::StoreUnavailable: return "StoreUnavailable";
    case ErrorCode::ClientUnavailable: return "ClientUnavailable";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::HttpError: return "HttpError";
    case ErrorCode::MalformedResponse: return "MalformedResponse";
    case ErrorCode::EmbedderUnavailable: return "EmbedderUnavailable";
    case ErrorCode::ProviderUnavailable: return "ProviderUnavailable";
    case ErrorCode::PlacementFailure: return "PlacementFailure";
    case ErrorCode::GenerationExhausted: return "GenerationExhausted";
    case ErrorCode::InvalidSQL: return "InvalidSQL";
    case ErrorCode::ExecutionError: return "ExecutionError";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::MissingBaseline: return "MissingBaseline";
    case ErrorCode::InsufficientBaseline: return "InsufficientBaseline";
    case ErrorCode::NotSupported: return "NotSupported";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::string format_hms(double seconds) {
  long total = static_cast<long>(std::floor(seconds));
  if (total >= static_cast<long>(kDaySeconds)) total = static_cast<long>(kDaySeconds) - 1;
  if (total < 0) total = 0;
  return fmt::format("{:02d}:{:02d}:{:02d}", total / 3600, (total / 60) % 60, total % 60);
}

std::optional<double> parse_hms(std::string_view text) {
  int parts[3] = {0, 0, 0};
  int n = 0;
  std::size_t i = 0;
  while (n < 3) {
    std::size_t begin = i;
    int value = 0;
    while (i < text.size() && text[i] >= '0' && text[i] <= '9' && i - begin < 2) {
      value = value * 10 + (text[i] - '0');
      ++i;
    }
    if (i == begin || (n > 0 && i - begin != 2)) return std::nullopt;
    parts[n++] = value;
    if (i == text.size()) break;
    if (text[i] != ':') return std::nullopt;
    ++i;
  }
  if (i != text.size() || n < 2) return std::nullopt;
  if (parts[1] > 59 || parts[2] > 59) return std::nullopt;
  if (parts[0] == 24 && parts[1] == 0 && parts[2] == 0) return kDaySeconds;
  if (parts[0] > 23) return std::nullopt;
  return parts[0] * 3600.0 + parts[1] * 60.0 + parts[2];
}

double steady_ms() {
  using namespace std::chrono;
  return duration<double, std::milli>(steady_clock::now().time_since_epoch()).count();
}

}  // namespace larag
