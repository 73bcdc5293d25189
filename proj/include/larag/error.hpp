#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace larag {

enum class ErrorCode {
  MalformedLog,
  SchemaViolation,
  InvalidWindow,
  ConstraintViolation,
  StorageFailure,
  UnknownAudioId,
  StoreUnavailable,
  ClientUnavailable,
  Timeout,
  HttpError,
  MalformedResponse,
  EmbedderUnavailable,
  ProviderUnavailable,
  PlacementFailure,
  GenerationExhausted,
  InvalidSQL,
  ExecutionError,
  EmptyIndex,
  MissingBaseline,
  InsufficientBaseline,
  NotSupported,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Base exception for every failure surfaced by the library. The code is
/// stable and is what the service and CLI map onto status/exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Model-client failures (timeout, transport, bad payload). Callers degrade
/// on these instead of aborting the request.
class ClientError : public Error {
 public:
  using Error::Error;
};

}  // namespace larag
