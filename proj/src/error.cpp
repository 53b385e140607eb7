#include "segtrack/error.hpp"

namespace segtrack {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::EmptyDocument: return "EmptyDocument";
    case ErrorCode::AlreadyInstrumented: return "AlreadyInstrumented";
    case ErrorCode::DuplicatePath: return "DuplicatePath";
    case ErrorCode::ManifestMismatch: return "ManifestMismatch";
    case ErrorCode::TooManySegments: return "TooManySegments";
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::MalformedBatch: return "MalformedBatch";
    case ErrorCode::InvalidInterval: return "InvalidInterval";
    case ErrorCode::BatchTooLarge: return "BatchTooLarge";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::FileNotFound: return "FileNotFound";
    case ErrorCode::IoFailure: return "IOFailure";
    case ErrorCode::MalformedRow: return "MalformedRow";
    case ErrorCode::EmptyScenario: return "EmptyScenario";
    case ErrorCode::SinkUnreachable: return "SinkUnreachable";
    case ErrorCode::SinkRejected: return "SinkRejected";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
      code_(code),
      detail_(detail) {}

}  // namespace segtrack
