#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace segtrack {

enum class ErrorCode {
  InvalidArgument,
  EmptyDocument,
  AlreadyInstrumented,
  DuplicatePath,
  ManifestMismatch,
  TooManySegments,
  MalformedManifest,
  MalformedRecord,
  MalformedBatch,
  InvalidInterval,
  BatchTooLarge,
  Unauthorized,
  FileNotFound,
  IoFailure,
  MalformedRow,
  EmptyScenario,
  SinkUnreachable,
  SinkRejected,
};

[[nodiscard]] std::string_view to_string(ErrorCode code) noexcept;

// All library failures surface as this exception. what() is
// "<CodeName>: <detail>" so callers can print it verbatim.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace segtrack
