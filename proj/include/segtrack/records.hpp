#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include "segtrack/segmenter.hpp"

namespace segtrack {

enum class RecordKind { SessionStart, Interval, SessionEnd };

[[nodiscard]] std::string_view to_string(RecordKind kind) noexcept;

struct SessionStart {
  std::int64_t en_ms = 0;
  bool operator==(const SessionStart&) const = default;
};

struct IntervalBody {
  SegmentId segment_id = 0;
  std::int64_t en_ms = 0;
  std::int64_t ex_ms = 0;
  bool operator==(const IntervalBody&) const = default;
};

struct SessionEnd {
  std::int64_t ex_ms = 0;
  bool operator==(const SessionEnd&) const = default;
};

/// One line of the session log.
struct LogRecord {
  std::string session_id;
  std::string page_url;
  std::int64_t recv_ms = 0;  // server receive time
  std::variant<SessionStart, IntervalBody, SessionEnd> body;

  [[nodiscard]] RecordKind kind() const noexcept { return static_cast<RecordKind>(body.index()); }

  bool operator==(const LogRecord&) const = default;
};

[[nodiscard]] LogRecord make_session_start(std::string session_id, std::string page_url,
                                           std::int64_t recv_ms, std::int64_t en_ms);
[[nodiscard]] LogRecord make_interval(std::string session_id, std::string page_url,
                                      std::int64_t recv_ms, SegmentId segment_id,
                                      std::int64_t en_ms, std::int64_t ex_ms);
[[nodiscard]] LogRecord make_session_end(std::string session_id, std::string page_url,
                                         std::int64_t recv_ms, std::int64_t ex_ms);

// Throws Error(MalformedRecord) when an interval has ex_ms < en_ms or segment_id < 1.
void validate(const LogRecord& record);

/// One JSON object without the trailing newline. Keys appear in the order
/// kind, session_id, page_url, recv_ms, en_ms, ex_ms, segment_id.
[[nodiscard]] std::string serialize_record(const LogRecord& record);

/// Strict inverse of serialize_record: exactly the keys of the record's kind,
/// integer-valued times. Throws Error(MalformedRecord).
[[nodiscard]] LogRecord parse_record(std::string_view line);

}  // namespace segtrack
