#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "segtrack/records.hpp"

namespace segtrack {

/// One row of a scenario table: a user stayed `stay_seconds` on a segment.
struct ScenarioRow {
  std::string user_id;
  SegmentId segment_id = 0;
  double stay_seconds = 0.0;

  [[nodiscard]] std::int64_t stay_ms() const;
  bool operator==(const ScenarioRow&) const = default;
};

struct Scenario {
  std::string page_url;
  std::vector<ScenarioRow> rows;  // file order
};

inline constexpr std::string_view kScenarioHeader = "user_id,segment_id,stay_seconds";

/// Reads a scenario CSV (header user_id,segment_id,stay_seconds).
/// Throws FileNotFound, MalformedRow ("line N: ...") or EmptyScenario.
[[nodiscard]] Scenario load_scenario(const std::filesystem::path& csv_path, std::string page_url = {});
[[nodiscard]] Scenario parse_scenario(std::string_view csv_text, std::string page_url = {});

/// Rows grouped per user, users in order of first appearance.
[[nodiscard]] std::vector<std::pair<std::string, std::vector<ScenarioRow>>> rows_by_user(
    const Scenario& scenario);

/// session_start at t0, back-to-back intervals in row order, session_end at
/// t0 + total stay. Every record carries recv_ms = that end time.
[[nodiscard]] std::vector<LogRecord> synthesize_session(const std::vector<ScenarioRow>& user_rows,
                                                        const std::string& session_id,
                                                        std::int64_t t0_ms,
                                                        const std::string& page_url = {});

[[nodiscard]] std::string simulated_session_id(std::string_view user_id);

struct ReplaySummary {
  std::size_t sessions = 0;
  std::size_t intervals = 0;
  std::size_t records = 0;
  std::size_t bytes = 0;
  std::size_t requests = 0;
};

/// Appends every user's synthesized session to a log file.
ReplaySummary replay_to_file(const Scenario& scenario, const std::filesystem::path& store_file);

/// POSTs every session as EventBatch requests (at most `max_intervals` each)
/// to an http:// endpoint, sequentially. Throws SinkUnreachable or
/// SinkRejected; the message says how many requests were delivered first.
ReplaySummary replay_to_endpoint(const Scenario& scenario, const std::string& endpoint_url,
                                 std::size_t max_intervals = 500);

}  // namespace segtrack
