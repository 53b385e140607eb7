#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "segtrack/segmenter.hpp"
#include "segtrack/session_store.hpp"

namespace segtrack {

/// Per-segment dwell of one session. Dwell is kept in integer milliseconds;
/// reports print it as seconds with three decimals.
struct DwellVector {
  std::string session_id;
  std::string page_url;
  std::map<SegmentId, std::int64_t> entries_ms;

  [[nodiscard]] double seconds(SegmentId id) const;
  [[nodiscard]] std::int64_t total_ms() const;
};

/// Minimum dwell a segment must exceed to count as visited.
class Threshold {
 public:
  Threshold() = default;
  /// Throws Error(InvalidArgument) for negative or non-finite values.
  explicit Threshold(double sigma_seconds);

  [[nodiscard]] double sigma_seconds() const noexcept { return sigma_seconds_; }
  // Strictly greater, so a dwell equal to sigma is dropped.
  [[nodiscard]] bool passes(std::int64_t dwell_ms) const noexcept;

 private:
  double sigma_seconds_ = 1.0;
};

struct SegmentDwell {
  SegmentId segment_id = 0;
  std::int64_t dwell_ms = 0;

  [[nodiscard]] double seconds() const noexcept { return static_cast<double>(dwell_ms) / 1000.0; }
  bool operator==(const SegmentDwell&) const = default;
};

struct ThresholdResult {
  std::string session_id;
  std::string page_url;
  double sigma_seconds = 0.0;
  std::vector<SegmentDwell> retained;  // ascending segment id
  std::vector<SegmentDwell> dropped;
};

struct RankedReport {
  std::string session_id;
  std::string page_url;
  double sigma_seconds = 0.0;
  std::vector<SegmentDwell> retained;  // non-increasing dwell, ties by ascending id
  std::vector<SegmentDwell> dropped;   // same order
};

struct SummaryRow {
  SegmentId segment_id = 0;
  std::int64_t total_dwell_ms = 0;
  std::size_t session_count = 0;
  bool operator==(const SummaryRow&) const = default;
};

struct CrossUserSummary {
  double sigma_seconds = 0.0;
  std::vector<SummaryRow> rows;  // total descending, ties by ascending id
};

[[nodiscard]] DwellVector aggregate_dwell(const SessionLog& session);

[[nodiscard]] ThresholdResult apply_threshold(const DwellVector& dwell, const Threshold& threshold);

[[nodiscard]] RankedReport rank_segments(const ThresholdResult& filtered);

/// aggregate_dwell, apply_threshold and rank_segments in one step.
[[nodiscard]] RankedReport analyze_session(const SessionLog& session, const Threshold& threshold);

[[nodiscard]] CrossUserSummary cross_user_summary(const std::vector<SessionLog>& sessions,
                                                  const Threshold& threshold);

/// Orders by dwell descending, then segment id ascending.
void sort_by_dwell(std::vector<SegmentDwell>& rows);

/// Distinct segment ids seen in `sessions` that the manifest does not list.
[[nodiscard]] std::vector<SegmentId> unknown_segments(const std::vector<SessionLog>& sessions,
                                                      const PageManifest& manifest);

}  // namespace segtrack
