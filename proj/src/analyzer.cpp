#include "segtrack/analyzer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "segtrack/error.hpp"

namespace segtrack {

double DwellVector::seconds(SegmentId id) const {
  const auto it = entries_ms.find(id);
  return it == entries_ms.end() ? 0.0 : static_cast<double>(it->second) / 1000.0;
}

std::int64_t DwellVector::total_ms() const {
  std::int64_t total = 0;
  for (const auto& [id, ms] : entries_ms) total += ms;
  return total;
}

Threshold::Threshold(double sigma_seconds) : sigma_seconds_(sigma_seconds) {
  if (!std::isfinite(sigma_seconds) || sigma_seconds < 0.0)
    throw Error(ErrorCode::InvalidArgument, "sigma must be a non-negative number of seconds");
}

bool Threshold::passes(std::int64_t dwell_ms) const noexcept {
  return static_cast<double>(dwell_ms) / 1000.0 > sigma_seconds_;
}

DwellVector aggregate_dwell(const SessionLog& session) {
  DwellVector out;
  out.session_id = session.session_id;
  out.page_url = session.page_url;
  for (const auto& iv : session.intervals) out.entries_ms[iv.segment_id] += iv.ex_ms - iv.en_ms;
  return out;
}

ThresholdResult apply_threshold(const DwellVector& dwell, const Threshold& threshold) {
  ThresholdResult out;
  out.session_id = dwell.session_id;
  out.page_url = dwell.page_url;
  out.sigma_seconds = threshold.sigma_seconds();
  for (const auto& [id, ms] : dwell.entries_ms) {
    (threshold.passes(ms) ? out.retained : out.dropped).push_back({id, ms});
  }
  return out;
}

void sort_by_dwell(std::vector<SegmentDwell>& rows) {
  std::sort(rows.begin(), rows.end(), [](const SegmentDwell& a, const SegmentDwell& b) {
    if (a.dwell_ms != b.dwell_ms) return a.dwell_ms > b.dwell_ms;
    return a.segment_id < b.segment_id;
  });
}

RankedReport rank_segments(const ThresholdResult& filtered) {
  RankedReport report{filtered.session_id, filtered.page_url, filtered.sigma_seconds,
                      filtered.retained, filtered.dropped};
  sort_by_dwell(report.retained);
  sort_by_dwell(report.dropped);
  return report;
}

RankedReport analyze_session(const SessionLog& session, const Threshold& threshold) {
  return rank_segments(apply_threshold(aggregate_dwell(session), threshold));
}

CrossUserSummary cross_user_summary(const std::vector<SessionLog>& sessions,
                                    const Threshold& threshold) {
  std::map<SegmentId, SummaryRow> totals;
  for (const auto& session : sessions) {
    for (const auto& kept : apply_threshold(aggregate_dwell(session), threshold).retained) {
      auto& row = totals[kept.segment_id];
      row.segment_id = kept.segment_id;
      row.total_dwell_ms += kept.dwell_ms;
      ++row.session_count;
    }
  }
  CrossUserSummary summary;
  summary.sigma_seconds = threshold.sigma_seconds();
  for (auto& [id, row] : totals) summary.rows.push_back(row);
  std::sort(summary.rows.begin(), summary.rows.end(), [](const SummaryRow& a, const SummaryRow& b) {
    if (a.total_dwell_ms != b.total_dwell_ms) return a.total_dwell_ms > b.total_dwell_ms;
    return a.segment_id < b.segment_id;
  });
  return summary;
}

std::vector<SegmentId> unknown_segments(const std::vector<SessionLog>& sessions,
                                        const PageManifest& manifest) {
  std::set<SegmentId> known;
  for (const auto& seg : manifest.segments) known.insert(seg.id);
  std::set<SegmentId> unknown;
  for (const auto& session : sessions) {
    for (const auto& iv : session.intervals) {
      if (!known.contains(iv.segment_id)) unknown.insert(iv.segment_id);
    }
  }
  return {unknown.begin(), unknown.end()};
}

}  // namespace segtrack
