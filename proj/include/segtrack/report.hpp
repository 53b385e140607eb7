#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "segtrack/analyzer.hpp"

namespace segtrack {

enum class ReportFormat { Json, Csv, Chart, Svg };

/// "json", "csv", "chart" or "svg". Throws Error(InvalidArgument).
[[nodiscard]] ReportFormat parse_report_format(std::string_view name);

/// Milliseconds as seconds with exactly three decimals: 25000 -> "25.000".
[[nodiscard]] std::string format_seconds(std::int64_t ms);

/// Shortest exact form used for chart labels: 25000 -> "25", 2500 -> "2.5".
[[nodiscard]] std::string format_seconds_compact(std::int64_t ms);

// Chart geometry shared by the text and SVG renderers.
inline constexpr std::size_t kChartColumns = 50;
inline constexpr int kSvgColumnPx = 10;

/// Length in columns of a bar: proportional to `ms` (the largest bar spans
/// kChartColumns), but never shorter than its inside label plus two.
[[nodiscard]] std::size_t bar_columns(std::int64_t ms, std::int64_t max_ms, std::size_t label_len);

[[nodiscard]] std::string render_report(const RankedReport& report, ReportFormat format);
[[nodiscard]] std::string render_reports(const std::vector<RankedReport>& reports, ReportFormat format);
[[nodiscard]] std::string render_summary(const CrossUserSummary& summary, ReportFormat format);

}  // namespace segtrack
