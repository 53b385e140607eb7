#include "segtrack/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "segtrack/error.hpp"

namespace segtrack {
namespace {

struct Bar {
  SegmentId segment_id;
  std::int64_t ms;
};

struct Panel {
  std::string title;
  std::vector<Bar> bars;
};

std::string quote_json(std::string_view s) { return nlohmann::json(s).dump(); }

std::string format_sigma(double sigma) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", sigma);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string dwell_rows_json(const std::vector<SegmentDwell>& rows) {
  std::string out = "[";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i) out += ',';
    out += "{\"segment_id\":" + std::to_string(rows[i].segment_id) +
           ",\"dwell_seconds\":" + format_seconds(rows[i].dwell_ms) + "}";
  }
  return out + "]";
}

std::string report_json(const RankedReport& r) {
  return "{\"session_id\":" + quote_json(r.session_id) + ",\"page_url\":" + quote_json(r.page_url) +
         ",\"sigma_seconds\":" + format_sigma(r.sigma_seconds) +
         ",\"retained\":" + dwell_rows_json(r.retained) + ",\"dropped\":" + dwell_rows_json(r.dropped) +
         "}";
}

Panel panel_of(const RankedReport& r) {
  Panel p{"session " + r.session_id + "  sigma=" + format_sigma(r.sigma_seconds) + "s", {}};
  for (const auto& row : r.retained) p.bars.push_back({row.segment_id, row.dwell_ms});
  return p;
}

Panel panel_of(const CrossUserSummary& s) {
  Panel p{"all sessions  sigma=" + format_sigma(s.sigma_seconds) + "s", {}};
  for (const auto& row : s.rows) p.bars.push_back({row.segment_id, row.total_dwell_ms});
  return p;
}

std::int64_t max_ms(const Panel& p) {
  std::int64_t m = 0;
  for (const auto& b : p.bars) m = std::max(m, b.ms);
  return m;
}

std::string text_chart(const Panel& p) {
  std::string out = "# " + p.title + "  bars=" + std::to_string(p.bars.size()) + "\n";
  std::size_t id_width = 1;
  for (const auto& b : p.bars) id_width = std::max(id_width, std::to_string(b.segment_id).size());
  const auto top = max_ms(p);
  for (const auto& b : p.bars) {
    const auto id = std::to_string(b.segment_id);
    const auto label = format_seconds_compact(b.ms);
    const auto cols = bar_columns(b.ms, top, label.size());
    out += std::string(id_width - id.size(), ' ') + id + " |#" + label +
           std::string(cols - 1 - label.size(), '#') + "\n";
  }
  return out;
}

std::string svg_chart(const std::vector<Panel>& panels) {
  constexpr int kLeft = 70;
  constexpr int kBarHeight = 20;
  constexpr int kRowStep = 26;
  constexpr int kTitleStep = 28;
  const int width = kLeft + static_cast<int>(kChartColumns) * kSvgColumnPx + 20;
  int height = 10;
  for (const auto& p : panels) height += kTitleStep + static_cast<int>(p.bars.size()) * kRowStep + 10;

  std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(width) +
                    "\" height=\"" + std::to_string(height) +
                    "\" font-family=\"monospace\" font-size=\"12\">\n";
  int y = 10;
  for (const auto& p : panels) {
    out += "  <text x=\"4\" y=\"" + std::to_string(y + 16) + "\">" + xml_escape(p.title) +
           "</text>\n";
    y += kTitleStep;
    const auto top = max_ms(p);
    for (const auto& b : p.bars) {
      const auto label = format_seconds_compact(b.ms);
      const int bar_px = static_cast<int>(bar_columns(b.ms, top, label.size())) * kSvgColumnPx;
      const auto ys = std::to_string(y);
      const auto text_y = std::to_string(y + 15);
      out += "  <g class=\"bar\" data-segment-id=\"" + std::to_string(b.segment_id) + "\">";
      out += "<text x=\"" + std::to_string(kLeft - 6) + "\" y=\"" + text_y +
             "\" text-anchor=\"end\">" + std::to_string(b.segment_id) + "</text>";
      out += "<rect x=\"" + std::to_string(kLeft) + "\" y=\"" + ys + "\" width=\"" +
             std::to_string(bar_px) + "\" height=\"" + std::to_string(kBarHeight) +
             "\" fill=\"#4878a8\"/>";
      out += "<text x=\"" + std::to_string(kLeft + 5) + "\" y=\"" + text_y + "\" fill=\"#ffffff\">" +
             label + "</text></g>\n";
      y += kRowStep;
    }
    y += 10;
  }
  return out + "</svg>\n";
}

std::string text_charts(const std::vector<Panel>& panels) {
  std::string out;
  for (std::size_t i = 0; i < panels.size(); ++i) {
    if (i) out += "\n";
    out += text_chart(panels[i]);
  }
  return out;
}

}  // namespace

ReportFormat parse_report_format(std::string_view name) {
  if (name == "json") return ReportFormat::Json;
  if (name == "csv") return ReportFormat::Csv;
  if (name == "chart") return ReportFormat::Chart;
  if (name == "svg") return ReportFormat::Svg;
  throw Error(ErrorCode::InvalidArgument, "unknown report format '" + std::string(name) + "'");
}

std::string format_seconds(std::int64_t ms) {
  const bool negative = ms < 0;
  const std::uint64_t abs_ms = negative ? 0 - static_cast<std::uint64_t>(ms) : static_cast<std::uint64_t>(ms);
  char buf[40];
  std::snprintf(buf, sizeof buf, "%s%llu.%03llu", negative ? "-" : "",
                static_cast<unsigned long long>(abs_ms / 1000),
                static_cast<unsigned long long>(abs_ms % 1000));
  return buf;
}

std::string format_seconds_compact(std::int64_t ms) {
  std::string s = format_seconds(ms);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

std::size_t bar_columns(std::int64_t ms, std::int64_t max_ms, std::size_t label_len) {
  std::size_t cols = 0;
  if (max_ms > 0 && ms > 0) {
    cols = static_cast<std::size_t>(
        std::llround(static_cast<double>(ms) * kChartColumns / static_cast<double>(max_ms)));
  }
  return std::max(cols, label_len + 2);
}

std::string render_report(const RankedReport& report, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json:
      return report_json(report) + "\n";
    case ReportFormat::Csv: {
      std::string out = "segment_id,dwell_seconds\n";
      for (const auto& row : report.retained)
        out += std::to_string(row.segment_id) + "," + format_seconds(row.dwell_ms) + "\n";
      return out;
    }
    case ReportFormat::Chart:
      return text_chart(panel_of(report));
    case ReportFormat::Svg:
      return svg_chart({panel_of(report)});
  }
  return {};
}

std::string render_reports(const std::vector<RankedReport>& reports, ReportFormat format) {
  if (reports.size() == 1) return render_report(reports.front(), format);
  switch (format) {
    case ReportFormat::Json: {
      std::string out = "[";
      for (std::size_t i = 0; i < reports.size(); ++i) {
        out += i ? ",\n" : "\n";
        out += report_json(reports[i]);
      }
      return out + (reports.empty() ? "]\n" : "\n]\n");
    }
    case ReportFormat::Csv: {
      std::string out = "session_id,segment_id,dwell_seconds\n";
      for (const auto& r : reports) {
        for (const auto& row : r.retained) {
          out += csv_field(r.session_id) + "," + std::to_string(row.segment_id) + "," +
                 format_seconds(row.dwell_ms) + "\n";
        }
      }
      return out;
    }
    case ReportFormat::Chart:
    case ReportFormat::Svg: {
      std::vector<Panel> panels;
      for (const auto& r : reports) panels.push_back(panel_of(r));
      return format == ReportFormat::Chart ? text_charts(panels) : svg_chart(panels);
    }
  }
  return {};
}

std::string render_summary(const CrossUserSummary& summary, ReportFormat format) {
  switch (format) {
    case ReportFormat::Json: {
      std::string out = "{\"sigma_seconds\":" + format_sigma(summary.sigma_seconds) + ",\"rows\":[";
      for (std::size_t i = 0; i < summary.rows.size(); ++i) {
        const auto& row = summary.rows[i];
        if (i) out += ',';
        out += "{\"segment_id\":" + std::to_string(row.segment_id) +
               ",\"total_dwell_seconds\":" + format_seconds(row.total_dwell_ms) +
               ",\"session_count\":" + std::to_string(row.session_count) + "}";
      }
      return out + "]}\n";
    }
    case ReportFormat::Csv: {
      std::string out = "segment_id,total_dwell_seconds,session_count\n";
      for (const auto& row : summary.rows) {
        out += std::to_string(row.segment_id) + "," + format_seconds(row.total_dwell_ms) + "," +
               std::to_string(row.session_count) + "\n";
      }
      return out;
    }
    case ReportFormat::Chart:
      return text_chart(panel_of(summary));
    case ReportFormat::Svg:
      return svg_chart({panel_of(summary)});
  }
  return {};
}

}  // namespace segtrack
