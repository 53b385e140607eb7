#include <pybind11/functional.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "segtrack/analyzer.hpp"
#include "segtrack/error.hpp"
#include "segtrack/ingest.hpp"
#include "segtrack/records.hpp"
#include "segtrack/report.hpp"
#include "segtrack/segmenter.hpp"
#include "segtrack/session_store.hpp"
#include "segtrack/simulator.hpp"

namespace py = pybind11;
using namespace segtrack;

namespace {

std::string kind_name(RecordKind kind) {
  switch (kind) {
    case RecordKind::SessionStart:
      return "session_start";
    case RecordKind::Interval:
      return "interval";
    case RecordKind::SessionEnd:
      return "session_end";
  }
  return {};
}

}  // namespace

PYBIND11_MODULE(_segtrack, m) {
  m.doc() = "Segment-level dwell time tracking: segmenter, session store, analyzer, simulator";

  auto error_type = py::exception<Error>(m, "SegtrackError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      auto type = py::module_::import("segtrack._segtrack").attr("SegtrackError");
      py::object exc = type(e.what());
      exc.attr("code") = to_string(e.code());
      exc.attr("detail") = e.detail();
      PyErr_SetObject(type.ptr(), exc.ptr());
    }
  });
  (void)error_type;

  m.attr("SEGMENT_ID_ATTRIBUTE") = std::string(kSegmentIdAttribute);
  m.attr("CONFIG_ELEMENT_ID") = std::string(kConfigElementId);
  m.attr("EVENTS_ROUTE") = std::string(kEventsRoute);
  m.attr("PROTOCOL_VERSION") = kProtocolVersion;

  // segmenter
  py::class_<Segment>(m, "Segment")
      .def_readonly("id", &Segment::id)
      .def_readonly("dom_path", &Segment::dom_path)
      .def_readonly("label", &Segment::label)
      .def_readonly("element_kind", &Segment::element_kind)
      .def("__repr__", [](const Segment& s) {
        return "Segment(id=" + std::to_string(s.id) + ", dom_path='" + s.dom_path + "')";
      });

  py::class_<PageManifest>(m, "PageManifest")
      .def_readonly("page_url", &PageManifest::page_url)
      .def_readonly("segments", &PageManifest::segments)
      .def_property_readonly("generated_at", [](const PageManifest& pm) { return format_rfc3339(pm.generated_at); })
      .def("to_json", &manifest_to_json)
      .def_static("from_json", [](const std::string& text) { return manifest_from_json(text); });

  py::class_<SegmentationResult>(m, "SegmentationResult")
      .def_readonly("manifest", &SegmentationResult::manifest)
      .def_readonly("annotated_html", &SegmentationResult::annotated_html);

  m.def(
      "segment_page",
      [](const std::string& html, std::size_t min_text_len, std::optional<std::vector<std::string>> block_tags,
         std::size_t max_segments, std::string page_url, std::optional<std::string> generated_at) {
        SegmenterConfig config;
        config.min_text_len = min_text_len;
        if (block_tags) config.block_tags = *block_tags;
        config.max_segments = max_segments;
        std::optional<UtcSeconds> stamp;
        if (generated_at) stamp = parse_rfc3339(*generated_at);
        return segment_page(html, config, std::move(page_url), stamp);
      },
      py::arg("html"), py::arg("min_text_len") = 30, py::arg("block_tags") = py::none(),
      py::arg("max_segments") = 256, py::arg("page_url") = "", py::arg("generated_at") = py::none());
  m.def(
      "instrument",
      [](const std::string& annotated, const PageManifest& manifest, const std::string& endpoint) {
        return instrument(annotated, manifest, endpoint);
      },
      py::arg("annotated_html"), py::arg("manifest"), py::arg("endpoint_url"));

  // records and store
  py::class_<IntervalBody>(m, "Interval")
      .def_readonly("segment_id", &IntervalBody::segment_id)
      .def_readonly("en_ms", &IntervalBody::en_ms)
      .def_readonly("ex_ms", &IntervalBody::ex_ms);

  py::class_<LogRecord>(m, "LogRecord")
      .def_readonly("session_id", &LogRecord::session_id)
      .def_readonly("page_url", &LogRecord::page_url)
      .def_readonly("recv_ms", &LogRecord::recv_ms)
      .def_property_readonly("kind", [](const LogRecord& r) { return kind_name(r.kind()); })
      .def("to_json", &serialize_record)
      .def_static("from_json", [](const std::string& line) { return parse_record(line); })
      .def(py::self == py::self);

  py::class_<SessionLog>(m, "SessionLog")
      .def_readonly("session_id", &SessionLog::session_id)
      .def_readonly("page_url", &SessionLog::page_url)
      .def_readonly("en_ms", &SessionLog::en_ms)
      .def_readonly("ex_ms", &SessionLog::ex_ms)
      .def_readonly("intervals", &SessionLog::intervals);

  py::class_<ReadResult>(m, "ReadResult")
      .def_readonly("sessions", &ReadResult::sessions)
      .def_readonly("skipped_lines", &ReadResult::skipped_lines);

  m.def(
      "read_sessions",
      [](const std::vector<std::filesystem::path>& paths, std::optional<std::string> session_id,
         std::optional<std::string> page_url) {
        return read_sessions(paths, SessionFilter{std::move(session_id), std::move(page_url)});
      },
      py::arg("paths"), py::arg("session_id") = py::none(), py::arg("page_url") = py::none());

  // simulator
  py::class_<ScenarioRow>(m, "ScenarioRow")
      .def_readonly("user_id", &ScenarioRow::user_id)
      .def_readonly("segment_id", &ScenarioRow::segment_id)
      .def_readonly("stay_seconds", &ScenarioRow::stay_seconds);

  py::class_<Scenario>(m, "Scenario")
      .def_readonly("page_url", &Scenario::page_url)
      .def_readonly("rows", &Scenario::rows)
      .def("by_user", &rows_by_user);

  py::class_<ReplaySummary>(m, "ReplaySummary")
      .def_readonly("sessions", &ReplaySummary::sessions)
      .def_readonly("intervals", &ReplaySummary::intervals)
      .def_readonly("records", &ReplaySummary::records)
      .def_readonly("bytes", &ReplaySummary::bytes)
      .def_readonly("requests", &ReplaySummary::requests);

  m.def("load_scenario", &load_scenario, py::arg("path"), py::arg("page_url") = "");
  m.def("parse_scenario", [](const std::string& text, std::string page_url) { return parse_scenario(text, page_url); },
        py::arg("text"), py::arg("page_url") = "");
  m.def("synthesize_session", &synthesize_session, py::arg("rows"), py::arg("session_id"), py::arg("t0_ms") = 0,
        py::arg("page_url") = "");
  m.def("replay_to_file", &replay_to_file, py::arg("scenario"), py::arg("path"));
  m.def("replay_to_endpoint", &replay_to_endpoint, py::arg("scenario"), py::arg("endpoint_url"),
        py::arg("max_intervals") = 500, py::call_guard<py::gil_scoped_release>());

  // analyzer
  py::class_<Threshold>(m, "Threshold")
      .def(py::init<>())
      .def(py::init<double>(), py::arg("sigma_seconds"))
      .def_property_readonly("sigma_seconds", &Threshold::sigma_seconds)
      .def("passes", &Threshold::passes, py::arg("dwell_ms"));

  py::class_<DwellVector>(m, "DwellVector")
      .def_readonly("session_id", &DwellVector::session_id)
      .def_readonly("page_url", &DwellVector::page_url)
      .def_readonly("entries_ms", &DwellVector::entries_ms)
      .def("total_ms", &DwellVector::total_ms);

  py::class_<SegmentDwell>(m, "SegmentDwell")
      .def_readonly("segment_id", &SegmentDwell::segment_id)
      .def_readonly("dwell_ms", &SegmentDwell::dwell_ms)
      .def_property_readonly("seconds", &SegmentDwell::seconds)
      .def("__repr__", [](const SegmentDwell& d) {
        return "SegmentDwell(" + std::to_string(d.segment_id) + ", " + format_seconds(d.dwell_ms) + ")";
      });

  py::class_<ThresholdResult>(m, "ThresholdResult")
      .def_readonly("retained", &ThresholdResult::retained)
      .def_readonly("dropped", &ThresholdResult::dropped);

  py::class_<RankedReport>(m, "RankedReport")
      .def_readonly("session_id", &RankedReport::session_id)
      .def_readonly("page_url", &RankedReport::page_url)
      .def_readonly("sigma_seconds", &RankedReport::sigma_seconds)
      .def_readonly("retained", &RankedReport::retained)
      .def_readonly("dropped", &RankedReport::dropped)
      .def("render", [](const RankedReport& r, const std::string& format) {
        return render_report(r, parse_report_format(format));
      }, py::arg("format") = "csv");

  py::class_<SummaryRow>(m, "SummaryRow")
      .def_readonly("segment_id", &SummaryRow::segment_id)
      .def_readonly("total_dwell_ms", &SummaryRow::total_dwell_ms)
      .def_readonly("session_count", &SummaryRow::session_count);

  py::class_<CrossUserSummary>(m, "CrossUserSummary")
      .def_readonly("sigma_seconds", &CrossUserSummary::sigma_seconds)
      .def_readonly("rows", &CrossUserSummary::rows)
      .def("render", [](const CrossUserSummary& s, const std::string& format) {
        return render_summary(s, parse_report_format(format));
      }, py::arg("format") = "csv");

  m.def("aggregate_dwell", &aggregate_dwell, py::arg("session"));
  m.def("apply_threshold", &apply_threshold, py::arg("dwell"), py::arg("threshold"));
  m.def("rank_segments", &rank_segments, py::arg("filtered"));
  m.def("analyze_session", &analyze_session, py::arg("session"), py::arg("threshold") = Threshold());
  m.def("cross_user_summary", &cross_user_summary, py::arg("sessions"), py::arg("threshold") = Threshold());
  m.def("format_seconds", &format_seconds, py::arg("ms"));

  // ingest core, without the HTTP front end
  py::class_<IngestService>(m, "IngestService")
      .def(py::init([](std::filesystem::path log_dir, std::size_t max_batch_bytes, std::size_t max_intervals,
                       std::string token, std::optional<std::function<std::int64_t()>> clock) {
             IngestConfig c;
             c.log_dir = std::move(log_dir);
             c.max_batch_bytes = max_batch_bytes;
             c.max_intervals_per_batch = max_intervals;
             c.auth_token = std::move(token);
             if (clock) return std::make_unique<IngestService>(c, *clock);
             return std::make_unique<IngestService>(c);
           }),
           py::arg("log_dir"), py::arg("max_batch_bytes") = 65536, py::arg("max_intervals") = 500,
           py::arg("token") = "", py::arg("clock") = py::none())
      .def("handle_event_batch", [](IngestService& s, const std::string& body, const std::string& token) {
        const auto r = s.handle_event_batch(body, token);
        return py::make_tuple(r.status, r.body);
      }, py::arg("body"), py::arg("token") = "")
      .def_property_readonly("records_appended", &IngestService::records_appended);

  m.def("log_file_name", &log_file_name, py::arg("epoch_ms"));
}
