#include <doctest.h>

#include <random>

#include "segtrack/analyzer.hpp"
#include "segtrack/error.hpp"
#include "segtrack/report.hpp"
#include "segtrack/simulator.hpp"
#include "support/oracle.hpp"
#include "support/paths.hpp"

using namespace segtrack;

namespace {

std::vector<SessionLog> table1_sessions() {
  const auto scenario = load_scenario(testing_support::table1());
  std::vector<LogRecord> records;
  for (const auto& [user, rows] : rows_by_user(scenario)) {
    auto session = synthesize_session(rows, simulated_session_id(user), 0, scenario.page_url);
    records.insert(records.end(), session.begin(), session.end());
  }
  return group_sessions(records);
}

SessionLog session_of(std::vector<std::pair<SegmentId, std::int64_t>> stays) {
  SessionLog s;
  s.session_id = "s";
  s.page_url = "/p";
  std::int64_t t = 0;
  for (auto [id, ms] : stays) {
    s.intervals.push_back({id, t, t + ms});
    t += ms;
  }
  return s;
}

std::vector<SegmentId> ids(const std::vector<SegmentDwell>& rows) {
  std::vector<SegmentId> out;
  for (const auto& r : rows) out.push_back(r.segment_id);
  return out;
}

SessionLog random_session(std::mt19937& rng) {
  std::uniform_int_distribution<int> count(0, 30), seg(1, 12), stay(0, 60'000);
  std::vector<std::pair<SegmentId, std::int64_t>> stays;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) stays.emplace_back(seg(rng), stay(rng));
  return session_of(stays);
}

}  // namespace

TEST_CASE("aggregate sums repeated visits") {
  const auto sessions = table1_sessions();
  REQUIRE(sessions.size() == 4);
  const auto dwell = aggregate_dwell(sessions[1]);
  CHECK(dwell.session_id == "sim-2");
  CHECK(dwell.entries_ms.at(14) == 9000);
  CHECK(dwell.seconds(14) == doctest::Approx(9.0));
  CHECK(dwell.entries_ms.size() == 5);
  CHECK(dwell.total_ms() == 46000);
  CHECK(aggregate_dwell(session_of({})).entries_ms.empty());
}

TEST_CASE("threshold is strict") {
  const auto dwell = aggregate_dwell(table1_sessions()[0]);
  const auto r = apply_threshold(dwell, Threshold(4.0));
  CHECK(ids(r.retained) == std::vector<SegmentId>{14, 17, 23});
  CHECK(ids(r.dropped) == std::vector<SegmentId>{6, 8});

  CHECK(apply_threshold(dwell, Threshold(1000.0)).retained.empty());
  CHECK(apply_threshold(dwell, Threshold(0.0)).dropped.empty());

  CHECK_FALSE(Threshold(1.0).passes(1000));
  CHECK(Threshold(1.0).passes(1001));
  CHECK(Threshold(0.0).passes(1));
  CHECK_FALSE(Threshold(0.0).passes(0));
  CHECK(Threshold(2.5).passes(2501));
  CHECK_FALSE(Threshold(2.5).passes(2500));
  CHECK_THROWS_AS(Threshold(-0.5), Error);
  CHECK_THROWS_AS(Threshold(std::nan("")), Error);
  CHECK(Threshold().sigma_seconds() == 1.0);
}

TEST_CASE("ranking on the sample table") {
  const auto sessions = table1_sessions();
  const auto u1 = analyze_session(sessions[0], Threshold(1.0));
  CHECK(u1.retained == std::vector<SegmentDwell>{{23, 25000}, {14, 10000}, {17, 5000}, {6, 4000}, {8, 3000}});

  // 13 and 17 tie at 10 s; the lower id comes first.
  const auto u3 = analyze_session(sessions[2], Threshold(1.0));
  CHECK(ids(u3.retained) == std::vector<SegmentId>{22, 13, 17, 8});

  const auto u4 = analyze_session(sessions[3], Threshold(1.0));
  CHECK(ids(u4.retained) == std::vector<SegmentId>{48, 15, 17, 22, 14});
}

TEST_CASE("cross-user summary") {
  const auto summary = cross_user_summary(table1_sessions(), Threshold(1.0));
  REQUIRE(summary.rows.size() == 10);
  CHECK(summary.rows[0] == SummaryRow{48, 45000, 1});
  CHECK(summary.rows[1] == SummaryRow{22, 40000, 3});
  CHECK(summary.rows[4] == SummaryRow{14, 31000, 3});

  // Segments only count where they cleared sigma.
  const auto strict = cross_user_summary(table1_sessions(), Threshold(9.5));
  for (const auto& row : strict.rows) {
    if (row.segment_id == 14) CHECK(row == SummaryRow{14, 22000, 2});
  }
}

TEST_CASE("matches the oracle on the sample table for every sigma") {
  const auto csv = testing_support::slurp(testing_support::table1());
  const auto sessions = table1_sessions();
  for (long long sigma_ms = 0; sigma_ms <= 50'000; sigma_ms += 250) {
    CAPTURE(sigma_ms);
    const auto expected = oracle::rank_all(csv, sigma_ms);
    for (const auto& s : sessions) {
      const auto got = analyze_session(s, Threshold(static_cast<double>(sigma_ms) / 1000.0));
      std::vector<oracle::Ranked> as_oracle;
      for (const auto& r : got.retained) as_oracle.push_back({r.segment_id, r.dwell_ms});
      CHECK(as_oracle == expected.at(s.session_id.substr(4)));
    }
  }
}

TEST_CASE("property: raising sigma never adds segments") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> sig(0.0, 70.0);
  for (int i = 0; i < 500; ++i) {
    const auto dwell = aggregate_dwell(random_session(rng));
    double a = sig(rng), b = sig(rng);
    if (a > b) std::swap(a, b);
    const auto low = apply_threshold(dwell, Threshold(a));
    const auto high = apply_threshold(dwell, Threshold(b));
    const auto low_ids = ids(low.retained);
    for (auto id : ids(high.retained))
      CHECK(std::find(low_ids.begin(), low_ids.end(), id) != low_ids.end());
  }
}

TEST_CASE("property: aggregation conserves time and ranking is ordered") {
  std::mt19937 rng(29);
  for (int i = 0; i < 500; ++i) {
    const auto session = random_session(rng);
    std::int64_t raw = 0;
    for (const auto& iv : session.intervals) raw += iv.ex_ms - iv.en_ms;
    const auto dwell = aggregate_dwell(session);
    CHECK(dwell.total_ms() == raw);

    const auto report = analyze_session(session, Threshold(std::uniform_real_distribution<double>(0, 60)(rng)));
    CHECK(report.retained.size() + report.dropped.size() == dwell.entries_ms.size());
    for (std::size_t k = 1; k < report.retained.size(); ++k) {
      const auto& prev = report.retained[k - 1];
      const auto& cur = report.retained[k];
      CHECK((prev.dwell_ms > cur.dwell_ms ||
             (prev.dwell_ms == cur.dwell_ms && prev.segment_id < cur.segment_id)));
    }
  }
}

TEST_CASE("unknown segment ids") {
  PageManifest manifest;
  manifest.segments = {{14, "/1", "", "div"}, {23, "/2", "", "div"}};
  auto unknown = unknown_segments(table1_sessions(), manifest);
  CHECK(std::find(unknown.begin(), unknown.end(), 14) == unknown.end());
  CHECK(std::find(unknown.begin(), unknown.end(), 48) != unknown.end());
  CHECK(unknown.size() == 8);
}

TEST_CASE("seconds formatting") {
  CHECK(format_seconds(25000) == "25.000");
  CHECK(format_seconds(0) == "0.000");
  CHECK(format_seconds(1) == "0.001");
  CHECK(format_seconds(123456789) == "123456.789");
  CHECK(format_seconds_compact(25000) == "25");
  CHECK(format_seconds_compact(2500) == "2.5");
  CHECK(format_seconds_compact(2505) == "2.505");
  CHECK(parse_report_format("svg") == ReportFormat::Svg);
  CHECK_THROWS_AS((void)parse_report_format("xml"), Error);
}

TEST_CASE("csv and json reports") {
  const auto sessions = table1_sessions();
  const auto u1 = analyze_session(sessions[0], Threshold(1.0));
  const auto csv = render_report(u1, ReportFormat::Csv);
  CHECK(csv.rfind("segment_id,dwell_seconds\n23,25.000\n14,10.000\n", 0) == 0);

  const auto json = render_report(analyze_session(sessions[2], Threshold(1.0)), ReportFormat::Json);
  CHECK(json.find(R"("retained":[{"segment_id":22,"dwell_seconds":19.000},{"segment_id":13)") !=
        std::string::npos);

  std::vector<RankedReport> all;
  for (const auto& s : sessions) all.push_back(analyze_session(s, Threshold(1.0)));
  const auto multi = render_reports(all, ReportFormat::Csv);
  CHECK(multi.rfind("session_id,segment_id,dwell_seconds\nsim-1,23,25.000\n", 0) == 0);

  const auto summary = render_summary(cross_user_summary(sessions, Threshold(1.0)), ReportFormat::Csv);
  CHECK(summary.find("22,40.000,3\n") != std::string::npos);
  CHECK(summary.find("14,31.000,3\n") != std::string::npos);
}

TEST_CASE("text chart") {
  const auto u4 = analyze_session(table1_sessions()[3], Threshold(1.0));
  const auto chart = render_report(u4, ReportFormat::Chart);
  CHECK(chart ==
        "# session sim-4  sigma=1.000s  bars=5\n"
        "48 |#45###############################################\n"
        "15 |#35####################################\n"
        "17 |#22#####################\n"
        "22 |#15##############\n"
        "14 |#12##########\n");

  RankedReport empty;
  empty.session_id = "x";
  empty.sigma_seconds = 1000.0;
  CHECK(render_report(empty, ReportFormat::Chart) == "# session x  sigma=1000.000s  bars=0\n");

  CHECK(bar_columns(45000, 45000, 2) == kChartColumns);
  CHECK(bar_columns(1, 45000, 1) == 3);
}

TEST_CASE("svg chart") {
  const auto u2 = analyze_session(table1_sessions()[1], Threshold(4.0));
  const auto svg = render_report(u2, ReportFormat::Svg);
  CHECK(svg.rfind("<svg xmlns=\"http://www.w3.org/2000/svg\"", 0) == 0);
  CHECK(svg.find("</svg>") != std::string::npos);
  const std::string_view order[] = {"data-segment-id=\"45\"", "data-segment-id=\"14\"",
                                    "data-segment-id=\"22\"", "data-segment-id=\"13\""};
  std::size_t pos = 0;
  for (auto needle : order) {
    const auto at = svg.find(needle, pos);
    REQUIRE(at != std::string::npos);
    pos = at;
  }
  CHECK(svg.find("data-segment-id=\"15\"") == std::string::npos);
  CHECK(svg.find("width=\"500\"") != std::string::npos);
}
