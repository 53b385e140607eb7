#include "segtrack/simulator.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <httplib.h>

#include "segtrack/error.hpp"
#include "segtrack/ingest.hpp"
#include "segtrack/session_store.hpp"

namespace segtrack {
namespace {

[[noreturn]] void malformed_row(std::size_t line, const std::string& detail) {
  throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line) + ": " + detail);
}

// RFC-4180 field split for a single physical line.
std::vector<std::string> split_csv_line(std::string_view line, std::size_t line_no) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"' && fields.back().empty()) {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) malformed_row(line_no, "unterminated quote");
  return fields;
}

struct Endpoint {
  std::string origin;  // scheme://host:port
  std::string path;
};

Endpoint parse_endpoint(const std::string& url) {
  constexpr std::string_view scheme = "http://";
  if (url.rfind(scheme, 0) != 0)
    throw Error(ErrorCode::InvalidArgument, "endpoint must be an http:// URL: " + url);
  const auto slash = url.find('/', scheme.size());
  Endpoint ep;
  ep.origin = url.substr(0, slash);
  ep.path = slash == std::string::npos ? std::string(kEventsRoute) : url.substr(slash);
  if (ep.origin.size() == scheme.size()) throw Error(ErrorCode::InvalidArgument, "endpoint has no host");
  return ep;
}

}  // namespace

std::int64_t ScenarioRow::stay_ms() const { return std::llround(stay_seconds * 1000.0); }

Scenario parse_scenario(std::string_view csv_text, std::string page_url) {
  Scenario scenario;
  scenario.page_url = std::move(page_url);
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos < csv_text.size()) {
    auto end = csv_text.find('\n', pos);
    if (end == std::string_view::npos) end = csv_text.size();
    std::string_view line = csv_text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    if (!header_seen) {
      if (line != kScenarioHeader)
        malformed_row(line_no, "expected header '" + std::string(kScenarioHeader) + "'");
      header_seen = true;
      continue;
    }
    const auto fields = split_csv_line(line, line_no);
    if (fields.size() != 3) malformed_row(line_no, "expected 3 fields");
    ScenarioRow row;
    row.user_id = fields[0];
    if (row.user_id.empty()) malformed_row(line_no, "empty user_id");

    const auto& seg = fields[1];
    const auto [seg_end, seg_ec] = std::from_chars(seg.data(), seg.data() + seg.size(), row.segment_id);
    if (seg.empty() || seg_ec != std::errc{} || seg_end != seg.data() + seg.size() || row.segment_id < 1)
      malformed_row(line_no, "segment_id must be a positive integer, got '" + seg + "'");

    const auto& stay = fields[2];
    const auto [stay_end, stay_ec] =
        std::from_chars(stay.data(), stay.data() + stay.size(), row.stay_seconds);
    if (stay.empty() || stay_ec != std::errc{} || stay_end != stay.data() + stay.size() ||
        !std::isfinite(row.stay_seconds) || row.stay_seconds <= 0.0 || row.stay_ms() <= 0)
      malformed_row(line_no, "stay_seconds must be a positive number, got '" + stay + "'");
    scenario.rows.push_back(std::move(row));
  }
  if (scenario.rows.empty()) throw Error(ErrorCode::EmptyScenario, "scenario has no rows");
  return scenario;
}

Scenario load_scenario(const std::filesystem::path& csv_path, std::string page_url) {
  std::ifstream in(csv_path, std::ios::binary);
  if (!in || std::filesystem::is_directory(csv_path))
    throw Error(ErrorCode::FileNotFound, csv_path.string());
  std::ostringstream text;
  text << in.rdbuf();
  if (page_url.empty()) page_url = "sim://" + csv_path.stem().string();
  return parse_scenario(text.str(), std::move(page_url));
}

std::vector<std::pair<std::string, std::vector<ScenarioRow>>> rows_by_user(const Scenario& scenario) {
  std::vector<std::pair<std::string, std::vector<ScenarioRow>>> users;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& row : scenario.rows) {
    auto [it, inserted] = index.try_emplace(row.user_id, users.size());
    if (inserted) users.emplace_back(row.user_id, std::vector<ScenarioRow>{});
    users[it->second].second.push_back(row);
  }
  return users;
}

std::string simulated_session_id(std::string_view user_id) { return "sim-" + std::string(user_id); }

std::vector<LogRecord> synthesize_session(const std::vector<ScenarioRow>& user_rows,
                                          const std::string& session_id, std::int64_t t0_ms,
                                          const std::string& page_url) {
  std::int64_t end_ms = t0_ms;
  for (const auto& row : user_rows) end_ms += row.stay_ms();
  const std::int64_t recv_ms = end_ms;

  std::vector<LogRecord> records;
  records.reserve(user_rows.size() + 2);
  records.push_back(make_session_start(session_id, page_url, recv_ms, t0_ms));
  std::int64_t cursor = t0_ms;
  for (const auto& row : user_rows) {
    const std::int64_t next = cursor + row.stay_ms();
    records.push_back(make_interval(session_id, page_url, recv_ms, row.segment_id, cursor, next));
    cursor = next;
  }
  records.push_back(make_session_end(session_id, page_url, recv_ms, end_ms));
  return records;
}

ReplaySummary replay_to_file(const Scenario& scenario, const std::filesystem::path& store_file) {
  ReplaySummary summary;
  std::vector<std::vector<LogRecord>> sessions;
  for (const auto& [user, rows] : rows_by_user(scenario))
    sessions.push_back(synthesize_session(rows, simulated_session_id(user), 0, scenario.page_url));

  LogFile file(store_file);
  for (const auto& records : sessions) {
    file.append_batch(records);
    ++summary.sessions;
    summary.records += records.size();
    summary.intervals += records.size() - 2;
    for (const auto& r : records) summary.bytes += serialize_record(r).size() + 1;
  }
  return summary;
}

ReplaySummary replay_to_endpoint(const Scenario& scenario, const std::string& endpoint_url,
                                 std::size_t max_intervals) {
  if (max_intervals == 0) throw Error(ErrorCode::InvalidArgument, "max_intervals must be positive");
  const Endpoint ep = parse_endpoint(endpoint_url);

  // Build every request up front so a bad scenario never half-sends.
  std::vector<EventBatch> batches;
  std::size_t sessions = 0;
  std::size_t intervals = 0;
  for (const auto& [user, rows] : rows_by_user(scenario)) {
    const auto records = synthesize_session(rows, simulated_session_id(user), 0, scenario.page_url);
    ++sessions;
    EventBatch batch;
    batch.session_id = records.front().session_id;
    batch.page_url = scenario.page_url;
    batch.page_en_ms = std::get<SessionStart>(records.front().body).en_ms;
    for (std::size_t i = 1; i + 1 < records.size(); ++i) {
      const auto& iv = std::get<IntervalBody>(records[i].body);
      batch.intervals.push_back({iv.segment_id, iv.en_ms, iv.ex_ms});
      ++intervals;
      if (batch.intervals.size() == max_intervals && i + 2 < records.size()) {
        batches.push_back(batch);
        batch.intervals.clear();
        batch.page_en_ms.reset();
      }
    }
    batch.page_ex_ms = std::get<SessionEnd>(records.back().body).ex_ms;
    batches.push_back(std::move(batch));
  }

  httplib::Client client(ep.origin);
  client.set_connection_timeout(std::chrono::seconds(3));
  client.set_read_timeout(std::chrono::seconds(10));

  ReplaySummary summary;
  for (const auto& batch : batches) {
    const auto body = batch_to_json(batch);
    const auto res = client.Post(ep.path, body, "application/json");
    const std::string progress =
        " after " + std::to_string(summary.requests) + " of " + std::to_string(batches.size()) + " requests";
    if (!res) {
      throw Error(ErrorCode::SinkUnreachable,
                  endpoint_url + ": " + httplib::to_string(res.error()) + progress);
    }
    if (res->status < 200 || res->status >= 300) {
      throw Error(ErrorCode::SinkRejected,
                  endpoint_url + " answered " + std::to_string(res->status) + " " + res->body + progress);
    }
    ++summary.requests;
    summary.bytes += body.size();
  }
  summary.sessions = sessions;
  summary.intervals = intervals;
  summary.records = intervals + 2 * sessions;
  return summary;
}

}  // namespace segtrack
