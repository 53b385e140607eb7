#include "segtrack/ingest.hpp"

#include <charconv>

#include <json.hpp>

#include "segtrack/error.hpp"

namespace segtrack {
namespace {

using nlohmann::json;

[[noreturn]] void malformed(const std::string& detail) {
  throw Error(ErrorCode::MalformedBatch, detail);
}

std::int64_t integer_of(const json& value, const std::string& what) {
  if (value.is_number_unsigned()) {
    const auto v = value.get<std::uint64_t>();
    if (v > static_cast<std::uint64_t>(INT64_MAX)) malformed(what + " out of range");
    return static_cast<std::int64_t>(v);
  }
  if (!value.is_number_integer()) malformed(what + " must be an integer");
  return value.get<std::int64_t>();
}

std::optional<std::int64_t> optional_integer(const json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return integer_of(*it, key);
}

std::string error_body(const Error& e) {
  nlohmann::ordered_json body;
  body["error"] = to_string(e.code());
  body["detail"] = e.detail();
  return body.dump();
}

}  // namespace

void IngestConfig::validate() const {
  if (max_batch_bytes == 0 || max_intervals_per_batch == 0)
    throw Error(ErrorCode::InvalidArgument, "ingest limits must be positive");
}

std::string batch_to_json(const EventBatch& batch) {
  nlohmann::ordered_json out;
  out["v"] = batch.v;
  out["session_id"] = batch.session_id;
  out["page_url"] = batch.page_url;
  if (batch.page_en_ms) out["page_en_ms"] = *batch.page_en_ms;
  if (batch.page_ex_ms) out["page_ex_ms"] = *batch.page_ex_ms;
  out["intervals"] = nlohmann::ordered_json::array();
  for (const auto& iv : batch.intervals) {
    nlohmann::ordered_json item;
    item["segment_id"] = iv.segment_id;
    item["en_ms"] = iv.en_ms;
    item["ex_ms"] = iv.ex_ms;
    out["intervals"].push_back(std::move(item));
  }
  return out.dump();
}

EventBatch parse_event_batch(std::string_view body, const IngestConfig& limits) {
  if (body.size() > limits.max_batch_bytes) {
    throw Error(ErrorCode::BatchTooLarge, std::to_string(body.size()) + " bytes exceed " +
                                              std::to_string(limits.max_batch_bytes));
  }
  json doc;
  try {
    doc = json::parse(body);
  } catch (const json::exception& e) {
    malformed(e.what());
  }
  if (!doc.is_object()) malformed("batch must be a JSON object");

  EventBatch batch;
  const auto v = doc.find("v");
  if (v == doc.end()) malformed("missing v");
  if (integer_of(*v, "v") != kProtocolVersion) malformed("unsupported protocol version");

  const auto sid = doc.find("session_id");
  if (sid == doc.end() || !sid->is_string() || sid->get_ref<const std::string&>().empty())
    malformed("missing session_id");
  batch.session_id = sid->get<std::string>();

  const auto url = doc.find("page_url");
  if (url == doc.end() || !url->is_string()) malformed("missing page_url");
  batch.page_url = url->get<std::string>();

  batch.page_en_ms = optional_integer(doc, "page_en_ms");
  batch.page_ex_ms = optional_integer(doc, "page_ex_ms");
  if (batch.page_en_ms && batch.page_ex_ms && *batch.page_ex_ms < *batch.page_en_ms)
    throw Error(ErrorCode::InvalidInterval, "page_ex_ms precedes page_en_ms");

  const auto intervals = doc.find("intervals");
  if (intervals != doc.end() && !intervals->is_null()) {
    if (!intervals->is_array()) malformed("intervals must be an array");
    if (intervals->size() > limits.max_intervals_per_batch) {
      throw Error(ErrorCode::BatchTooLarge,
                  std::to_string(intervals->size()) + " intervals exceed " +
                      std::to_string(limits.max_intervals_per_batch));
    }
    batch.intervals.reserve(intervals->size());
    std::size_t index = 0;
    for (const auto& item : *intervals) {
      const std::string where = "intervals[" + std::to_string(index++) + "]";
      if (!item.is_object()) malformed(where + " must be an object");
      BatchInterval iv;
      for (const char* key : {"segment_id", "en_ms", "ex_ms"}) {
        if (!item.contains(key)) malformed(where + " missing " + key);
      }
      iv.segment_id = integer_of(item["segment_id"], where + ".segment_id");
      iv.en_ms = integer_of(item["en_ms"], where + ".en_ms");
      iv.ex_ms = integer_of(item["ex_ms"], where + ".ex_ms");
      if (iv.segment_id < 1) throw Error(ErrorCode::InvalidInterval, where + ": segment_id < 1");
      if (iv.ex_ms < iv.en_ms) throw Error(ErrorCode::InvalidInterval, where + ": ex_ms < en_ms");
      batch.intervals.push_back(iv);
    }
  }
  return batch;
}

std::vector<LogRecord> batch_to_records(const EventBatch& batch, std::int64_t recv_ms) {
  std::vector<LogRecord> records;
  records.reserve(batch.intervals.size() + 2);
  if (batch.page_en_ms)
    records.push_back(make_session_start(batch.session_id, batch.page_url, recv_ms, *batch.page_en_ms));
  for (const auto& iv : batch.intervals) {
    records.push_back(
        make_interval(batch.session_id, batch.page_url, recv_ms, iv.segment_id, iv.en_ms, iv.ex_ms));
  }
  if (batch.page_ex_ms)
    records.push_back(make_session_end(batch.session_id, batch.page_url, recv_ms, *batch.page_ex_ms));
  return records;
}

int http_status_for(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedBatch:
    case ErrorCode::InvalidInterval:
      return 400;
    case ErrorCode::Unauthorized:
      return 401;
    case ErrorCode::BatchTooLarge:
      return 413;
    case ErrorCode::IoFailure:
      return 503;
    default:
      return 500;
  }
}

IngestService::Clock IngestService::now_epoch_ms_clock() { return [] { return now_epoch_ms(); }; }

IngestService::IngestService(IngestConfig config, Clock clock)
    : config_(std::move(config)), clock_(std::move(clock)), store_(config_.log_dir) {
  config_.validate();
}

IngestResponse IngestService::handle_event_batch(std::string_view body, std::string_view token) {
  try {
    if (!config_.auth_token.empty() && token != config_.auth_token)
      throw Error(ErrorCode::Unauthorized, "missing or wrong token");
    const EventBatch batch = parse_event_batch(body, config_);
    const std::int64_t recv_ms = clock_();
    const auto records = batch_to_records(batch, recv_ms);
    store_.append_batch(records, recv_ms);
    appended_ += records.size();
    return {204, {}};
  } catch (const Error& e) {
    return {http_status_for(e.code()), error_body(e)};
  }
}

IngestResponse IngestService::health() const {
  nlohmann::ordered_json body;
  body["status"] = "ok";
  body["records_appended"] = records_appended();
  return {200, body.dump()};
}

std::pair<std::string, int> split_host_port(std::string_view address) {
  const auto colon = address.rfind(':');
  if (colon == std::string_view::npos || colon == 0)
    throw Error(ErrorCode::InvalidArgument, "expected host:port, got '" + std::string(address) + "'");
  std::string host(address.substr(0, colon));
  if (host.size() > 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  const auto port_text = address.substr(colon + 1);
  int port = -1;
  const auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
  if (port_text.empty() || ec != std::errc{} || ptr != port_text.data() + port_text.size() ||
      port < 0 || port > 65535)
    throw Error(ErrorCode::InvalidArgument, "bad port in '" + std::string(address) + "'");
  return {std::move(host), port};
}

}  // namespace segtrack
