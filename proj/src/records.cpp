#include "segtrack/records.hpp"

#include <json.hpp>

#include "segtrack/error.hpp"

namespace segtrack {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

std::int64_t integer_field(const nlohmann::json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw Error(ErrorCode::MalformedRecord, std::string("missing ") + key);
  if (it->is_number_unsigned()) {
    const auto v = it->get<std::uint64_t>();
    if (v > static_cast<std::uint64_t>(INT64_MAX))
      throw Error(ErrorCode::MalformedRecord, std::string(key) + " out of range");
    return static_cast<std::int64_t>(v);
  }
  if (!it->is_number_integer())
    throw Error(ErrorCode::MalformedRecord, std::string(key) + " must be an integer");
  return it->get<std::int64_t>();
}

std::string string_field(const nlohmann::json& obj, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string())
    throw Error(ErrorCode::MalformedRecord, std::string(key) + " must be a string");
  return it->get<std::string>();
}

}  // namespace

std::string_view to_string(RecordKind kind) noexcept {
  switch (kind) {
    case RecordKind::SessionStart: return "session_start";
    case RecordKind::Interval: return "interval";
    case RecordKind::SessionEnd: return "session_end";
  }
  return "unknown";
}

LogRecord make_session_start(std::string session_id, std::string page_url, std::int64_t recv_ms,
                             std::int64_t en_ms) {
  return {std::move(session_id), std::move(page_url), recv_ms, SessionStart{en_ms}};
}

LogRecord make_interval(std::string session_id, std::string page_url, std::int64_t recv_ms,
                        SegmentId segment_id, std::int64_t en_ms, std::int64_t ex_ms) {
  return {std::move(session_id), std::move(page_url), recv_ms,
          IntervalBody{segment_id, en_ms, ex_ms}};
}

LogRecord make_session_end(std::string session_id, std::string page_url, std::int64_t recv_ms,
                           std::int64_t ex_ms) {
  return {std::move(session_id), std::move(page_url), recv_ms, SessionEnd{ex_ms}};
}

void validate(const LogRecord& record) {
  if (const auto* iv = std::get_if<IntervalBody>(&record.body)) {
    if (iv->segment_id < 1) throw Error(ErrorCode::MalformedRecord, "segment_id must be >= 1");
    if (iv->ex_ms < iv->en_ms) throw Error(ErrorCode::MalformedRecord, "ex_ms precedes en_ms");
  }
}

std::string serialize_record(const LogRecord& record) {
  nlohmann::ordered_json out;
  out["kind"] = to_string(record.kind());
  out["session_id"] = record.session_id;
  out["page_url"] = record.page_url;
  out["recv_ms"] = record.recv_ms;
  std::visit(overloaded{
                 [&](const SessionStart& s) { out["en_ms"] = s.en_ms; },
                 [&](const IntervalBody& i) {
                   out["en_ms"] = i.en_ms;
                   out["ex_ms"] = i.ex_ms;
                   out["segment_id"] = i.segment_id;
                 },
                 [&](const SessionEnd& e) { out["ex_ms"] = e.ex_ms; },
             },
             record.body);
  return out.dump();
}

LogRecord parse_record(std::string_view line) {
  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, e.what());
  }
  if (!obj.is_object()) throw Error(ErrorCode::MalformedRecord, "line is not a JSON object");

  LogRecord record;
  const auto kind = string_field(obj, "kind");
  record.session_id = string_field(obj, "session_id");
  record.page_url = string_field(obj, "page_url");
  record.recv_ms = integer_field(obj, "recv_ms");
  std::size_t expected_keys = 4;
  if (kind == "session_start") {
    record.body = SessionStart{integer_field(obj, "en_ms")};
    expected_keys += 1;
  } else if (kind == "interval") {
    record.body = IntervalBody{integer_field(obj, "segment_id"), integer_field(obj, "en_ms"),
                               integer_field(obj, "ex_ms")};
    expected_keys += 3;
  } else if (kind == "session_end") {
    record.body = SessionEnd{integer_field(obj, "ex_ms")};
    expected_keys += 1;
  } else {
    throw Error(ErrorCode::MalformedRecord, "unknown kind '" + kind + "'");
  }
  if (obj.size() != expected_keys)
    throw Error(ErrorCode::MalformedRecord, "unexpected keys for kind " + kind);
  validate(record);
  return record;
}

}  // namespace segtrack
