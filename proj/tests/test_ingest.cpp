#include <doctest.h>

#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "segtrack/error.hpp"
#include "segtrack/ingest.hpp"
#include "support/paths.hpp"

using namespace segtrack;
using testing_support::slurp;
using testing_support::TempDir;

namespace {

constexpr std::int64_t kNow = 1'760'000'000'000;  // 2025-10-09

IngestConfig config_in(const TempDir& dir) {
  IngestConfig c;
  c.log_dir = dir.path();
  c.bind_address = "127.0.0.1:0";
  return c;
}

IngestService service_in(const TempDir& dir, IngestConfig c) {
  c.log_dir = dir.path();
  return IngestService(std::move(c), [] { return kNow; });
}

std::string log_text(const TempDir& dir) {
  const auto path = dir / log_file_name(kNow);
  return std::filesystem::exists(path) ? slurp(path) : std::string();
}

std::string batch_with(int valid, bool one_invalid) {
  EventBatch b;
  b.session_id = "s1";
  b.page_url = "/p";
  for (int i = 0; i < valid; ++i) b.intervals.push_back({i + 1, i * 100, i * 100 + 50});
  auto text = batch_to_json(b);
  if (one_invalid) {
    auto doc = nlohmann::json::parse(text);
    doc["intervals"][valid / 2]["ex_ms"] = -1;
    text = doc.dump();
  }
  return text;
}

}  // namespace

TEST_CASE("accepted batch appends one interval record and answers 204") {
  TempDir dir("ingest-ok");
  auto svc = service_in(dir, {});
  const auto reply = svc.handle_event_batch(
      R"({"v":1,"session_id":"s1","page_url":"/p","intervals":[{"segment_id":14,"en_ms":0,"ex_ms":10000}]})");
  CHECK(reply.status == 204);
  CHECK(reply.body.empty());
  const auto read = read_records(dir / log_file_name(kNow));
  REQUIRE(read.records.size() == 1);
  CHECK(read.records[0] == make_interval("s1", "/p", kNow, 14, 0, 10000));
}

TEST_CASE("empty batch without page fields appends nothing") {
  TempDir dir("ingest-empty");
  auto svc = service_in(dir, {});
  CHECK(svc.handle_event_batch(R"({"v":1,"session_id":"s1","page_url":"/p","intervals":[]})").status == 204);
  CHECK(log_text(dir).empty());
  CHECK(svc.records_appended() == 0);
}

TEST_CASE("append order is start, intervals, end") {
  TempDir dir("ingest-order");
  auto svc = service_in(dir, {});
  const auto reply = svc.handle_event_batch(
      R"({"v":1,"session_id":"s","page_url":"/p","page_en_ms":5,"page_ex_ms":900,
          "intervals":[{"segment_id":2,"en_ms":10,"ex_ms":20},{"segment_id":1,"en_ms":20,"ex_ms":30}]})");
  REQUIRE(reply.status == 204);
  const auto read = read_records(dir / log_file_name(kNow));
  REQUIRE(read.records.size() == 4);
  CHECK(read.records[0].kind() == RecordKind::SessionStart);
  CHECK(std::get<IntervalBody>(read.records[1].body).segment_id == 2);
  CHECK(std::get<IntervalBody>(read.records[2].body).segment_id == 1);
  CHECK(read.records[3] == make_session_end("s", "/p", kNow, 900));
  CHECK(svc.records_appended() == 4);
}

TEST_CASE("validation errors reject the whole batch") {
  TempDir dir("ingest-bad");
  auto svc = service_in(dir, {});
  REQUIRE(svc.handle_event_batch(batch_with(3, false)).status == 204);
  const auto before = log_text(dir);

  struct Case {
    const char* body;
    int status;
    const char* code;
  };
  for (const auto& c : {
           Case{R"({"v":1,"session_id":"s1","page_url":"/p","intervals":[{"segment_id":3,"en_ms":9,"ex_ms":5}]})", 400, "InvalidInterval"},
           Case{R"({"v":1,"session_id":"s1","page_url":"/p","intervals":[{"segment_id":0,"en_ms":1,"ex_ms":5}]})", 400, "InvalidInterval"},
           Case{R"({"v":2,"session_id":"s1","page_url":"/p","intervals":[]})", 400, "MalformedBatch"},
           Case{R"({"session_id":"s1","page_url":"/p"})", 400, "MalformedBatch"},
           Case{R"({"v":1,"page_url":"/p"})", 400, "MalformedBatch"},
           Case{R"({"v":1,"session_id":"","page_url":"/p"})", 400, "MalformedBatch"},
           Case{R"({"v":1,"session_id":"s1"})", 400, "MalformedBatch"},
           Case{R"({"v":1,"session_id":"s1","page_url":"/p","intervals":{}})", 400, "MalformedBatch"},
           Case{R"({"v":1,"session_id":"s1","page_url":"/p","intervals":[{"segment_id":1,"en_ms":1.5,"ex_ms":5}]})", 400, "MalformedBatch"},
           Case{R"({"v":1,"session_id":"s1","page_url":"/p","intervals":[{"segment_id":1,"en_ms":1}]})", 400, "MalformedBatch"},
           Case{R"({"v":1,"session_id":"s1","page_url":"/p","page_en_ms":"0"})", 400, "MalformedBatch"},
           Case{R"({"v":1,"session_id":"s1","page_url":"/p","page_en_ms":10,"page_ex_ms":5})", 400, "InvalidInterval"},
           Case{R"(not json)", 400, "MalformedBatch"},
           Case{R"([])", 400, "MalformedBatch"},
       }) {
    CAPTURE(c.body);
    const auto reply = svc.handle_event_batch(c.body);
    CHECK(reply.status == c.status);
    CHECK(nlohmann::json::parse(reply.body)["error"] == c.code);
  }
  CHECK(log_text(dir) == before);
  CHECK(svc.records_appended() == 3);
}

TEST_CASE("one invalid interval among ten leaves the store byte-identical") {
  TempDir dir("ingest-atomic");
  auto svc = service_in(dir, {});
  REQUIRE(svc.handle_event_batch(batch_with(10, false)).status == 204);
  const auto before = log_text(dir);
  const auto reply = svc.handle_event_batch(batch_with(10, true));
  CHECK(reply.status == 400);
  CHECK(log_text(dir) == before);
}

TEST_CASE("size limits answer 413") {
  TempDir dir("ingest-limits");
  IngestConfig c;
  c.max_batch_bytes = 400;
  c.max_intervals_per_batch = 5;
  auto svc = service_in(dir, c);
  CHECK(svc.handle_event_batch(std::string(401, ' ')).status == 413);
  CHECK(svc.handle_event_batch(batch_with(6, false)).status == 413);
  CHECK(svc.handle_event_batch(batch_with(5, false)).status == 204);
}

TEST_CASE("optional shared token") {
  TempDir dir("ingest-token");
  IngestConfig c;
  c.auth_token = "sekrit";
  auto svc = service_in(dir, c);
  CHECK(svc.handle_event_batch(batch_with(1, false)).status == 401);
  CHECK(svc.handle_event_batch(batch_with(1, false), "wrong").status == 401);
  CHECK(svc.handle_event_batch(batch_with(1, false), "sekrit").status == 204);
}

TEST_CASE("storage failure answers 503") {
  TempDir dir("ingest-503");
  std::filesystem::create_directories(dir / log_file_name(kNow));  // a directory where the file goes
  auto svc = service_in(dir, {});
  CHECK(svc.handle_event_batch(batch_with(2, false)).status == 503);
  CHECK(svc.records_appended() == 0);
}

TEST_CASE("health counts records since start") {
  TempDir dir("ingest-health");
  auto svc = service_in(dir, {});
  auto health = nlohmann::json::parse(svc.health().body);
  CHECK(health["status"] == "ok");
  CHECK(health["records_appended"] == 0);
  REQUIRE(svc.handle_event_batch(batch_with(3, false)).status == 204);
  CHECK(nlohmann::json::parse(svc.health().body)["records_appended"] == 3);
  REQUIRE(svc.handle_event_batch(batch_with(3, true)).status == 400);
  CHECK(nlohmann::json::parse(svc.health().body)["records_appended"] == 3);
}

TEST_CASE("concurrent batches stay contiguous in the log") {
  TempDir dir("ingest-concurrent");
  auto svc = service_in(dir, {});
  constexpr int kThreads = 8;
  constexpr int kBatches = 25;
  std::vector<std::thread> threads;
  for (int t = 0; t < kThreads; ++t) {
    threads.emplace_back([&, t] {
      for (int b = 0; b < kBatches; ++b) {
        EventBatch batch;
        batch.session_id = "t" + std::to_string(t) + "-b" + std::to_string(b);
        batch.page_url = "/p";
        batch.page_en_ms = 0;
        for (int i = 0; i < 7; ++i) batch.intervals.push_back({i + 1, i, i + 1});
        batch.page_ex_ms = 100;
        CHECK(svc.handle_event_batch(batch_to_json(batch)).status == 204);
      }
    });
  }
  for (auto& th : threads) th.join();
  const auto read = read_records(dir / log_file_name(kNow));
  REQUIRE(read.records.size() == kThreads * kBatches * 9);
  for (std::size_t i = 0; i < read.records.size(); i += 9) {
    CHECK(read.records[i].kind() == RecordKind::SessionStart);
    for (std::size_t j = i; j < i + 9; ++j) CHECK(read.records[j].session_id == read.records[i].session_id);
    CHECK(read.records[i + 8].kind() == RecordKind::SessionEnd);
  }
  CHECK(svc.records_appended() == kThreads * kBatches * 9);
}

TEST_CASE("HTTP front end: routes, status codes, CORS") {
  TempDir dir("ingest-http");
  IngestService svc(config_in(dir));
  IngestServer server(svc);
  REQUIRE(server.bind());
  std::thread loop([&] { server.listen(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", server.port());
  auto res = client.Get(std::string(kHealthRoute));
  REQUIRE(res);
  CHECK(res->status == 200);
  CHECK(nlohmann::json::parse(res->body)["records_appended"] == 0);

  res = client.Post(std::string(kEventsRoute), batch_with(3, false), "text/plain");
  REQUIRE(res);
  CHECK(res->status == 204);
  CHECK(res->body.empty());
  CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");

  res = client.Post(std::string(kEventsRoute), batch_with(10, true), "application/json");
  REQUIRE(res);
  CHECK(res->status == 400);
  CHECK(nlohmann::json::parse(res->body)["error"] == "InvalidInterval");

  res = client.Post(std::string(kEventsRoute), std::string(70000, ' '), "application/json");
  REQUIRE(res);
  CHECK(res->status == 413);

  res = client.Options(std::string(kEventsRoute));
  REQUIRE(res);
  CHECK(res->status == 204);
  CHECK(res->get_header_value("Access-Control-Allow-Methods").find("POST") != std::string::npos);

  res = client.Get(std::string(kHealthRoute));
  REQUIRE(res);
  CHECK(nlohmann::json::parse(res->body)["records_appended"] == 3);

  server.stop();
  loop.join();
}

TEST_CASE("binding an occupied port fails") {
  TempDir dir("ingest-port");
  IngestService a(config_in(dir));
  IngestServer first(a);
  REQUIRE(first.bind());
  IngestConfig c = config_in(dir);
  c.bind_address = "127.0.0.1:" + std::to_string(first.port());
  IngestService b(c);
  IngestServer second(b);
  CHECK_FALSE(second.bind());
}

TEST_CASE("split_host_port") {
  CHECK(split_host_port("127.0.0.1:8423") == std::pair<std::string, int>{"127.0.0.1", 8423});
  CHECK(split_host_port("[::1]:80") == std::pair<std::string, int>{"::1", 80});
  CHECK_THROWS_AS((void)split_host_port("localhost"), Error);
  CHECK_THROWS_AS((void)split_host_port("h:99999"), Error);
  CHECK_THROWS_AS((void)split_host_port("h:x"), Error);
}
