#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "segtrack/error.hpp"
#include "segtrack/records.hpp"
#include "segtrack/session_store.hpp"
#include "segtrack/time_util.hpp"

namespace segtrack {

inline constexpr int kProtocolVersion = 1;
inline constexpr std::string_view kEventsRoute = "/v1/events";
inline constexpr std::string_view kHealthRoute = "/v1/health";
inline constexpr std::string_view kTokenHeader = "X-Segtrack-Token";

struct IngestConfig {
  std::string bind_address = "127.0.0.1:8423";
  std::filesystem::path log_dir = "segtrack-logs";
  std::size_t max_batch_bytes = 65536;
  std::size_t max_intervals_per_batch = 500;
  std::string auth_token;  // empty: no authentication

  // Throws Error(InvalidArgument) when a limit is zero.
  void validate() const;
};

struct BatchInterval {
  SegmentId segment_id = 0;
  std::int64_t en_ms = 0;
  std::int64_t ex_ms = 0;
  bool operator==(const BatchInterval&) const = default;
};

/// The wire payload POSTed to /v1/events.
struct EventBatch {
  int v = kProtocolVersion;
  std::string session_id;
  std::string page_url;
  std::optional<std::int64_t> page_en_ms;
  std::optional<std::int64_t> page_ex_ms;
  std::vector<BatchInterval> intervals;
  bool operator==(const EventBatch&) const = default;
};

[[nodiscard]] std::string batch_to_json(const EventBatch& batch);

/// Validates a request body. Throws Error with MalformedBatch,
/// InvalidInterval or BatchTooLarge.
[[nodiscard]] EventBatch parse_event_batch(std::string_view body, const IngestConfig& limits);

/// session_start, intervals in given order, session_end.
[[nodiscard]] std::vector<LogRecord> batch_to_records(const EventBatch& batch, std::int64_t recv_ms);

[[nodiscard]] int http_status_for(ErrorCode code) noexcept;

struct IngestResponse {
  int status = 204;
  std::string body;  // JSON; empty for 204
};

/// Transport-independent core of the collector: validation, then one
/// serialized append per accepted batch.
class IngestService {
 public:
  using Clock = std::function<std::int64_t()>;

  explicit IngestService(IngestConfig config, Clock clock = now_epoch_ms_clock());

  IngestResponse handle_event_batch(std::string_view body, std::string_view token = {});
  IngestResponse health() const;

  [[nodiscard]] std::uint64_t records_appended() const noexcept { return appended_.load(); }
  [[nodiscard]] const IngestConfig& config() const noexcept { return config_; }
  [[nodiscard]] SessionStore& store() noexcept { return store_; }

  static Clock now_epoch_ms_clock();

 private:
  IngestConfig config_;
  Clock clock_;
  SessionStore store_;
  std::atomic<std::uint64_t> appended_{0};
};

/// HTTP front end: POST /v1/events, OPTIONS /v1/events, GET /v1/health.
class IngestServer {
 public:
  explicit IngestServer(IngestService& service);
  ~IngestServer();
  IngestServer(const IngestServer&) = delete;
  IngestServer& operator=(const IngestServer&) = delete;

  /// Binds to service.config().bind_address; port 0 picks a free port.
  /// Returns false if the address cannot be bound.
  [[nodiscard]] bool bind();
  [[nodiscard]] int port() const noexcept { return port_; }
  [[nodiscard]] const std::string& host() const noexcept { return host_; }

  /// Blocks until stop() is called. Requires a successful bind().
  void listen();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  IngestService& service_;
  std::string host_;
  int port_ = 0;
};

/// Splits "host:port". Throws Error(InvalidArgument).
[[nodiscard]] std::pair<std::string, int> split_host_port(std::string_view address);

}  // namespace segtrack
