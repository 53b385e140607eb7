#pragma once

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segtrack/records.hpp"

namespace segtrack {

/// Append-only JSON Lines file. Every append is written with a single
/// write() and synced before returning; a failed batch is truncated away so
/// the file never holds part of one.
class LogFile {
 public:
  explicit LogFile(std::filesystem::path path);
  ~LogFile();
  LogFile(const LogFile&) = delete;
  LogFile& operator=(const LogFile&) = delete;
  LogFile(LogFile&& other) noexcept;
  LogFile& operator=(LogFile&& other) noexcept;

  /// Returns the record's sequence number (1 for the first append through
  /// this writer). Throws Error(IoFailure).
  std::uint64_t append(const LogRecord& record);

  /// Appends all records or none. Returns the last sequence number issued
  /// (unchanged if `records` is empty).
  std::uint64_t append_batch(std::span<const LogRecord> records);

  [[nodiscard]] const std::filesystem::path& path() const noexcept { return path_; }
  [[nodiscard]] std::uint64_t last_sequence() const noexcept { return seq_; }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
  std::uint64_t seq_ = 0;
};

/// Directory of day-rotated log files (events-YYYYMMDD.jsonl, UTC). Appends
/// are serialized, so the records of one batch are contiguous.
class SessionStore {
 public:
  explicit SessionStore(std::filesystem::path log_dir);

  /// All records land in the file for `recv_ms`'s UTC day.
  std::uint64_t append_batch(std::span<const LogRecord> records, std::int64_t recv_ms);

  [[nodiscard]] std::filesystem::path file_for(std::int64_t epoch_ms) const;
  [[nodiscard]] const std::filesystem::path& log_dir() const noexcept { return log_dir_; }

  void close();

 private:
  std::filesystem::path log_dir_;
  std::mutex mutex_;
  std::optional<LogFile> file_;
  std::uint64_t seq_ = 0;
};

[[nodiscard]] std::string log_file_name(std::int64_t epoch_ms);

/// One user session assembled from the log.
struct SessionLog {
  std::string session_id;
  std::string page_url;
  std::optional<std::int64_t> en_ms;
  std::optional<std::int64_t> ex_ms;
  std::vector<IntervalBody> intervals;  // sorted by en_ms

  bool operator==(const SessionLog&) const = default;
};

struct SessionFilter {
  std::optional<std::string> session_id;
  std::optional<std::string> page_url;
};

struct ReadResult {
  std::vector<SessionLog> sessions;  // ordered by first appearance
  std::size_t skipped_lines = 0;
};

struct RecordReadResult {
  std::vector<LogRecord> records;
  std::size_t skipped_lines = 0;
};

/// All parseable records of one file, in file order. Throws FileNotFound.
[[nodiscard]] RecordReadResult read_records(const std::filesystem::path& path);

/// Groups records by session_id across `paths` (read in the given order).
[[nodiscard]] ReadResult read_sessions(const std::vector<std::filesystem::path>& paths,
                                       const SessionFilter& filter = {});

[[nodiscard]] std::vector<SessionLog> group_sessions(const std::vector<LogRecord>& records,
                                                     const SessionFilter& filter = {});

}  // namespace segtrack
