#include "segtrack/session_store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include "segtrack/error.hpp"
#include "segtrack/time_util.hpp"

namespace segtrack {
namespace {

[[noreturn]] void io_failure(const std::filesystem::path& path, const char* what) {
  throw Error(ErrorCode::IoFailure, path.string() + ": " + what + ": " + std::strerror(errno));
}

}  // namespace

LogFile::LogFile(std::filesystem::path path) : path_(std::move(path)) {
  fd_ = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd_ < 0) io_failure(path_, "open");
}

LogFile::~LogFile() {
  if (fd_ >= 0) ::close(fd_);
}

LogFile::LogFile(LogFile&& other) noexcept
    : path_(std::move(other.path_)), fd_(std::exchange(other.fd_, -1)), seq_(other.seq_) {}

LogFile& LogFile::operator=(LogFile&& other) noexcept {
  if (this != &other) {
    if (fd_ >= 0) ::close(fd_);
    path_ = std::move(other.path_);
    fd_ = std::exchange(other.fd_, -1);
    seq_ = other.seq_;
  }
  return *this;
}

std::uint64_t LogFile::append(const LogRecord& record) {
  return append_batch(std::span<const LogRecord>(&record, 1));
}

std::uint64_t LogFile::append_batch(std::span<const LogRecord> records) {
  if (records.empty()) return seq_;
  std::string buffer;
  for (const auto& record : records) {
    validate(record);
    buffer += serialize_record(record);
    buffer += '\n';
  }

  struct stat st {};
  if (::fstat(fd_, &st) != 0) io_failure(path_, "fstat");
  const off_t before = st.st_size;

  std::size_t written = 0;
  while (written < buffer.size()) {
    const ssize_t n = ::write(fd_, buffer.data() + written, buffer.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      const int saved = errno;
      [[maybe_unused]] const int rc = ::ftruncate(fd_, before);
      errno = saved;
      io_failure(path_, "write");
    }
    written += static_cast<std::size_t>(n);
  }
  if (::fdatasync(fd_) != 0) io_failure(path_, "fdatasync");
  seq_ += records.size();
  return seq_;
}

std::string log_file_name(std::int64_t epoch_ms) {
  return "events-" + utc_day_stamp(epoch_ms) + ".jsonl";
}

SessionStore::SessionStore(std::filesystem::path log_dir) : log_dir_(std::move(log_dir)) {
  std::error_code ec;
  std::filesystem::create_directories(log_dir_, ec);
  if (ec) throw Error(ErrorCode::IoFailure, log_dir_.string() + ": " + ec.message());
}

std::filesystem::path SessionStore::file_for(std::int64_t epoch_ms) const {
  return log_dir_ / log_file_name(epoch_ms);
}

std::uint64_t SessionStore::append_batch(std::span<const LogRecord> records, std::int64_t recv_ms) {
  std::lock_guard lock(mutex_);
  if (records.empty()) return seq_;
  const auto path = file_for(recv_ms);
  if (!file_ || file_->path() != path) file_.emplace(path);
  file_->append_batch(records);
  seq_ += records.size();
  return seq_;
}

void SessionStore::close() {
  std::lock_guard lock(mutex_);
  file_.reset();
}

RecordReadResult read_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in || std::filesystem::is_directory(path)) throw Error(ErrorCode::FileNotFound, path.string());
  RecordReadResult result;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      result.records.push_back(parse_record(line));
    } catch (const Error&) {
      ++result.skipped_lines;
    }
  }
  return result;
}

std::vector<SessionLog> group_sessions(const std::vector<LogRecord>& records,
                                       const SessionFilter& filter) {
  std::vector<SessionLog> sessions;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& record : records) {
    if (filter.session_id && record.session_id != *filter.session_id) continue;
    auto [it, inserted] = index.try_emplace(record.session_id, sessions.size());
    if (inserted) {
      SessionLog s;
      s.session_id = record.session_id;
      s.page_url = record.page_url;
      sessions.push_back(std::move(s));
    }
    auto& session = sessions[it->second];
    if (const auto* start = std::get_if<SessionStart>(&record.body)) {
      if (!session.en_ms) session.en_ms = start->en_ms;
    } else if (const auto* iv = std::get_if<IntervalBody>(&record.body)) {
      session.intervals.push_back(*iv);
    } else if (const auto* end = std::get_if<SessionEnd>(&record.body)) {
      session.ex_ms = end->ex_ms;
    }
  }
  for (auto& s : sessions) {
    std::stable_sort(s.intervals.begin(), s.intervals.end(),
                     [](const IntervalBody& a, const IntervalBody& b) { return a.en_ms < b.en_ms; });
  }
  if (filter.page_url) {
    std::erase_if(sessions, [&](const SessionLog& s) { return s.page_url != *filter.page_url; });
  }
  return sessions;
}

ReadResult read_sessions(const std::vector<std::filesystem::path>& paths,
                         const SessionFilter& filter) {
  std::vector<LogRecord> records;
  ReadResult result;
  for (const auto& path : paths) {
    auto file = read_records(path);
    result.skipped_lines += file.skipped_lines;
    records.insert(records.end(), std::make_move_iterator(file.records.begin()),
                   std::make_move_iterator(file.records.end()));
  }
  result.sessions = group_sessions(records, filter);
  return result;
}

}  // namespace segtrack
