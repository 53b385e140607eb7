// segtrack: segment-level web usage mining from the command line.
//
//   segtrack instrument page.html --out page.seg.html --manifest page.manifest.json
//   segtrack serve --addr 127.0.0.1:8423 --log-dir logs/
//   segtrack simulate --scenario data/table1.csv --out sessions.jsonl
//   segtrack analyze --log sessions.jsonl --sigma 0 --format chart
//
// Exit codes: 0 success, 2 usage or segmentation error, 3 I/O, 4 sink unreachable.

#include <pthread.h>
#include <unistd.h>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "segtrack/analyzer.hpp"
#include "segtrack/error.hpp"
#include "segtrack/ingest.hpp"
#include "segtrack/report.hpp"
#include "segtrack/segmenter.hpp"
#include "segtrack/session_store.hpp"
#include "segtrack/simulator.hpp"

namespace {

using namespace segtrack;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitSink = 4;

struct GlobalOptions {
  int verbosity = 1;
  std::string color = "auto";
};

GlobalOptions g_options;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::FileNotFound:
    case ErrorCode::IoFailure:
      return kExitIo;
    case ErrorCode::SinkUnreachable:
    case ErrorCode::SinkRejected:
      return kExitSink;
    default:
      return kExitUsage;
  }
}

bool use_color() {
  if (g_options.color == "always") return true;
  if (g_options.color == "never") return false;
  return ::isatty(STDERR_FILENO) != 0;
}

void report_error(const std::string& message) {
  if (use_color()) {
    std::cerr << "\033[31merror:\033[0m " << message << "\n";
  } else {
    std::cerr << "error: " << message << "\n";
  }
}

void info(const std::string& message) {
  if (g_options.verbosity >= 1) std::cerr << message << "\n";
}

void debug(const std::string& message) {
  if (g_options.verbosity >= 2) std::cerr << message << "\n";
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in || std::filesystem::is_directory(path)) throw Error(ErrorCode::FileNotFound, path);
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
}

// ---- instrument -------------------------------------------------------------

struct InstrumentOptions {
  std::string input;
  std::string out;
  std::string manifest;
  std::string endpoint = "http://localhost:8423/v1/events";
  std::string page_url;
  std::size_t min_text_len = SegmenterConfig{}.min_text_len;
  std::size_t max_segments = SegmenterConfig{}.max_segments;
  std::vector<std::string> block_tags;
};

int cmd_instrument(const InstrumentOptions& opt) {
  const std::string html = read_file(opt.input);
  SegmenterConfig config;
  config.min_text_len = opt.min_text_len;
  config.max_segments = opt.max_segments;
  if (!opt.block_tags.empty()) config.block_tags = opt.block_tags;

  const std::string page_url =
      opt.page_url.empty() ? std::filesystem::path(opt.input).filename().string() : opt.page_url;
  auto result = segment_page(html, config, page_url);
  const std::string instrumented = instrument(result.annotated_html, result.manifest, opt.endpoint);
  write_file(opt.out, instrumented);
  write_file(opt.manifest, manifest_to_json(result.manifest));
  info(std::to_string(result.manifest.segments.size()) + " segments -> " + opt.out + ", " +
       opt.manifest);
  for (const auto& seg : result.manifest.segments)
    debug("  " + std::to_string(seg.id) + " " + seg.dom_path + " <" + seg.element_kind + "> " + seg.label);
  return kExitOk;
}

// ---- serve ------------------------------------------------------------------

int cmd_serve(const IngestConfig& config) {
  // Route SIGINT/SIGTERM to a dedicated thread; every thread started below
  // inherits the blocked mask.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGUSR1);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  IngestService service(config);
  IngestServer server(service);
  if (!server.bind()) {
    report_error("cannot bind " + config.bind_address);
    return kExitIo;
  }

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    if (sig != SIGUSR1) debug("signal " + std::to_string(sig) + ", shutting down");
    server.stop();
  });

  std::cout << "segtrack: listening on http://" << server.host() << ":" << server.port()
            << " log_dir=" << config.log_dir.string() << std::endl;
  server.listen();

  pthread_kill(waiter.native_handle(), SIGUSR1);
  waiter.join();
  service.store().close();
  info("stopped; " + std::to_string(service.records_appended()) + " records appended");
  return kExitOk;
}

// ---- analyze ----------------------------------------------------------------

struct AnalyzeOptions {
  std::vector<std::string> logs;
  double sigma = 1.0;
  std::string session;
  std::string page;
  std::string format = "csv";
  bool cross_user = false;
  std::string manifest;
};

int cmd_analyze(const AnalyzeOptions& opt) {
  const Threshold threshold(opt.sigma);
  const ReportFormat format = parse_report_format(opt.format);

  SessionFilter filter;
  if (!opt.session.empty()) filter.session_id = opt.session;
  if (!opt.page.empty()) filter.page_url = opt.page;

  std::vector<std::filesystem::path> paths(opt.logs.begin(), opt.logs.end());
  const ReadResult read = read_sessions(paths, filter);
  if (read.skipped_lines > 0)
    info("warning: skipped " + std::to_string(read.skipped_lines) + " unparseable log lines");

  if (!opt.manifest.empty()) {
    const auto manifest = manifest_from_json(read_file(opt.manifest));
    const auto unknown = unknown_segments(read.sessions, manifest);
    if (!unknown.empty()) {
      std::string ids;
      for (auto id : unknown) ids += (ids.empty() ? "" : ", ") + std::to_string(id);
      info("warning: " + std::to_string(unknown.size()) + " segment ids not in manifest: " + ids);
    }
  }

  if (opt.cross_user) {
    std::cout << render_summary(cross_user_summary(read.sessions, threshold), format);
    return kExitOk;
  }

  std::vector<RankedReport> reports;
  for (const auto& session : read.sessions) reports.push_back(analyze_session(session, threshold));
  if (reports.empty()) {
    info("warning: no sessions matched");
    RankedReport empty;
    empty.session_id = opt.session;
    empty.sigma_seconds = threshold.sigma_seconds();
    reports.push_back(std::move(empty));
  }
  std::cout << render_reports(reports, format);
  return kExitOk;
}

// ---- simulate ---------------------------------------------------------------

struct SimulateOptions {
  std::string scenario;
  std::string out;
  std::string endpoint;
  std::string page_url;
  std::size_t max_intervals = IngestConfig{}.max_intervals_per_batch;
};

int cmd_simulate(const SimulateOptions& opt) {
  const Scenario scenario = load_scenario(opt.scenario, opt.page_url);
  const ReplaySummary summary = opt.out.empty()
                                    ? replay_to_endpoint(scenario, opt.endpoint, opt.max_intervals)
                                    : replay_to_file(scenario, opt.out);
  info("replayed " + std::to_string(summary.sessions) + " sessions, " +
       std::to_string(summary.intervals) + " intervals, " + std::to_string(summary.records) +
       " records, " + std::to_string(summary.bytes) + " bytes -> " +
       (opt.out.empty() ? opt.endpoint : opt.out));
  return kExitOk;
}

std::string default_log_dir() {
  if (const char* env = std::getenv("SEGTRACK_LOG_DIR"); env != nullptr && *env != '\0') return env;
  return "segtrack-logs";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Segment-level web usage mining: segment pages, collect dwell, rank segments.",
               "segtrack"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "segtrack 1.0.0");

  int verbose_count = 0;
  bool quiet = false;
  app.add_flag("-v,--verbose", verbose_count, "More diagnostics on stderr");
  app.add_flag("-q,--quiet", quiet, "Only errors on stderr");
  app.add_option("--color", g_options.color, "Colored diagnostics")
      ->check(CLI::IsMember({"auto", "always", "never"}))
      ->capture_default_str();

  std::function<int()> action;

  InstrumentOptions inst;
  auto* instrument_cmd = app.add_subcommand("instrument", "Segment a page and inject tracking hooks");
  instrument_cmd->add_option("input", inst.input, "HTML page")->required();
  instrument_cmd->add_option("--out", inst.out, "Instrumented HTML output")->required();
  instrument_cmd->add_option("--manifest", inst.manifest, "Manifest JSON output")->required();
  instrument_cmd->add_option("--endpoint", inst.endpoint, "Event ingestion URL")->capture_default_str();
  instrument_cmd->add_option("--page-url", inst.page_url, "Page URL recorded in the manifest");
  instrument_cmd->add_option("--min-text-len", inst.min_text_len, "Minimum segment text length")
      ->capture_default_str();
  instrument_cmd->add_option("--max-segments", inst.max_segments, "Segment limit")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  instrument_cmd->add_option("--block-tags", inst.block_tags, "Block-level tags eligible as segments")
      ->delimiter(',');
  instrument_cmd->callback([&] { action = [&] { return cmd_instrument(inst); }; });

  IngestConfig serve;
  serve.log_dir = default_log_dir();
  std::string log_dir = serve.log_dir.string();
  auto* serve_cmd = app.add_subcommand("serve", "Run the event ingestion service");
  serve_cmd->add_option("--addr", serve.bind_address, "host:port to listen on")->capture_default_str();
  serve_cmd->add_option("--log-dir", log_dir, "Session log directory (env SEGTRACK_LOG_DIR)")
      ->capture_default_str();
  serve_cmd->add_option("--max-batch-bytes", serve.max_batch_bytes, "Largest accepted request body")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve_cmd->add_option("--max-intervals", serve.max_intervals_per_batch, "Most intervals per batch")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  serve_cmd->add_option("--token", serve.auth_token, "Require this X-Segtrack-Token header");
  serve_cmd->callback([&] {
    serve.log_dir = log_dir;
    action = [&] { return cmd_serve(serve); };
  });

  AnalyzeOptions an;
  auto* analyze_cmd = app.add_subcommand("analyze", "Rank segments by dwell time");
  analyze_cmd->add_option("--log", an.logs, "Session log file(s)")->required()->expected(1, -1);
  analyze_cmd->add_option("--sigma", an.sigma, "Dwell threshold in seconds (strict >)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  analyze_cmd->add_option("--session", an.session, "Only this session id");
  analyze_cmd->add_option("--page", an.page, "Only sessions on this page URL");
  analyze_cmd->add_option("--format", an.format, "Output format")
      ->check(CLI::IsMember({"json", "csv", "chart", "svg"}))
      ->capture_default_str();
  analyze_cmd->add_flag("--cross-user", an.cross_user, "Totals across all sessions");
  analyze_cmd->add_option("--manifest", an.manifest, "Manifest used to flag unknown segment ids");
  analyze_cmd->callback([&] { action = [&] { return cmd_analyze(an); }; });

  SimulateOptions sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Replay a scenario table as sessions");
  simulate_cmd->add_option("--scenario", sim.scenario, "Scenario CSV")->required();
  auto* out_opt = simulate_cmd->add_option("--out", sim.out, "Store file to append to");
  auto* endpoint_opt = simulate_cmd->add_option("--endpoint", sim.endpoint, "Ingestion URL to POST to");
  out_opt->excludes(endpoint_opt);
  simulate_cmd->add_option("--page-url", sim.page_url, "Page URL for the sessions");
  simulate_cmd->add_option("--max-intervals", sim.max_intervals, "Most intervals per request")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate_cmd->callback([&] {
    if (sim.out.empty() && sim.endpoint.empty())
      throw CLI::ValidationError("simulate", "one of --out or --endpoint is required");
    action = [&] { return cmd_simulate(sim); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }
  g_options.verbosity = quiet ? 0 : std::min(1 + verbose_count, 2);

  try {
    return action();
  } catch (const Error& e) {
    report_error(e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    report_error(e.what());
    return kExitIo;
  }
}
