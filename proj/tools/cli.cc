#include "cli.h"

#include <algorithm>
#include <csignal>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <stop_token>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <glog/logging.h>
#include <nlohmann/json.hpp>

#include "netmeter/clock.h"
#include "netmeter/config.h"
#include "netmeter/error.h"
#include "netmeter/recorder.h"
#include "netmeter/sim.h"

namespace netmeter::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

const char* const kExitCodeFooter =
    "Exit codes: 0 ok, 1 runtime failure, 2 data error, 3 empty analysis, "
    "64 usage error.";

struct Flags {
  std::string config;
  int verbose = 0;
  int quiet = 0;

  std::string listen;
  int inject_delay_ms = 0;
  std::string server;
  double rate_hz = 0.0;
  double timeout_ms = 0.0;
  std::size_t payload = 0;
  std::uint64_t count = 0;
  double run_seconds = 0.0;
  std::string side;
  std::string iface;
  std::string stats_root;
  double rssi_rate_hz = 0.0;
  double generic_rate_hz = 0.0;

  std::vector<std::string> cases;
  bool all_cases = false;
  std::string trajectory;
  double sim_duration_s = 0.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string outdir;

  std::vector<std::string> traces;
  std::string motion;
  std::string static_intervals;
  bool lenient = false;
  std::string emit;
};

struct Cli {
  std::unique_ptr<CLI::App> app;
  Flags f;
  CLI::App* probe = nullptr;
  CLI::App* serve = nullptr;
  CLI::App* client = nullptr;
  CLI::App* record = nullptr;
  CLI::App* simulate = nullptr;
  CLI::App* suite = nullptr;
  CLI::App* analyze = nullptr;
};

const std::vector<std::string> kEmitChoices = {"table", "csv", "json"};

void AddProbeTuning(CLI::App* sub, Flags& f) {
  sub->add_option("--rate", f.rate_hz, "Probe rate in Hz (default 1)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--timeout-ms", f.timeout_ms,
                  "Probe reply timeout in ms (default 2000)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--payload", f.payload,
                  "Probe payload length in bytes (default 64)")
      ->check(CLI::Range(std::size_t{0}, kMaxPayloadBytes));
}

std::unique_ptr<Cli> BuildCli() {
  auto cli = std::make_unique<Cli>();
  Flags& f = cli->f;
  cli->app = std::make_unique<CLI::App>(
      "Wireless link measurement, simulation and analysis.", "netmeter");
  CLI::App& app = *cli->app;
  app.footer(kExitCodeFooter);
  app.require_subcommand(0, 1);
  app.add_option("--config", f.config, "JSON configuration file");
  app.add_flag("-v,--verbose", f.verbose, "More log output (repeatable)");
  app.add_flag("-q,--quiet", f.quiet, "Only log errors");

  cli->probe = app.add_subcommand("probe", "UDP round-trip delay probe");
  cli->probe->require_subcommand(1);

  cli->serve = cli->probe->add_subcommand("serve", "Run the echo server");
  cli->serve->add_option("--listen", f.listen,
                         "Listen address host:port (default 0.0.0.0:7447)");
  cli->serve->add_option("--inject-delay-ms", f.inject_delay_ms,
                         "Hold every reply for this long (testing aid)")
      ->check(CLI::NonNegativeNumber);
  cli->serve->add_option("--duration", f.run_seconds,
                         "Stop after this many seconds")
      ->check(CLI::PositiveNumber);

  cli->client = cli->probe->add_subcommand("client", "Measure RTT to a server");
  cli->client->add_option("--server", f.server, "Server address host:port");
  AddProbeTuning(cli->client, f);
  cli->client->add_option("--count", f.count, "Stop after this many samples")
      ->check(CLI::PositiveNumber);
  cli->client->add_option("--duration", f.run_seconds,
                          "Stop after this many seconds")
      ->check(CLI::PositiveNumber);
  cli->client->add_option("--case", f.cases, "Catalog case id for the header")
      ->expected(1);
  cli->client->add_option("--side", f.side, "Recording side")
      ->check(CLI::IsMember({"robot", "station"}));
  cli->client->add_option("--out", f.out, "Trace output path");

  cli->record = app.add_subcommand(
      "record", "Sample interface statistics (and optionally RTT) to a trace");
  cli->record->add_option("--case", f.cases, "Catalog case id (1-10)")
      ->expected(1);
  cli->record->add_option("--out", f.out, "Trace output path");
  cli->record->add_option("--side", f.side, "Side this host plays")
      ->check(CLI::IsMember({"robot", "station"}));
  cli->record->add_option("--iface", f.iface,
                          "OS interface name (default: the case's interface)");
  cli->record->add_option("--stats-root", f.stats_root,
                          "Root containing proc/net (default /)");
  cli->record->add_option("--rssi-rate", f.rssi_rate_hz,
                          "RSSI sampling rate in Hz (default 10)")
      ->check(CLI::PositiveNumber);
  cli->record->add_option("--generic-rate", f.generic_rate_hz,
                          "Counter sampling rate in Hz (default 1)")
      ->check(CLI::PositiveNumber);
  cli->record->add_option("--server", f.server,
                          "Also probe RTT against this server (host:port)");
  AddProbeTuning(cli->record, f);
  cli->record->add_option("--duration", f.run_seconds,
                          "Stop after this many seconds")
      ->check(CLI::PositiveNumber);

  cli->simulate =
      app.add_subcommand("simulate", "Generate a synthetic trace for one case");
  cli->simulate->add_option("--case", f.cases,
                            "Catalog case id (1-10) or preset JSON file")
      ->expected(1);
  cli->simulate->add_option("--trajectory", f.trajectory,
                            "Trajectory file (default: built-in loop)");
  cli->simulate->add_option("--duration", f.sim_duration_s,
                            "Simulated seconds (default 300)")
      ->check(CLI::PositiveNumber);
  cli->simulate->add_option("--seed", f.seed, "RNG seed (default 42)");
  cli->simulate->add_option("--out", f.out, "Trace output path");

  cli->suite = app.add_subcommand(
      "suite", "Simulate and compare several cases");
  cli->suite->add_flag("--all-cases", f.all_cases, "Run all ten catalog cases");
  cli->suite->add_option("--case", f.cases,
                         "Case id or preset file (repeatable)");
  cli->suite->add_option("--trajectory", f.trajectory,
                         "Trajectory file (default: built-in loop)");
  cli->suite->add_option("--duration", f.sim_duration_s,
                         "Simulated seconds per case (default 300)")
      ->check(CLI::PositiveNumber);
  cli->suite->add_option("--seed", f.seed, "Base RNG seed (default 42)");
  cli->suite->add_option("--outdir", f.outdir, "Directory for trace files");
  cli->suite->add_option("--emit", f.emit, "Comparison output format")
      ->check(CLI::IsMember(kEmitChoices));

  cli->analyze = app.add_subcommand("analyze", "Summarize and compare traces");
  cli->analyze->add_option("traces", f.traces, "Trace files");
  cli->analyze->add_option("--motion", f.motion, "Motion filter")
      ->check(CLI::IsMember({"all", "static", "moving"}));
  cli->analyze->add_option("--static-intervals", f.static_intervals,
                           "File of 'start_s end_s' static intervals");
  cli->analyze->add_flag("--lenient", f.lenient,
                         "Skip corrupt lines instead of failing");
  cli->analyze->add_option("--emit", f.emit, "Output format")
      ->check(CLI::IsMember(kEmitChoices));
  return cli;
}

CLI::App* FindSubcommand(Cli& cli, const std::vector<std::string>& path) {
  CLI::App* app = cli.app.get();
  for (const auto& name : path) {
    app = app->get_subcommand(name);
  }
  return app;
}

bool Given(const CLI::App* sub, const std::string& name) {
  const CLI::Option* opt = sub->get_option_no_throw(name);
  return opt != nullptr && opt->count() > 0;
}

Error Usage(std::string_view flag, std::string_view message) {
  return Error(Errc::kUsage, fmt::format("{}: {}", flag, message));
}

void RequireReadableFile(std::string_view flag, const fs::path& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) {
    throw Usage(flag, fmt::format("'{}' is not a readable file", path.string()));
  }
  std::ifstream in(path);
  if (!in) {
    throw Usage(flag, fmt::format("'{}' cannot be opened", path.string()));
  }
}

void RequireOutputParent(std::string_view flag, const fs::path& path) {
  const fs::path parent =
      path.has_parent_path() ? path.parent_path() : fs::path(".");
  std::error_code ec;
  if (!fs::is_directory(parent, ec)) {
    throw Usage(flag, fmt::format("directory '{}' does not exist",
                                  parent.string()));
  }
  if (fs::is_directory(path, ec)) {
    throw Usage(flag, fmt::format("'{}' is a directory", path.string()));
  }
}

Endpoint ParseEndpointFlag(std::string_view flag, const std::string& text) {
  try {
    return ParseEndpoint(text);
  } catch (const Error& e) {
    throw Usage(flag, e.message());
  }
}

// Config document layout:
//   {"verbosity": int,
//    "collector": {"iface", "side", "rssi_rate_hz", "generic_rate_hz",
//                  "stats_source_root"},
//    "probe": {"server", "listen", "rate_hz", "timeout_ms", "payload_len"},
//    "channel": {...},
//    "simulation": {"trajectory", "duration_s", "seed"},
//    "output": {"out", "outdir"}}
void ApplyConfigFile(const fs::path& path, AppConfig& cfg) {
  RequireReadableFile("--config", path);
  json doc;
  try {
    doc = json::parse(ReadTextFile(path));
  } catch (const json::parse_error& e) {
    throw Usage("--config", e.what());
  }
  if (!doc.is_object()) throw Usage("--config", "top level must be an object");
  try {
    if (doc.contains("verbosity")) cfg.verbosity = doc["verbosity"].get<int>();
    if (const auto it = doc.find("collector"); it != doc.end()) {
      const json& c = *it;
      if (c.contains("iface")) cfg.collector.iface = c["iface"].get<std::string>();
      if (c.contains("side")) {
        cfg.collector.side = ParseSide(c["side"].get<std::string>());
      }
      if (c.contains("rssi_rate_hz")) {
        cfg.collector.rssi_rate_hz = c["rssi_rate_hz"].get<double>();
      }
      if (c.contains("generic_rate_hz")) {
        cfg.collector.generic_rate_hz = c["generic_rate_hz"].get<double>();
      }
      if (c.contains("stats_source_root")) {
        cfg.collector.stats_source_root =
            c["stats_source_root"].get<std::string>();
      }
    }
    if (const auto it = doc.find("probe"); it != doc.end()) {
      const json& p = *it;
      if (p.contains("server")) {
        cfg.probe_server = ParseEndpoint(p["server"].get<std::string>());
      }
      if (p.contains("listen")) {
        cfg.listen = ParseEndpoint(p["listen"].get<std::string>());
      }
      if (p.contains("rate_hz")) cfg.probe.rate_hz = p["rate_hz"].get<double>();
      if (p.contains("timeout_ms")) {
        cfg.probe.timeout_ms = p["timeout_ms"].get<double>();
      }
      if (p.contains("payload_len")) {
        cfg.probe.payload_len = p["payload_len"].get<std::size_t>();
      }
    }
    if (doc.contains("channel")) {
      cfg.channel_override = ParseChannelConfig(doc.dump());
    }
    if (const auto it = doc.find("simulation"); it != doc.end()) {
      const json& s = *it;
      if (s.contains("trajectory")) {
        cfg.trajectory = s["trajectory"].get<std::string>();
      }
      if (s.contains("duration_s")) {
        cfg.sim_duration_s = s["duration_s"].get<double>();
      }
      if (s.contains("seed")) cfg.seed = s["seed"].get<std::uint64_t>();
    }
    if (const auto it = doc.find("output"); it != doc.end()) {
      if (it->contains("out")) cfg.out = (*it)["out"].get<std::string>();
      if (it->contains("outdir")) {
        cfg.outdir = (*it)["outdir"].get<std::string>();
      }
    }
  } catch (const json::exception& e) {
    throw Usage("--config", e.what());
  } catch (const Error& e) {
    throw Usage("--config", e.message());
  }
}

void ApplyFlags(const CLI::App* sub, const Flags& f, AppConfig& cfg) {
  if (Given(sub, "--listen")) cfg.listen = ParseEndpointFlag("--listen", f.listen);
  if (Given(sub, "--inject-delay-ms")) cfg.inject_delay_ms = f.inject_delay_ms;
  if (Given(sub, "--server")) {
    cfg.probe_server = ParseEndpointFlag("--server", f.server);
  }
  if (Given(sub, "--rate")) cfg.probe.rate_hz = f.rate_hz;
  if (Given(sub, "--timeout-ms")) cfg.probe.timeout_ms = f.timeout_ms;
  if (Given(sub, "--payload")) cfg.probe.payload_len = f.payload;
  if (Given(sub, "--count")) cfg.count = f.count;
  if (Given(sub, "--side")) {
    cfg.collector.side = ParseSide(f.side);
    cfg.probe.side = cfg.collector.side;
  }
  if (Given(sub, "--iface")) cfg.collector.iface = f.iface;
  if (Given(sub, "--stats-root")) cfg.collector.stats_source_root = f.stats_root;
  if (Given(sub, "--rssi-rate")) cfg.collector.rssi_rate_hz = f.rssi_rate_hz;
  if (Given(sub, "--generic-rate")) {
    cfg.collector.generic_rate_hz = f.generic_rate_hz;
  }
  if (Given(sub, "--case")) cfg.case_specs = f.cases;
  if (Given(sub, "--all-cases")) cfg.all_cases = f.all_cases;
  if (Given(sub, "--trajectory")) cfg.trajectory = f.trajectory;
  if (Given(sub, "--seed")) cfg.seed = f.seed;
  if (Given(sub, "--out")) cfg.out = f.out;
  if (Given(sub, "--outdir")) cfg.outdir = f.outdir;
  if (Given(sub, "traces")) {
    cfg.traces.assign(f.traces.begin(), f.traces.end());
  }
  if (Given(sub, "--motion")) cfg.motion = ParseMotionMode(f.motion);
  if (Given(sub, "--static-intervals")) cfg.static_intervals = f.static_intervals;
  if (Given(sub, "--lenient")) cfg.lenient = true;
  if (Given(sub, "--emit")) {
    cfg.emit = f.emit == "csv"    ? Emit::kCsv
               : f.emit == "json" ? Emit::kJson
                                  : Emit::kTable;
  }
  // --duration means wall-clock seconds for live commands and simulated
  // seconds for simulate/suite.
  if (Given(sub, "--duration")) {
    if (sub->get_name() == "simulate" || sub->get_name() == "suite") {
      cfg.sim_duration_s = f.sim_duration_s;
    } else {
      cfg.run_seconds = f.run_seconds;
    }
  }
}

std::optional<int> ParseCaseId(const std::string& spec) {
  if (spec.empty() || spec.size() > 3 ||
      !std::all_of(spec.begin(), spec.end(),
                   [](char c) { return c >= '0' && c <= '9'; })) {
    return std::nullopt;
  }
  return std::stoi(spec);
}

void CheckCaseSpec(const std::string& spec, bool allow_file) {
  if (const auto id = ParseCaseId(spec)) {
    if (*id < 1 || *id > 10) {
      throw Usage("--case", fmt::format("case {} is not in 1..10", *id));
    }
    return;
  }
  if (!allow_file) {
    throw Usage("--case", fmt::format("'{}' is not a case id (1-10)", spec));
  }
  RequireReadableFile("--case", spec);
}

void ValidateCommand(Command command, AppConfig& cfg) {
  auto wrap = [](std::string_view flag, auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      if (e.code() == Errc::kUsage) throw;
      throw Usage(flag, e.message());
    }
  };
  switch (command) {
    case Command::kProbeServe:
      break;
    case Command::kProbeClient:
      if (!cfg.probe_server) throw Usage("--server", "is required");
      if (!cfg.out) throw Usage("--out", "is required");
      RequireOutputParent("--out", *cfg.out);
      for (const auto& c : cfg.case_specs) CheckCaseSpec(c, false);
      cfg.probe.server = *cfg.probe_server;
      wrap("--rate", [&] { ValidateProbeConfig(cfg.probe); });
      break;
    case Command::kRecord: {
      if (cfg.case_specs.empty()) throw Usage("--case", "is required");
      CheckCaseSpec(cfg.case_specs.front(), false);
      if (!cfg.out) throw Usage("--out", "is required");
      RequireOutputParent("--out", *cfg.out);
      std::error_code ec;
      if (!fs::is_directory(cfg.collector.stats_source_root, ec)) {
        throw Usage("--stats-root",
                    fmt::format("'{}' is not a directory",
                                cfg.collector.stats_source_root.string()));
      }
      if (cfg.collector.iface.empty()) {
        const ExperimentCase c = CatalogCase(*ParseCaseId(cfg.case_specs[0]));
        cfg.collector.iface = cfg.collector.side == Side::kRobot
                                  ? c.robot_iface
                                  : c.station_iface;
      }
      wrap("--rssi-rate", [&] { ValidateCollectorConfig(cfg.collector); });
      if (cfg.probe_server) {
        cfg.probe.server = *cfg.probe_server;
        cfg.probe.side = cfg.collector.side;
        cfg.probe.iface = cfg.collector.iface;
        wrap("--rate", [&] { ValidateProbeConfig(cfg.probe); });
      }
      break;
    }
    case Command::kSimulate:
      if (cfg.case_specs.empty()) throw Usage("--case", "is required");
      CheckCaseSpec(cfg.case_specs.front(), true);
      if (!cfg.out) throw Usage("--out", "is required");
      RequireOutputParent("--out", *cfg.out);
      if (cfg.trajectory) RequireReadableFile("--trajectory", *cfg.trajectory);
      break;
    case Command::kSuite:
      if (!cfg.all_cases && cfg.case_specs.empty()) {
        throw Usage("--all-cases", "give --all-cases or at least one --case");
      }
      for (const auto& c : cfg.case_specs) CheckCaseSpec(c, true);
      if (!cfg.outdir) throw Usage("--outdir", "is required");
      if (cfg.trajectory) RequireReadableFile("--trajectory", *cfg.trajectory);
      break;
    case Command::kAnalyze:
      if (cfg.traces.empty()) throw Usage("traces", "at least one trace file");
      for (const auto& t : cfg.traces) RequireReadableFile("traces", t);
      if (cfg.static_intervals) {
        RequireReadableFile("--static-intervals", *cfg.static_intervals);
      }
      break;
    case Command::kNone:
      break;
  }
  if (command == Command::kSimulate || command == Command::kSuite) {
    if (!(cfg.sim_duration_s > 0.0)) throw Usage("--duration", "must be > 0");
  }
}

// Requests stop on SIGINT/SIGTERM or after an optional deadline.
class StopTrigger {
 public:
  explicit StopTrigger(std::optional<double> seconds) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, &old_mask_);
    const auto deadline =
        seconds ? std::optional(std::chrono::steady_clock::now() +
                                std::chrono::duration_cast<
                                    std::chrono::steady_clock::duration>(
                                    std::chrono::duration<double>(*seconds)))
                : std::nullopt;
    waiter_ = std::jthread([this, set, deadline](std::stop_token own) {
      const timespec poll{0, 50'000'000};
      while (!own.stop_requested() && !source_.stop_requested()) {
        if (sigtimedwait(&set, nullptr, &poll) > 0) {
          LOG(INFO) << "signal received, stopping";
          source_.request_stop();
        }
        if (deadline && std::chrono::steady_clock::now() >= *deadline) {
          source_.request_stop();
        }
      }
    });
  }

  ~StopTrigger() {
    waiter_.request_stop();
    waiter_.join();
    pthread_sigmask(SIG_SETMASK, &old_mask_, nullptr);
  }

  std::stop_token token() const { return source_.get_token(); }
  void Stop() { source_.request_stop(); }

 private:
  std::stop_source source_;
  sigset_t old_mask_;
  std::jthread waiter_;
};

ExperimentCase HeaderCase(const AppConfig& cfg) {
  if (!cfg.case_specs.empty()) {
    return CatalogCase(*ParseCaseId(cfg.case_specs.front()));
  }
  ExperimentCase c;
  c.topology = Topology::kRouter;
  c.ap_side = ApSide::kRouter;
  c.robot_iface = cfg.probe.side == Side::kRobot ? cfg.probe.iface : "peer";
  c.station_iface = cfg.probe.side == Side::kStation ? cfg.probe.iface : "peer";
  return c;
}

CasePreset ResolvePreset(const std::string& spec, const AppConfig& cfg) {
  CasePreset preset =
      ParseCaseId(spec) ? PresetCase(*ParseCaseId(spec)) : LoadPreset(spec);
  if (cfg.channel_override) preset.channel = *cfg.channel_override;
  return preset;
}

Trajectory ResolveTrajectory(const AppConfig& cfg) {
  return cfg.trajectory ? LoadTrajectory(*cfg.trajectory) : DefaultTrajectory();
}

std::string Render(const ComparisonTable& table, Emit emit) {
  switch (emit) {
    case Emit::kCsv:
      return RenderCsv(table);
    case Emit::kJson:
      return RenderJson(table);
    case Emit::kTable:
      break;
  }
  return RenderTable(table);
}

int RunProbeServe(const AppConfig& cfg, std::ostream& out) {
  ServerOptions options;
  options.listen = cfg.listen;
  options.inject_delay = std::chrono::milliseconds(cfg.inject_delay_ms);
  ProbeServer server(options);
  out << fmt::format("listening on {}:{}\n", cfg.listen.host, server.port())
      << std::flush;
  StopTrigger trigger(cfg.run_seconds);
  server.Serve(trigger.token());
  out << fmt::format("pongs sent: {}, invalid frames: {}\n",
                     server.pongs_sent(), server.invalid_frames());
  return kExitOk;
}

int RunProbeClient(const AppConfig& cfg, std::ostream& out) {
  ProbeClient client(cfg.probe);
  TraceWriter writer(*cfg.out);
  writer.WriteHeader({HeaderCase(cfg), NowRfc3339(), Origin::kMeasured, {}});
  SteadyClock clock;
  StopTrigger trigger(cfg.run_seconds);
  const ProbeClientStats stats =
      client.Run(writer.AsSink(), clock, trigger.token(), cfg.count);
  out << fmt::format("sent {}, replies {}, timeouts {}, stale {}\n", stats.sent,
                     stats.replies, stats.timeouts, stats.stale);
  return kExitOk;
}

int RunRecord(const AppConfig& cfg, std::ostream& out) {
  {
    FilesystemStatsSource probe_source(cfg.collector.stats_source_root,
                                       cfg.collector.paths);
    if (!probe_source.ReadDevice()) {
      throw Error(Errc::kSourceUnreadable,
                  fmt::format("cannot read device statistics under '{}'",
                              cfg.collector.stats_source_root.string()));
    }
  }
  std::optional<ProbeClient> client;
  if (cfg.probe_server) client.emplace(cfg.probe);

  TraceWriter writer(*cfg.out);
  writer.WriteHeader({HeaderCase(cfg), NowRfc3339(), Origin::kMeasured, {}});
  const SampleSink sink = writer.AsSink();
  SteadyClock clock;
  StopTrigger trigger(cfg.run_seconds);

  std::mutex mu;
  std::exception_ptr failure;
  auto guarded = [&](auto&& fn) {
    try {
      fn();
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
      trigger.Stop();
    }
  };
  CollectorStats cstats;
  ProbeClientStats pstats;
  {
    std::jthread collector([&] {
      guarded([&] {
        cstats = RunCollector(cfg.collector, sink, clock, trigger.token());
      });
    });
    std::jthread prober;
    if (client) {
      prober = std::jthread([&] {
        guarded([&] { pstats = client->Run(sink, clock, trigger.token()); });
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  out << fmt::format(
      "rssi {}, throughput {}, errors {}, delay {} (timeouts {}); "
      "{} records\n",
      cstats.rssi_samples, cstats.throughput_samples, cstats.error_samples,
      pstats.sent, pstats.timeouts, writer.records_written());
  return kExitOk;
}

int RunSimulate(const AppConfig& cfg, std::ostream& out) {
  const CasePreset preset = ResolvePreset(cfg.case_specs.front(), cfg);
  const Trajectory traj = ResolveTrajectory(cfg);
  const TraceFile trace = Simulate(preset, traj, cfg.sim_duration_s, cfg.seed);
  WriteTrace(*cfg.out, trace);
  out << fmt::format("{}: {} records ({}, seed {})\n", cfg.out->string(),
                     trace.records.size(), preset.experiment.Label(), cfg.seed);
  return kExitOk;
}

int RunSuite(const AppConfig& cfg, std::ostream& out) {
  std::vector<CasePreset> presets;
  if (cfg.all_cases) presets = AllPresetCases();
  for (const auto& spec : cfg.case_specs) {
    presets.push_back(ResolvePreset(spec, cfg));
  }
  if (cfg.channel_override && cfg.all_cases) {
    for (auto& p : presets) p.channel = *cfg.channel_override;
  }
  const Trajectory traj = ResolveTrajectory(cfg);
  const SuiteResult result =
      RunExperimentSuite(presets, traj, cfg.sim_duration_s, cfg.seed,
                         *cfg.outdir);
  for (const auto& entry : result.entries) {
    LOG(INFO) << "wrote " << entry.trace_path.string();
  }
  std::ofstream csv(*cfg.outdir / "summary.csv", std::ios::trunc);
  csv << RenderCsv(result.table);
  out << Render(result.table, cfg.emit);
  return kExitOk;
}

int RunAnalyze(const AppConfig& cfg, std::ostream& out, std::ostream& err) {
  MotionFilter filter;
  filter.mode = cfg.motion;
  if (cfg.static_intervals) {
    filter.static_intervals =
        ParseStaticIntervals(ReadTextFile(*cfg.static_intervals));
  }
  const ReadMode mode = cfg.lenient ? ReadMode::kLenient : ReadMode::kStrict;
  std::vector<SummaryRow> rows;
  std::map<std::string, int> label_uses;
  for (const auto& path : cfg.traces) {
    LoadedTrace loaded;
    try {
      loaded = ReadTrace(path, mode);
    } catch (Error& e) {
      throw Error(e.code(), fmt::format("{}: {}", path.string(), e.message()));
    }
    const auto& rep = loaded.report;
    if (rep.corrupt_skipped + rep.truncated_tail_dropped +
            rep.unknown_type_skipped > 0) {
      err << fmt::format(
          "{}: skipped {} corrupt, {} truncated, {} unknown-type lines\n",
          path.string(), rep.corrupt_skipped, rep.truncated_tail_dropped,
          rep.unknown_type_skipped);
    }
    try {
      rows.push_back(Summarize(loaded.trace, filter));
    } catch (Error& e) {
      throw Error(e.code(), fmt::format("{}: {}", path.string(), e.message()));
    }
    ++label_uses[rows.back().label];
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (label_uses[rows[i].label] > 1) {
      rows[i].label += fmt::format(" [{}]", cfg.traces[i].filename().string());
    }
  }
  out << Render(CompareCases(std::move(rows)), cfg.emit);
  return kExitOk;
}

int ExitCodeFor(Errc code) {
  switch (code) {
    case Errc::kUsage:
      return kExitUsage;
    case Errc::kEmptyAfterFilter:
      return kExitEmptyAnalysis;
    case Errc::kBindFailure:
    case Errc::kResolveFailure:
    case Errc::kSourceUnreadable:
      return kExitFailure;
    default:
      return kExitDataError;
  }
}

void ApplyVerbosity(int verbosity) {
  FLAGS_logtostderr = true;
  FLAGS_v = std::max(0, verbosity);
  FLAGS_minloglevel = verbosity < 0 ? google::GLOG_ERROR
                      : verbosity > 0 ? google::GLOG_INFO
                                      : google::GLOG_WARNING;
}

}  // namespace

Invocation ParseInvocation(const std::vector<std::string>& args) {
  auto cli = BuildCli();
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  Invocation inv;
  try {
    cli->app->parse(reversed);
  } catch (const CLI::CallForHelp&) {
    inv.help_text = cli->app->help();
    return inv;
  } catch (const CLI::CallForAllHelp&) {
    inv.help_text = cli->app->help("", CLI::AppFormatMode::All);
    return inv;
  } catch (const CLI::ParseError& e) {
    throw Error(Errc::kUsage, e.what());
  }

  const Flags& f = cli->f;
  CLI::App* sub = nullptr;
  if (cli->serve->parsed()) {
    inv.command = Command::kProbeServe;
    sub = cli->serve;
  } else if (cli->client->parsed()) {
    inv.command = Command::kProbeClient;
    sub = cli->client;
  } else if (cli->record->parsed()) {
    inv.command = Command::kRecord;
    sub = cli->record;
  } else if (cli->simulate->parsed()) {
    inv.command = Command::kSimulate;
    sub = cli->simulate;
  } else if (cli->suite->parsed()) {
    inv.command = Command::kSuite;
    sub = cli->suite;
  } else if (cli->analyze->parsed()) {
    inv.command = Command::kAnalyze;
    sub = cli->analyze;
  } else {
    inv.help_text = cli->app->help();
    return inv;
  }

  AppConfig& cfg = inv.config;
  if (Given(cli->app.get(), "--config")) {
    cfg.config_path = f.config;
    ApplyConfigFile(*cfg.config_path, cfg);
  }
  cfg.probe.side = cfg.collector.side;
  ApplyFlags(sub, f, cfg);
  cfg.verbosity += f.verbose - f.quiet;
  ValidateCommand(inv.command, cfg);
  return inv;
}

std::string HelpText(const std::vector<std::string>& subcommand) {
  std::vector<std::string> args = subcommand;
  args.push_back("--help");
  return *ParseInvocation(args).help_text;
}

std::vector<std::string> FlagNames(const std::vector<std::string>& subcommand) {
  auto cli = BuildCli();
  std::vector<std::string> names;
  for (const CLI::Option* opt :
       FindSubcommand(*cli, subcommand)->get_options()) {
    if (opt->get_positional()) {
      names.push_back(opt->get_name());
      continue;
    }
    for (const auto& s : opt->get_snames()) names.push_back("-" + s);
    for (const auto& l : opt->get_lnames()) names.push_back("--" + l);
  }
  return names;
}

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  Invocation inv;
  try {
    inv = ParseInvocation(args);
  } catch (const Error& e) {
    err << "netmeter: " << e.what() << "\nRun with --help for usage.\n";
    return kExitUsage;
  }
  if (inv.help_text) {
    out << *inv.help_text;
    return kExitOk;
  }
  ApplyVerbosity(inv.config.verbosity);
  try {
    switch (inv.command) {
      case Command::kProbeServe:
        return RunProbeServe(inv.config, out);
      case Command::kProbeClient:
        return RunProbeClient(inv.config, out);
      case Command::kRecord:
        return RunRecord(inv.config, out);
      case Command::kSimulate:
        return RunSimulate(inv.config, out);
      case Command::kSuite:
        return RunSuite(inv.config, out);
      case Command::kAnalyze:
        return RunAnalyze(inv.config, out, err);
      case Command::kNone:
        break;
    }
  } catch (const Error& e) {
    err << "netmeter: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    err << "netmeter: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitOk;
}

}  // namespace netmeter::cli
