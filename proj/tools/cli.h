#ifndef NETMETER_TOOLS_CLI_H_
#define NETMETER_TOOLS_CLI_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "netmeter/analyzer.h"
#include "netmeter/channel.h"
#include "netmeter/collectors.h"
#include "netmeter/probe.h"

namespace netmeter::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitDataError = 2;
inline constexpr int kExitEmptyAnalysis = 3;
inline constexpr int kExitUsage = 64;

enum class Command {
  kNone,
  kProbeServe,
  kProbeClient,
  kRecord,
  kSimulate,
  kSuite,
  kAnalyze,
};

enum class Emit { kTable, kCsv, kJson };

// Everything a subcommand needs, after merging the --config file (if any)
// with flags. Flags win over config values.
struct AppConfig {
  int verbosity = 0;  // -v raises, -q lowers
  std::optional<std::filesystem::path> config_path;

  CollectorConfig collector;
  ProbeConfig probe;
  std::optional<Endpoint> probe_server;
  Endpoint listen{"0.0.0.0", 7447};
  int inject_delay_ms = 0;
  std::optional<std::uint64_t> count;
  std::optional<double> run_seconds;

  // Case selection: catalog ids or preset files, in command-line order.
  std::vector<std::string> case_specs;
  bool all_cases = false;
  std::optional<ChannelParams> channel_override;
  std::optional<std::filesystem::path> trajectory;
  double sim_duration_s = 300.0;
  std::uint64_t seed = 42;

  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> outdir;

  std::vector<std::filesystem::path> traces;
  MotionMode motion = MotionMode::kAll;
  std::optional<std::filesystem::path> static_intervals;
  bool lenient = false;
  Emit emit = Emit::kTable;
};

struct Invocation {
  Command command = Command::kNone;
  AppConfig config;
  // Set when --help was requested or no subcommand was given; the caller
  // prints it and exits 0.
  std::optional<std::string> help_text;
};

// `args` excludes the program name. Throws Error(Errc::kUsage) naming the
// offending flag; also validates every referenced input file.
Invocation ParseInvocation(const std::vector<std::string>& args);

// Full help text for a subcommand path such as {"probe", "client"}.
std::string HelpText(const std::vector<std::string>& subcommand);

// Names of every flag a subcommand accepts, for help completeness checks.
std::vector<std::string> FlagNames(const std::vector<std::string>& subcommand);

// Parses, dispatches and maps errors to exit codes.
int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err);

}  // namespace netmeter::cli

#endif  // NETMETER_TOOLS_CLI_H_
