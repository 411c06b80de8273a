#ifndef NETMETER_SIM_H_
#define NETMETER_SIM_H_

// Synthetic traces: a virtual robot follows a waypoint trajectory against a
// fixed station while the channel model is evaluated on every tick.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "netmeter/analyzer.h"
#include "netmeter/channel.h"
#include "netmeter/metrics.h"

namespace netmeter {

struct Waypoint {
  double t_s = 0.0;
  double x_m = 0.0;
  double y_m = 0.0;
};

struct Point {
  double x_m = 0.0;
  double y_m = 0.0;
};

class Trajectory {
 public:
  // Throws Errc::kInvalidArgument when `waypoints` is empty, times are not
  // strictly increasing, or a coordinate is not finite.
  Trajectory(std::vector<Waypoint> waypoints, Point station);

  const std::vector<Waypoint>& waypoints() const { return waypoints_; }
  const Point& station() const { return station_; }
  double end_s() const { return waypoints_.back().t_s; }

 private:
  std::vector<Waypoint> waypoints_;
  Point station_;
};

struct Pose {
  double x_m = 0.0;
  double y_m = 0.0;
  double speed_mps = 0.0;
};

// Linear interpolation between bracketing waypoints; clamped with speed 0
// outside the waypoint time range.
Pose PositionAt(const Trajectory& traj, double t_s);

// One `t x y` triple per line, an optional `station x y` line (default
// origin), '#' comments. Throws Errc::kMalformedLine with the line number.
Trajectory ParseTrajectory(std::string_view text);
Trajectory LoadTrajectory(const std::filesystem::path& path);

// A 300 s exploration loop: parked near the station, out to 25 m with
// stops, and back.
Trajectory DefaultTrajectory();
std::string_view DefaultTrajectoryText();

struct CasePreset {
  ExperimentCase experiment;
  ChannelParams channel;  // two_ray is not used by the simulator
  double disconnect_rssi_dbm = -85.0;
  double mobility_extra_sigma_db = 3.0;
  double base_rtt_ms = 5.0;
  double timeout_ms = kDefaultTimeoutMs;
  // An internal adapter serving as the AP exposes no station RSSI.
  bool robot_reports_rssi = true;
  bool station_reports_rssi = true;
};

// Throws Errc::kInvalidArgument.
void ValidatePreset(const CasePreset& preset);

// Catalog preset for case 1..10; throws Errc::kUnknownCase otherwise.
CasePreset PresetCase(int case_id);
std::vector<CasePreset> AllPresetCases();

// JSON preset: {"case": {...}, "channel": {...}, "disconnect_rssi_dbm",
// "mobility_extra_sigma_db", "base_rtt_ms"} plus optional "timeout_ms",
// "robot_reports_rssi", "station_reports_rssi".
CasePreset ParsePreset(std::string_view text);
CasePreset LoadPreset(const std::filesystem::path& path);
std::string PresetToText(const CasePreset& preset);

struct SimulationOptions {
  double rssi_rate_hz = 10.0;
  double generic_rate_hz = 1.0;
  // Fixed so that equal inputs give equal bytes.
  std::string start_utc = "1970-01-01T00:00:00Z";
};

// Deterministic in (preset, traj, duration_s, seed, options).
TraceFile Simulate(const CasePreset& preset, const Trajectory& traj,
                   double duration_s, std::uint64_t seed,
                   const SimulationOptions& options = {});

struct SuiteEntry {
  std::filesystem::path trace_path;
  SummaryRow row;
};

struct SuiteResult {
  std::vector<SuiteEntry> entries;
  ComparisonTable table;
};

// Simulates and summarizes every preset (in parallel, seed ^ case_id each)
// and writes case_<id>.trace files into `outdir`. Duplicate presets get
// distinct file names and row labels.
SuiteResult RunExperimentSuite(const std::vector<CasePreset>& presets,
                               const Trajectory& traj, double duration_s,
                               std::uint64_t seed,
                               const std::filesystem::path& outdir,
                               const SimulationOptions& options = {});

}  // namespace netmeter

#endif  // NETMETER_SIM_H_
