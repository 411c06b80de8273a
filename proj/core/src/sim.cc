#include "netmeter/sim.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <optional>
#include <cctype>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "json_config.h"
#include "netmeter/config.h"
#include "netmeter/error.h"
#include "netmeter/recorder.h"

namespace netmeter {

namespace {

constexpr std::string_view kDefaultTrajectory = R"(# Exploration loop around a desk station at the origin.
station 0 0
0 2 0
30 2 0
60 20 0
80 20 0
100 20 15
120 20 15
150 5 15
170 5 15
200 2 0
300 2 0
)";

bool IsFinite(double v) { return std::isfinite(v); }

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
    }
    const std::size_t start = i;
    while (i < line.size() &&
           !std::isspace(static_cast<unsigned char>(line[i]))) {
      ++i;
    }
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

std::optional<double> ToDouble(std::string_view s) {
  std::string copy(s);
  std::size_t used = 0;
  try {
    const double v = std::stod(copy, &used);
    if (used != copy.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

double Distance(const Pose& pose, const Point& station) {
  return std::hypot(pose.x_m - station.x_m, pose.y_m - station.y_m);
}

std::uint64_t PeriodNs(double rate_hz, const char* name) {
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz)) {
    throw Error(Errc::kInvalidArgument, fmt::format("{} must be > 0", name));
  }
  return static_cast<std::uint64_t>(std::llround(1e9 / rate_hz));
}

// Draws RSSI for one receiver. With a decorrelation distance the shadowing
// term follows a unit-variance autocorrelated process scaled by the current
// sigma; otherwise each draw is independent.
class RssiStream {
 public:
  explicit RssiStream(const CasePreset& preset) : preset_(preset) {
    if (const auto& dc = preset.channel.shadowing.decorrelation_m()) {
      process_.emplace(1.0, *dc);
    }
  }

  double Draw(const Pose& pose, double d_m, RandomStream& rng) {
    const bool moving = pose.speed_mps > 0.0;
    const double sigma = preset_.channel.shadowing.sigma_db() +
                         (moving ? preset_.mobility_extra_sigma_db : 0.0);
    const MultipathParams mp = preset_.channel.multipath.WithEnabled(
        moving && preset_.channel.multipath.enabled());
    double rssi;
    if (process_) {
      const double moved =
          last_ ? std::hypot(pose.x_m - last_->x_m, pose.y_m - last_->y_m)
                : 0.0;
      const double shadow = sigma * process_->Next(moved, rng);
      const double fade = mp.enabled() ? MultipathFadeDb(mp, rng) : 0.0;
      rssi = MeanRssi(preset_.channel.path_loss, d_m) - shadow - fade;
    } else {
      rssi = SampleRssi(preset_.channel.path_loss, ShadowingParams(sigma), mp,
                        d_m, rng);
    }
    last_ = pose;
    return std::clamp(rssi, kMinRssiDbm, kMaxRssiDbm);
  }

 private:
  const CasePreset& preset_;
  std::optional<ShadowingProcess> process_;
  std::optional<Pose> last_;
};

}  // namespace

Trajectory::Trajectory(std::vector<Waypoint> waypoints, Point station)
    : waypoints_(std::move(waypoints)), station_(station) {
  if (waypoints_.empty()) {
    throw Error(Errc::kInvalidArgument, "trajectory needs at least one waypoint");
  }
  if (!IsFinite(station_.x_m) || !IsFinite(station_.y_m)) {
    throw Error(Errc::kInvalidArgument, "station position must be finite");
  }
  for (std::size_t i = 0; i < waypoints_.size(); ++i) {
    const auto& w = waypoints_[i];
    if (!IsFinite(w.t_s) || !IsFinite(w.x_m) || !IsFinite(w.y_m)) {
      throw Error(Errc::kInvalidArgument, "waypoint values must be finite");
    }
    if (i > 0 && !(w.t_s > waypoints_[i - 1].t_s)) {
      throw Error(Errc::kInvalidArgument,
                  fmt::format("waypoint times must increase strictly "
                              "({} after {})",
                              w.t_s, waypoints_[i - 1].t_s));
    }
  }
}

Pose PositionAt(const Trajectory& traj, double t_s) {
  const auto& w = traj.waypoints();
  if (t_s <= w.front().t_s) return {w.front().x_m, w.front().y_m, 0.0};
  if (t_s >= w.back().t_s) return {w.back().x_m, w.back().y_m, 0.0};
  const auto next = std::upper_bound(
      w.begin(), w.end(), t_s,
      [](double t, const Waypoint& wp) { return t < wp.t_s; });
  const Waypoint& b = *next;
  const Waypoint& a = *(next - 1);
  const double span = b.t_s - a.t_s;
  const double f = (t_s - a.t_s) / span;
  const double len = std::hypot(b.x_m - a.x_m, b.y_m - a.y_m);
  return {a.x_m + f * (b.x_m - a.x_m), a.y_m + f * (b.y_m - a.y_m),
          len / span};
}

Trajectory ParseTrajectory(std::string_view text) {
  std::vector<Waypoint> waypoints;
  Point station;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    const auto fields = SplitFields(line);
    if (fields.empty()) continue;
    auto malformed = [&](std::string_view why) {
      return Error(Errc::kMalformedLine,
                   fmt::format("trajectory line {}: {}", line_no, why))
          .WithLine(line_no)
          .WithRaw(std::string(line));
    };
    if (fields[0] == "station") {
      if (fields.size() != 3) throw malformed("expected 'station x y'");
      const auto x = ToDouble(fields[1]);
      const auto y = ToDouble(fields[2]);
      if (!x || !y) throw malformed("station coordinates must be numbers");
      station = {*x, *y};
      continue;
    }
    if (fields.size() != 3) throw malformed("expected 't x y'");
    const auto t = ToDouble(fields[0]);
    const auto x = ToDouble(fields[1]);
    const auto y = ToDouble(fields[2]);
    if (!t || !x || !y) throw malformed("waypoint values must be numbers");
    if (!waypoints.empty() && !(*t > waypoints.back().t_s)) {
      throw malformed("waypoint times must increase strictly");
    }
    waypoints.push_back({*t, *x, *y});
  }
  if (waypoints.empty()) {
    throw Error(Errc::kInvalidArgument, "trajectory has no waypoints");
  }
  return Trajectory(std::move(waypoints), station);
}

Trajectory LoadTrajectory(const std::filesystem::path& path) {
  return ParseTrajectory(ReadTextFile(path));
}

std::string_view DefaultTrajectoryText() { return kDefaultTrajectory; }

Trajectory DefaultTrajectory() { return ParseTrajectory(kDefaultTrajectory); }

void ValidatePreset(const CasePreset& preset) {
  ValidateCase(preset.experiment);
  auto require = [](bool ok, std::string_view what) {
    if (!ok) throw Error(Errc::kInvalidArgument, std::string(what));
  };
  require(std::isfinite(preset.disconnect_rssi_dbm),
          "disconnect_rssi_dbm must be finite");
  require(preset.mobility_extra_sigma_db >= 0.0 &&
              std::isfinite(preset.mobility_extra_sigma_db),
          "mobility_extra_sigma_db must be >= 0");
  require(preset.base_rtt_ms >= 0.0 && std::isfinite(preset.base_rtt_ms),
          "base_rtt_ms must be >= 0");
  require(preset.timeout_ms > 0.0 && std::isfinite(preset.timeout_ms),
          "timeout_ms must be > 0");
}

CasePreset PresetCase(int case_id) {
  CasePreset p;
  p.experiment = CatalogCase(case_id);
  const bool direct = p.experiment.topology == Topology::kDirect;
  const double b_mhz = p.experiment.band == Band::k5g8 ? 80.0 : 20.0;
  p.channel.two_ray = TwoRayParams(0.1, 1.0, 1.0, 0.4, 0.8);
  p.channel.path_loss = PathLossParams(-40.0, direct ? 3.0 : 2.5, 1.0);
  p.channel.shadowing = ShadowingParams(3.0);
  p.channel.multipath = MultipathParams(1.0, 1.0, true);
  p.channel.link = LinkParams(b_mhz, LinkParams::kDefaultPnDbm,
                              LinkParams::kDefaultAlphaT,
                              LinkParams::kDefaultLBits);
  p.disconnect_rssi_dbm = -85.0;
  p.mobility_extra_sigma_db = 3.0;
  p.base_rtt_ms = 5.0;
  // Internal adapters acting as the AP (robot in 3/4, station in 5/6)
  // report no link RSSI of their own.
  const bool internal = p.experiment.robot_iface == "iface1";
  p.robot_reports_rssi = !(p.experiment.ap_side == ApSide::kRobot && internal);
  p.station_reports_rssi =
      !(p.experiment.ap_side == ApSide::kStation && internal);
  return p;
}

std::vector<CasePreset> AllPresetCases() {
  std::vector<CasePreset> all;
  for (int id = 1; id <= 10; ++id) all.push_back(PresetCase(id));
  return all;
}

CasePreset ParsePreset(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::kInvalidArgument, fmt::format("preset: {}", e.what()));
  }
  if (!doc.is_object()) {
    throw Error(Errc::kInvalidArgument, "preset must be a JSON object");
  }
  CasePreset p;
  try {
    p.experiment = internal::CaseFromJson(doc.at("case"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("preset: bad 'case': {}", e.what()));
  }
  const auto ch = doc.find("channel");
  if (ch == doc.end()) {
    throw Error(Errc::kInvalidArgument, "preset: missing 'channel' object");
  }
  p.channel = internal::ChannelFromJson(*ch);
  p.disconnect_rssi_dbm =
      internal::RequireNumber(doc, "preset", "disconnect_rssi_dbm");
  p.mobility_extra_sigma_db =
      internal::RequireNumber(doc, "preset", "mobility_extra_sigma_db");
  p.base_rtt_ms = internal::RequireNumber(doc, "preset", "base_rtt_ms");
  if (doc.contains("timeout_ms")) {
    p.timeout_ms = internal::RequireNumber(doc, "preset", "timeout_ms");
  }
  for (const auto& [key, field] :
       {std::pair{"robot_reports_rssi", &p.robot_reports_rssi},
        std::pair{"station_reports_rssi", &p.station_reports_rssi}}) {
    if (const auto it = doc.find(key); it != doc.end()) {
      if (!it->is_boolean()) {
        throw Error(Errc::kInvalidArgument,
                    fmt::format("preset: '{}' must be a boolean", key));
      }
      *field = it->get<bool>();
    }
  }
  ValidatePreset(p);
  return p;
}

CasePreset LoadPreset(const std::filesystem::path& path) {
  return ParsePreset(ReadTextFile(path));
}

std::string PresetToText(const CasePreset& preset) {
  nlohmann::ordered_json doc;
  doc["case"] = internal::CaseToJson(preset.experiment);
  doc["channel"] = internal::ChannelToJson(preset.channel);
  doc["disconnect_rssi_dbm"] = preset.disconnect_rssi_dbm;
  doc["mobility_extra_sigma_db"] = preset.mobility_extra_sigma_db;
  doc["base_rtt_ms"] = preset.base_rtt_ms;
  doc["timeout_ms"] = preset.timeout_ms;
  doc["robot_reports_rssi"] = preset.robot_reports_rssi;
  doc["station_reports_rssi"] = preset.station_reports_rssi;
  return doc.dump(2);
}

TraceFile Simulate(const CasePreset& preset, const Trajectory& traj,
                   double duration_s, std::uint64_t seed,
                   const SimulationOptions& options) {
  ValidatePreset(preset);
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    throw Error(Errc::kInvalidArgument, "duration must be > 0");
  }
  const std::uint64_t rssi_period = PeriodNs(options.rssi_rate_hz, "rssi rate");
  const std::uint64_t generic_period =
      PeriodNs(options.generic_rate_hz, "generic rate");
  const auto duration_ns =
      static_cast<std::uint64_t>(std::llround(duration_s * 1e9));

  TraceFile trace;
  trace.header.experiment = preset.experiment;
  trace.header.start_utc = options.start_utc;
  trace.header.origin = Origin::kSimulated;
  trace.header.seed = seed;

  const ExperimentCase& c = preset.experiment;
  const LinkParams& link = preset.channel.link;
  const double d0 = preset.channel.path_loss.d0_m();
  RandomStream rng(seed);
  RssiStream robot_rx(preset);
  RssiStream station_rx(preset);
  std::optional<double> last_speed;
  double link_rssi = 0.0;

  auto emit = [&](std::uint64_t ts, Side side, const std::string& iface,
                  SampleBody body) {
    trace.records.push_back({ts, side, iface, std::move(body)});
  };

  std::uint64_t next_rssi = 0;
  std::uint64_t next_generic = 0;
  while (std::min(next_rssi, next_generic) < duration_ns) {
    const std::uint64_t ts = std::min(next_rssi, next_generic);
    const Pose pose = PositionAt(traj, static_cast<double>(ts) / 1e9);
    const double d = std::max(Distance(pose, traj.station()), d0);

    if (!last_speed || *last_speed != pose.speed_mps) {
      emit(ts, Side::kRobot, c.robot_iface, MotionBody{pose.speed_mps, 0.0});
      last_speed = pose.speed_mps;
    }

    if (ts == next_rssi) {
      link_rssi = robot_rx.Draw(pose, d, rng);
      const double station_rssi = station_rx.Draw(pose, d, rng);
      if (preset.robot_reports_rssi) {
        emit(ts, Side::kRobot, c.robot_iface,
             RssiBody{link_rssi, std::nullopt, link.pn_dbm()});
      }
      if (preset.station_reports_rssi) {
        emit(ts, Side::kStation, c.station_iface,
             RssiBody{station_rssi, std::nullopt, link.pn_dbm()});
      }
      next_rssi += rssi_period;
    }

    if (ts == next_generic) {
      const double period_s = static_cast<double>(generic_period) / 1e9;
      double thr = 0.0;
      std::optional<double> rtt;
      if (link_rssi >= preset.disconnect_rssi_dbm) {
        thr = ModelThroughput(link, link_rssi);
        try {
          const double delay = ModelDelay(link, link_rssi) + preset.base_rtt_ms;
          if (delay <= preset.timeout_ms) rtt = delay;
        } catch (const Error& e) {
          if (e.code() != Errc::kZeroThroughput) throw;
        }
      }
      if (!rtt) thr = 0.0;
      const auto packets =
          link.l_bits() > 0.0
              ? static_cast<std::uint64_t>(thr * 1e6 * period_s / link.l_bits())
              : 0;
      emit(ts, Side::kRobot, c.robot_iface, ThroughputBody(thr, 0.0, packets, 0));
      emit(ts, Side::kRobot, c.robot_iface,
           rtt ? DelayBody::Measured(*rtt) : DelayBody::TimedOut());
      next_generic += generic_period;
    }
  }
  return trace;
}

SuiteResult RunExperimentSuite(const std::vector<CasePreset>& presets,
                               const Trajectory& traj, double duration_s,
                               std::uint64_t seed,
                               const std::filesystem::path& outdir,
                               const SimulationOptions& options) {
  if (presets.empty()) {
    throw Error(Errc::kInvalidArgument, "suite needs at least one preset");
  }
  for (const auto& p : presets) ValidatePreset(p);
  std::error_code ec;
  std::filesystem::create_directories(outdir, ec);
  if (ec) {
    throw Error(Errc::kIo, fmt::format("cannot create '{}': {}",
                                       outdir.string(), ec.message()));
  }

  std::vector<std::string> stems;
  std::map<std::string, int> seen;
  for (const auto& p : presets) {
    stems.push_back(p.experiment.case_id
                        ? fmt::format("case_{}", *p.experiment.case_id)
                        : std::string("case_custom"));
    ++seen[stems.back()];
  }
  std::vector<std::filesystem::path> paths;
  std::vector<bool> duplicated;
  std::map<std::string, int> issued;
  for (const auto& stem : stems) {
    const int n = ++issued[stem];
    paths.push_back(outdir / (n == 1 ? stem + ".trace"
                                     : fmt::format("{}_{}.trace", stem, n)));
    duplicated.push_back(seen[stem] > 1);
  }

  std::vector<std::future<SummaryRow>> jobs;
  for (std::size_t i = 0; i < presets.size(); ++i) {
    jobs.push_back(std::async(std::launch::async, [&, i] {
      const auto& p = presets[i];
      const std::uint64_t case_seed =
          seed ^ static_cast<std::uint64_t>(p.experiment.case_id.value_or(0));
      const TraceFile trace = Simulate(p, traj, duration_s, case_seed, options);
      WriteTrace(paths[i], trace);
      SummaryRow row = Summarize(trace);
      if (duplicated[i]) {
        row.label += fmt::format(" [{}]", paths[i].filename().string());
      }
      return row;
    }));
  }

  SuiteResult result;
  std::vector<SummaryRow> rows;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    SummaryRow row = jobs[i].get();
    rows.push_back(row);
    result.entries.push_back({paths[i], std::move(row)});
  }
  result.table = CompareCases(std::move(rows));
  return result;
}

}  // namespace netmeter
