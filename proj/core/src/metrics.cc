#include "netmeter/metrics.h"

#include <chrono>
#include <cmath>
#include <ctime>

#include <fmt/format.h>

#include "netmeter/error.h"

namespace netmeter {

namespace {

[[noreturn]] void BadEnum(std::string_view what, std::string_view text) {
  throw Error(Errc::kInvalidArgument,
              fmt::format("unknown {} '{}'", what, text));
}

void RequireRate(double value, std::string_view field) {
  if (!std::isfinite(value) || value < 0.0) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("{} must be finite and >= 0, got {}", field, value));
  }
}

}  // namespace

std::string_view ToString(Side side) {
  return side == Side::kRobot ? "robot" : "station";
}

Side ParseSide(std::string_view text) {
  if (text == "robot") return Side::kRobot;
  if (text == "station") return Side::kStation;
  BadEnum("side", text);
}

ThroughputBody::ThroughputBody(double tx_mbps, double rx_mbps,
                               std::uint64_t tx_packets_delta,
                               std::uint64_t rx_packets_delta)
    : tx_mbps_(tx_mbps),
      rx_mbps_(rx_mbps),
      total_mbps_(tx_mbps + rx_mbps),
      tx_packets_delta_(tx_packets_delta),
      rx_packets_delta_(rx_packets_delta) {
  RequireRate(tx_mbps, "tx_mbps");
  RequireRate(rx_mbps, "rx_mbps");
}

DelayBody DelayBody::Measured(double rtt_ms) {
  if (!std::isfinite(rtt_ms) || rtt_ms <= 0.0) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("measured rtt must be finite and > 0, got {}", rtt_ms));
  }
  return DelayBody(rtt_ms, false);
}

DelayBody DelayBody::TimedOut() { return DelayBody(kSentinel, true); }

std::string_view ToString(MetricKind kind) {
  switch (kind) {
    case MetricKind::kRssi: return "rssi";
    case MetricKind::kThroughput: return "throughput";
    case MetricKind::kDelay: return "delay";
    case MetricKind::kErrors: return "errors";
    case MetricKind::kMotion: return "motion";
  }
  return "unknown";
}

std::optional<MetricKind> ParseMetricKind(std::string_view text) {
  for (auto kind : {MetricKind::kRssi, MetricKind::kThroughput,
                    MetricKind::kDelay, MetricKind::kErrors,
                    MetricKind::kMotion}) {
    if (ToString(kind) == text) return kind;
  }
  return std::nullopt;
}

void ValidateSample(const MetricSample& sample) {
  if (sample.iface.empty()) {
    throw Error(Errc::kInvalidArgument, "sample iface is empty");
  }
  if (const auto* rssi = sample.as<RssiBody>()) {
    if (!std::isfinite(rssi->rssi_dbm) || rssi->rssi_dbm < kMinRssiDbm ||
        rssi->rssi_dbm > kMaxRssiDbm) {
      throw Error(Errc::kInvalidArgument,
                  fmt::format("rssi {} dBm outside [{}, {}]", rssi->rssi_dbm,
                              kMinRssiDbm, kMaxRssiDbm));
    }
  } else if (const auto* motion = sample.as<MotionBody>()) {
    if (!std::isfinite(motion->linear_mps) ||
        !std::isfinite(motion->angular_rps)) {
      throw Error(Errc::kInvalidArgument, "motion values must be finite");
    }
  }
  // Throughput and delay bodies are validated by their constructors.
}

std::string_view ToString(Topology topology) {
  return topology == Topology::kRouter ? "router" : "direct";
}

std::string_view ToString(ApSide ap_side) {
  switch (ap_side) {
    case ApSide::kRouter: return "router";
    case ApSide::kRobot: return "robot";
    case ApSide::kStation: return "station";
  }
  return "unknown";
}

std::string_view ToString(Band band) {
  return band == Band::k2g4 ? "band_2g4" : "band_5g8";
}

Topology ParseTopology(std::string_view text) {
  if (text == "router") return Topology::kRouter;
  if (text == "direct") return Topology::kDirect;
  BadEnum("topology", text);
}

ApSide ParseApSide(std::string_view text) {
  if (text == "router") return ApSide::kRouter;
  if (text == "robot") return ApSide::kRobot;
  if (text == "station") return ApSide::kStation;
  BadEnum("ap_side", text);
}

Band ParseBand(std::string_view text) {
  if (text == "band_2g4") return Band::k2g4;
  if (text == "band_5g8") return Band::k5g8;
  BadEnum("band", text);
}

std::string ExperimentCase::Label() const {
  if (!case_id) return "custom";
  std::string_view role = "Router";
  if (ap_side == ApSide::kRobot) role = "Robot-AP";
  if (ap_side == ApSide::kStation) role = "Station-AP";
  return fmt::format("Case {} ({})", *case_id, role);
}

ExperimentCase CatalogCase(int case_id) {
  if (case_id < kFirstCaseId || case_id > kLastCaseId) {
    throw Error(Errc::kUnknownCase,
                fmt::format("case {} is not in 1..10", case_id));
  }
  ExperimentCase c;
  c.case_id = case_id;
  c.band = (case_id % 2 == 1) ? Band::k2g4 : Band::k5g8;
  // Pairs share a configuration across bands: (1,2) (3,4) (5,6) (7,8) (9,10).
  const int row = (case_id - 1) / 2;
  const bool external = row >= 3;
  c.robot_iface = external ? "iface2" : "iface1";
  c.station_iface = external ? "iface4" : "iface3";
  if (row == 0) {
    c.topology = Topology::kRouter;
    c.ap_side = ApSide::kRouter;
  } else {
    c.topology = Topology::kDirect;
    c.ap_side = (row == 1 || row == 3) ? ApSide::kRobot : ApSide::kStation;
  }
  return c;
}

void ValidateCase(const ExperimentCase& c) {
  if ((c.topology == Topology::kRouter) != (c.ap_side == ApSide::kRouter)) {
    throw Error(Errc::kInvalidArgument,
                "topology 'router' requires ap_side 'router' and vice versa");
  }
  if (c.robot_iface.empty() || c.station_iface.empty()) {
    throw Error(Errc::kInvalidArgument, "case interfaces must be non-empty");
  }
  if (c.case_id) {
    if (*c.case_id < kFirstCaseId || *c.case_id > kLastCaseId) {
      throw Error(Errc::kUnknownCase,
                  fmt::format("case {} is not in 1..10", *c.case_id));
    }
    if (!(CatalogCase(*c.case_id) == c)) {
      throw Error(Errc::kInvalidArgument,
                  fmt::format("case {} does not match the catalog row; use a "
                              "custom case for other configurations",
                              *c.case_id));
    }
  }
}

std::string_view ToString(Origin origin) {
  return origin == Origin::kMeasured ? "measured" : "simulated";
}

Origin ParseOrigin(std::string_view text) {
  if (text == "measured") return Origin::kMeasured;
  if (text == "simulated") return Origin::kSimulated;
  BadEnum("origin", text);
}

void ValidateHeader(const TraceHeader& header) {
  ValidateCase(header.experiment);
  if (header.origin == Origin::kSimulated && !header.seed) {
    throw Error(Errc::kInvalidArgument, "simulated traces must carry a seed");
  }
}

std::string NowRfc3339() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

}  // namespace netmeter
