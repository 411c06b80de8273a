#ifndef NETMETER_METRICS_H_
#define NETMETER_METRICS_H_

// Shared observation and configuration data model. Every producer (collectors,
// probe client, simulator) emits MetricSample values and every consumer
// (recorder, analyzer) reads them.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace netmeter {

enum class Side { kRobot, kStation };

std::string_view ToString(Side side);
Side ParseSide(std::string_view text);

inline constexpr double kMinRssiDbm = -120.0;
inline constexpr double kMaxRssiDbm = 0.0;
inline constexpr double kDefaultTimeoutMs = 2000.0;

struct RssiBody {
  double rssi_dbm = 0.0;
  std::optional<double> link_quality;
  std::optional<double> noise_dbm;

  bool operator==(const RssiBody&) const = default;
};

// total_mbps is derived, never stored independently, so tx + rx == total holds
// for every value of this type.
class ThroughputBody {
 public:
  ThroughputBody() = default;
  ThroughputBody(double tx_mbps, double rx_mbps, std::uint64_t tx_packets_delta,
                 std::uint64_t rx_packets_delta);

  double tx_mbps() const { return tx_mbps_; }
  double rx_mbps() const { return rx_mbps_; }
  double total_mbps() const { return total_mbps_; }
  std::uint64_t tx_packets_delta() const { return tx_packets_delta_; }
  std::uint64_t rx_packets_delta() const { return rx_packets_delta_; }

  bool operator==(const ThroughputBody&) const = default;

 private:
  double tx_mbps_ = 0.0;
  double rx_mbps_ = 0.0;
  double total_mbps_ = 0.0;
  std::uint64_t tx_packets_delta_ = 0;
  std::uint64_t rx_packets_delta_ = 0;
};

// A round-trip observation. The only constructors are Measured() and
// TimedOut(), so timed_out() == (rtt_ms() == -1) always holds.
class DelayBody {
 public:
  static constexpr double kSentinel = -1.0;

  // rtt_ms must be finite and > 0.
  static DelayBody Measured(double rtt_ms);
  static DelayBody TimedOut();

  double rtt_ms() const { return rtt_ms_; }
  bool timed_out() const { return timed_out_; }

  bool operator==(const DelayBody&) const = default;

 private:
  DelayBody(double rtt_ms, bool timed_out)
      : rtt_ms_(rtt_ms), timed_out_(timed_out) {}

  double rtt_ms_;
  bool timed_out_;
};

// Cumulative error counters. retransmits_cum is host-wide (the protocol
// statistics are not per interface); rx_dropped_cum and tx_errors_cum belong
// to the sample's interface. A record with epoch_start set marks a counter
// reset: values restart from a new baseline and epoch is incremented.
struct ErrorBody {
  std::uint64_t retransmits_cum = 0;
  std::uint64_t rx_dropped_cum = 0;
  std::uint64_t tx_errors_cum = 0;
  std::uint32_t epoch = 0;
  bool epoch_start = false;

  bool operator==(const ErrorBody&) const = default;
};

// Commanded velocity annotation, used to split static and moving intervals.
struct MotionBody {
  double linear_mps = 0.0;
  double angular_rps = 0.0;

  bool is_static() const { return linear_mps == 0.0 && angular_rps == 0.0; }
  bool operator==(const MotionBody&) const = default;
};

using SampleBody =
    std::variant<RssiBody, ThroughputBody, DelayBody, ErrorBody, MotionBody>;

enum class MetricKind { kRssi, kThroughput, kDelay, kErrors, kMotion };

std::string_view ToString(MetricKind kind);
std::optional<MetricKind> ParseMetricKind(std::string_view text);

struct MetricSample {
  std::uint64_t ts_ns = 0;  // monotonic, since session start
  Side side = Side::kRobot;
  std::string iface;
  SampleBody body;

  MetricKind kind() const { return static_cast<MetricKind>(body.index()); }

  template <typename Body>
  const Body* as() const {
    return std::get_if<Body>(&body);
  }

  bool operator==(const MetricSample&) const = default;
};

// Consumer of emitted samples. Sinks shared between producers must be
// thread-safe (TraceWriter is).
using SampleSink = std::function<void(const MetricSample&)>;

// Throws Errc::kInvalidArgument when a body violates its value range
// (RSSI outside [-120, 0] dBm, negative or non-finite rates, ...).
void ValidateSample(const MetricSample& sample);

enum class Topology { kRouter, kDirect };
enum class ApSide { kRouter, kRobot, kStation };
enum class Band { k2g4, k5g8 };

std::string_view ToString(Topology topology);
std::string_view ToString(ApSide ap_side);
std::string_view ToString(Band band);
Topology ParseTopology(std::string_view text);
ApSide ParseApSide(std::string_view text);
Band ParseBand(std::string_view text);

inline constexpr int kFirstCaseId = 1;
inline constexpr int kLastCaseId = 10;

// One experiment configuration. case_id is empty for custom configurations.
struct ExperimentCase {
  std::optional<int> case_id;
  Topology topology = Topology::kRouter;
  ApSide ap_side = ApSide::kRouter;
  Band band = Band::k2g4;
  std::string robot_iface;
  std::string station_iface;

  bool is_baseline() const { return topology == Topology::kRouter; }
  std::string Label() const;

  bool operator==(const ExperimentCase&) const = default;
};

// The fixed ten-row case matrix: routers are the baselines (1: 2.4 GHz,
// 2: 5.8 GHz); odd cases run on 2.4 GHz, even on 5.8 GHz. Robot interfaces
// are iface1 (internal) and iface2 (external); station interfaces are iface3
// (internal) and iface4 (external). Throws Errc::kUnknownCase outside 1..10.
ExperimentCase CatalogCase(int case_id);

// Throws Errc::kInvalidArgument unless topology == router <=> ap_side ==
// router, and a numbered case matches its catalog row exactly.
void ValidateCase(const ExperimentCase& c);

enum class Origin { kMeasured, kSimulated };

std::string_view ToString(Origin origin);
Origin ParseOrigin(std::string_view text);

inline constexpr int kTraceFormatVersion = 1;

struct TraceHeader {
  ExperimentCase experiment;
  std::string start_utc;  // RFC 3339
  Origin origin = Origin::kMeasured;
  std::optional<std::uint64_t> seed;

  bool operator==(const TraceHeader&) const = default;
};

// Throws Errc::kInvalidArgument when a simulated header lacks a seed or the
// case is inconsistent.
void ValidateHeader(const TraceHeader& header);

struct TraceFile {
  TraceHeader header;
  std::vector<MetricSample> records;
};

// Current UTC wall-clock time in RFC 3339 form, second resolution.
std::string NowRfc3339();

}  // namespace netmeter

#endif  // NETMETER_METRICS_H_
