#ifndef NETMETER_COLLECTORS_H_
#define NETMETER_COLLECTORS_H_

// Passive link metric collection from kernel statistics text:
//   wireless stats  -> RSSI (dBm), link quality, noise
//   device stats    -> per-interface byte/packet counters -> throughput
//   protocol stats  -> host-wide TCP segments retransmitted
//
// All sources are read relative to a configurable root so fixture
// directories can stand in for the live system.

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include "netmeter/clock.h"
#include "netmeter/metrics.h"

namespace netmeter {

struct WirelessStatLine {
  std::string iface;
  std::string status;
  double link_quality = 0.0;
  double level_dbm = 0.0;
  double noise_dbm = 0.0;
  std::uint64_t discard_nwid = 0;
  std::uint64_t discard_crypt = 0;
  std::uint64_t discard_frag = 0;
  std::uint64_t discard_retry = 0;
  std::uint64_t discard_misc = 0;
  std::uint64_t missed_beacon = 0;

  bool operator==(const WirelessStatLine&) const = default;
};

struct DeviceCounters {
  std::string iface;
  std::uint64_t rx_bytes = 0;
  std::uint64_t rx_packets = 0;
  std::uint64_t rx_dropped = 0;
  std::uint64_t tx_bytes = 0;
  std::uint64_t tx_packets = 0;
  std::uint64_t tx_errors = 0;
  std::uint64_t captured_at_ns = 0;

  bool operator==(const DeviceCounters&) const = default;
};

struct ProtocolCounters {
  std::uint64_t segments_retransmitted = 0;
  std::uint64_t captured_at_ns = 0;

  bool operator==(const ProtocolCounters&) const = default;
};

// Wireless stats layout: two '|' header lines, then
//   iface: status link. level. noise. nwid crypt frag retry misc beacon
// Trailing '.' on the quality fields is stripped; level is signed dBm.
// Throws Errc::kMalformedLine with the 1-based line number. No data rows
// yields an empty vector.
std::vector<WirelessStatLine> ParseWirelessStats(std::string_view text);

// Device stats layout: two '|' header lines, then `iface:` followed by 16
// counters (8 receive: bytes packets errs drop fifo frame compressed
// multicast; 8 transmit: bytes packets errs drop fifo colls carrier
// compressed). Throws Errc::kMalformedLine with the line number.
std::vector<DeviceCounters> ParseDeviceStats(std::string_view text,
                                             std::uint64_t captured_at_ns = 0);

// Accepts `netstat -s` text (the "N segments retransmitted" line) or the
// kernel's SNMP table (Tcp: ... RetransSegs). Throws Errc::kCounterNotFound
// when neither is present.
ProtocolCounters ParseProtocolStats(std::string_view text,
                                    std::uint64_t captured_at_ns = 0);

// Decimal megabits per second (10^6 bits) from two captures of the same
// interface. Throws Errc::kZeroInterval when curr is not later than prev and
// Errc::kCounterWentBackwards when any byte or packet counter decreased.
ThroughputBody ThroughputFromCounters(const DeviceCounters& prev,
                                      const DeviceCounters& curr);

class StatsSource {
 public:
  virtual ~StatsSource() = default;

  // Empty when the source cannot be read right now.
  virtual std::optional<std::string> ReadWireless() = 0;
  virtual std::optional<std::string> ReadDevice() = 0;
  virtual std::optional<std::string> ReadProtocol() = 0;
};

struct StatsPaths {
  std::filesystem::path wireless = "proc/net/wireless";
  std::filesystem::path device = "proc/net/dev";
  std::filesystem::path protocol = "proc/net/snmp";
};

class FilesystemStatsSource : public StatsSource {
 public:
  explicit FilesystemStatsSource(std::filesystem::path root,
                                 StatsPaths paths = {});

  std::optional<std::string> ReadWireless() override;
  std::optional<std::string> ReadDevice() override;
  std::optional<std::string> ReadProtocol() override;

 private:
  std::filesystem::path root_;
  StatsPaths paths_;
};

struct CollectorConfig {
  std::string iface;
  Side side = Side::kRobot;
  double rssi_rate_hz = 10.0;
  double generic_rate_hz = 1.0;
  std::filesystem::path stats_source_root = "/";
  StatsPaths paths;
};

// Throws Errc::kInvalidArgument for an empty iface or non-positive rates.
void ValidateCollectorConfig(const CollectorConfig& cfg);

struct CollectorStats {
  std::uint64_t rssi_samples = 0;
  std::uint64_t throughput_samples = 0;
  std::uint64_t error_samples = 0;
  std::uint64_t skipped_reads = 0;
  std::uint64_t counter_resets = 0;
};

// Periodic sampler for one interface. RSSI ticks at rssi_rate_hz; device and
// protocol counters tick at generic_rate_hz. The first counter capture is a
// baseline, so throughput starts at the second generic tick. A counter that
// goes backwards emits an epoch-marker ErrorBody and re-baselines instead of
// producing a rate across the reset.
class Collector {
 public:
  Collector(CollectorConfig cfg, std::unique_ptr<StatsSource> source);

  // Runs until `stop` is requested or `clock` stops advancing. Throws
  // Errc::kSourceUnreadable when device stats cannot be read at startup;
  // later read failures are logged and skipped.
  void Run(const SampleSink& sink, Clock& clock, std::stop_token stop);

  const CollectorStats& stats() const { return stats_; }

 private:
  void RssiTick(const SampleSink& sink, std::uint64_t ts_ns);
  void GenericTick(const SampleSink& sink, std::uint64_t ts_ns);

  CollectorConfig cfg_;
  std::unique_ptr<StatsSource> source_;
  CollectorStats stats_;
  std::optional<DeviceCounters> prev_device_;
  std::optional<std::uint64_t> prev_retransmits_;
  std::uint32_t epoch_ = 0;
};

// Collector over a FilesystemStatsSource rooted at cfg.stats_source_root.
CollectorStats RunCollector(const CollectorConfig& cfg, const SampleSink& sink,
                            Clock& clock, std::stop_token stop);

}  // namespace netmeter

#endif  // NETMETER_COLLECTORS_H_
