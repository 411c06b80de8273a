#include "netmeter/collectors.h"

#include <deque>
#include <filesystem>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "netmeter/error.h"
#include "support/oracles.h"

namespace netmeter {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::FixtureDir;
using testing::Slurp;

std::vector<fs::path> FixtureInputs(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.path().extension() == ".txt") out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

json Sidecar(const fs::path& input) {
  fs::path side = input;
  side.replace_extension(".expected.json");
  return json::parse(Slurp(side));
}

TEST(WirelessFixtures, MatchSidecars) {
  const auto inputs = FixtureInputs(FixtureDir() / "wireless");
  ASSERT_GE(inputs.size(), 3u);
  for (const auto& path : inputs) {
    SCOPED_TRACE(path.filename().string());
    const auto got = ParseWirelessStats(Slurp(path));
    const json want = Sidecar(path)["entries"];
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      const json& w = want[i];
      EXPECT_EQ(got[i].iface, w["iface"].get<std::string>());
      EXPECT_EQ(got[i].status, w["status"].get<std::string>());
      EXPECT_EQ(got[i].link_quality, w["link_quality"].get<double>());
      EXPECT_EQ(got[i].level_dbm, w["level_dbm"].get<double>());
      EXPECT_EQ(got[i].noise_dbm, w["noise_dbm"].get<double>());
      EXPECT_EQ(got[i].discard_nwid, w["discard_nwid"].get<std::uint64_t>());
      EXPECT_EQ(got[i].discard_crypt, w["discard_crypt"].get<std::uint64_t>());
      EXPECT_EQ(got[i].discard_frag, w["discard_frag"].get<std::uint64_t>());
      EXPECT_EQ(got[i].discard_retry, w["discard_retry"].get<std::uint64_t>());
      EXPECT_EQ(got[i].discard_misc, w["discard_misc"].get<std::uint64_t>());
      EXPECT_EQ(got[i].missed_beacon, w["missed_beacon"].get<std::uint64_t>());
    }
  }
}

TEST(DeviceFixtures, MatchSidecars) {
  const auto inputs = FixtureInputs(FixtureDir() / "device");
  ASSERT_GE(inputs.size(), 3u);
  for (const auto& path : inputs) {
    SCOPED_TRACE(path.filename().string());
    const auto got = ParseDeviceStats(Slurp(path), 77);
    const json want = Sidecar(path)["entries"];
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      const json& w = want[i];
      EXPECT_EQ(got[i].iface, w["iface"].get<std::string>());
      EXPECT_EQ(got[i].rx_bytes, w["rx_bytes"].get<std::uint64_t>());
      EXPECT_EQ(got[i].rx_packets, w["rx_packets"].get<std::uint64_t>());
      EXPECT_EQ(got[i].rx_dropped, w["rx_dropped"].get<std::uint64_t>());
      EXPECT_EQ(got[i].tx_bytes, w["tx_bytes"].get<std::uint64_t>());
      EXPECT_EQ(got[i].tx_packets, w["tx_packets"].get<std::uint64_t>());
      EXPECT_EQ(got[i].tx_errors, w["tx_errors"].get<std::uint64_t>());
      EXPECT_EQ(got[i].captured_at_ns, 77u);
    }
  }
}

TEST(ProtocolFixtures, MatchSidecars) {
  const auto inputs = FixtureInputs(FixtureDir() / "protocol");
  ASSERT_GE(inputs.size(), 3u);
  for (const auto& path : inputs) {
    SCOPED_TRACE(path.filename().string());
    EXPECT_EQ(ParseProtocolStats(Slurp(path)).segments_retransmitted,
              Sidecar(path)["segments_retransmitted"].get<std::uint64_t>());
  }
}

TEST(CorruptFixtures, RaiseSpecifiedErrors) {
  int checked = 0;
  for (const char* kind : {"wireless", "device", "protocol"}) {
    for (const auto& path : FixtureInputs(FixtureDir() / "corrupt" / kind)) {
      SCOPED_TRACE(path.string());
      const json want = Sidecar(path);
      const std::string text = Slurp(path);
      try {
        if (std::string_view(kind) == "wireless") ParseWirelessStats(text);
        if (std::string_view(kind) == "device") ParseDeviceStats(text);
        if (std::string_view(kind) == "protocol") ParseProtocolStats(text);
        ADD_FAILURE() << "parsed without error";
      } catch (const Error& e) {
        EXPECT_EQ(ErrcName(e.code()), want["error"].get<std::string>());
        if (want.contains("line")) {
          EXPECT_EQ(e.line(), want["line"].get<std::size_t>());
        }
      }
      ++checked;
    }
  }
  EXPECT_GE(checked, 6);
}

DeviceCounters Counters(std::uint64_t tx, std::uint64_t rx, std::uint64_t t_ns) {
  DeviceCounters c;
  c.iface = "wlan0";
  c.tx_bytes = tx;
  c.rx_bytes = rx;
  c.tx_packets = tx / 100;
  c.rx_packets = rx / 100;
  c.captured_at_ns = t_ns;
  return c;
}

TEST(ThroughputFromCountersTest, OneMegabitPerSecond) {
  const ThroughputBody b = ThroughputFromCounters(
      Counters(0, 0, 0), Counters(125000, 0, 1'000'000'000));
  EXPECT_DOUBLE_EQ(b.tx_mbps(), 1.0);
  EXPECT_DOUBLE_EQ(b.rx_mbps(), 0.0);
  EXPECT_DOUBLE_EQ(b.total_mbps(), 1.0);
  EXPECT_EQ(b.tx_packets_delta(), 1250u);
}

TEST(ThroughputFromCountersTest, IdenticalCountersGiveZero) {
  const auto c = Counters(5000, 7000, 10);
  auto later = c;
  later.captured_at_ns = 500'000'010;
  const ThroughputBody b = ThroughputFromCounters(c, later);
  EXPECT_EQ(b.total_mbps(), 0.0);
  EXPECT_EQ(b.tx_packets_delta(), 0u);
}

TEST(ThroughputFromCountersTest, ResetAndZeroInterval) {
  try {
    ThroughputFromCounters(Counters(2000, 0, 0), Counters(1000, 0, 1000));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kCounterWentBackwards);
  }
  try {
    ThroughputFromCounters(Counters(0, 0, 5), Counters(10, 0, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kZeroInterval);
  }
}

TEST(CollectorTest, FixtureRootThreeSeconds) {
  CollectorConfig cfg;
  cfg.iface = "wlp2s0";
  cfg.stats_source_root = FixtureDir() / "live_root";
  std::vector<MetricSample> got;
  VirtualClock clock(3'000'000'000ull);
  const CollectorStats stats = RunCollector(
      cfg, [&](const MetricSample& s) { got.push_back(s); }, clock, {});
  EXPECT_GE(stats.rssi_samples, 25u);
  EXPECT_EQ(stats.throughput_samples, 2u);
  std::size_t rssi = 0, thr = 0, err = 0;
  for (const auto& s : got) {
    EXPECT_EQ(s.iface, "wlp2s0");
    if (const auto* r = s.as<RssiBody>()) {
      ++rssi;
      EXPECT_EQ(r->rssi_dbm, -48.0);
      EXPECT_EQ(r->link_quality, 62.0);
      EXPECT_FALSE(r->noise_dbm.has_value());  // -256 means "not reported"
    }
    if (s.as<ThroughputBody>()) ++thr;
    if (const auto* e = s.as<ErrorBody>()) {
      ++err;
      EXPECT_EQ(e->retransmits_cum, 2741u);
      EXPECT_EQ(e->rx_dropped_cum, 2117u);
      EXPECT_EQ(e->tx_errors_cum, 3u);
    }
  }
  EXPECT_EQ(rssi, stats.rssi_samples);
  EXPECT_EQ(thr, 2u);
  EXPECT_EQ(err, 3u);
}

TEST(CollectorTest, AbsentWirelessIfaceStillEmitsThroughput) {
  CollectorConfig cfg;
  cfg.iface = "lo";
  cfg.stats_source_root = FixtureDir() / "live_root";
  std::vector<MetricSample> got;
  VirtualClock clock(3'000'000'000ull);
  const CollectorStats stats = RunCollector(
      cfg, [&](const MetricSample& s) { got.push_back(s); }, clock, {});
  EXPECT_EQ(stats.rssi_samples, 0u);
  EXPECT_EQ(stats.throughput_samples, 2u);
}

TEST(CollectorTest, UnreadableSourceFailsAtStartup) {
  testing::TempDir dir;
  CollectorConfig cfg;
  cfg.iface = "wlan0";
  cfg.stats_source_root = dir.path();
  VirtualClock clock(1'000'000'000ull);
  try {
    RunCollector(cfg, [](const MetricSample&) {}, clock, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kSourceUnreadable);
  }
}

// Replays scripted device/protocol text, one entry per generic tick.
class ScriptedSource : public StatsSource {
 public:
  ScriptedSource(std::deque<std::string> device, std::deque<std::string> proto)
      : device_(std::move(device)), proto_(std::move(proto)) {}

  std::optional<std::string> ReadWireless() override { return std::nullopt; }
  std::optional<std::string> ReadDevice() override {
    if (device_.empty()) return std::nullopt;
    std::string s = device_.front();
    if (device_.size() > 1) device_.pop_front();
    return s;
  }
  std::optional<std::string> ReadProtocol() override {
    if (proto_.empty()) return std::nullopt;
    std::string s = proto_.front();
    if (proto_.size() > 1) proto_.pop_front();
    return s;
  }

 private:
  std::deque<std::string> device_;
  std::deque<std::string> proto_;
};

std::string DevText(std::uint64_t rx, std::uint64_t tx) {
  return "h|\nh|\n wlan0: " + std::to_string(rx) + " 10 0 0 0 0 0 0 " +
         std::to_string(tx) + " 20 0 0 0 0 0 0\n";
}

std::string ProtoText(std::uint64_t n) {
  return "Tcp:\n    " + std::to_string(n) + " segments retransmitted\n";
}

TEST(CollectorTest, CounterResetStartsNewEpoch) {
  CollectorConfig cfg;
  cfg.iface = "wlan0";
  cfg.rssi_rate_hz = 1.0;
  Collector collector(
      cfg, std::make_unique<ScriptedSource>(
               // The first read is the startup readability check.
               std::deque<std::string>{DevText(0, 0), DevText(0, 0),
                                       DevText(125000, 0),
                                       DevText(100, 0), DevText(125100, 0)},
               std::deque<std::string>{ProtoText(10), ProtoText(12),
                                       ProtoText(1), ProtoText(4)}));
  std::vector<MetricSample> got;
  VirtualClock clock(4'000'000'000ull);
  collector.Run([&](const MetricSample& s) { got.push_back(s); }, clock, {});

  std::vector<double> rates;
  std::vector<ErrorBody> errors;
  for (const auto& s : got) {
    if (const auto* t = s.as<ThroughputBody>()) rates.push_back(t->rx_mbps());
    if (const auto* e = s.as<ErrorBody>()) errors.push_back(*e);
  }
  // Tick 2 is a reset: no rate across it, a new epoch instead.
  ASSERT_EQ(rates.size(), 2u);
  EXPECT_DOUBLE_EQ(rates[0], 1.0);
  EXPECT_DOUBLE_EQ(rates[1], 1.0);
  ASSERT_EQ(errors.size(), 4u);
  EXPECT_EQ(errors[0].epoch, 0u);
  EXPECT_EQ(errors[1].epoch, 0u);
  EXPECT_TRUE(errors[2].epoch_start);
  EXPECT_EQ(errors[2].epoch, 1u);
  EXPECT_EQ(errors[2].retransmits_cum, 1u);
  EXPECT_EQ(errors[3].epoch, 1u);
  EXPECT_FALSE(errors[3].epoch_start);
  EXPECT_EQ(collector.stats().counter_resets, 1u);
}

TEST(CollectorTest, StopRequestEndsRun) {
  CollectorConfig cfg;
  cfg.iface = "wlp2s0";
  cfg.stats_source_root = FixtureDir() / "live_root";
  std::stop_source stop;
  std::size_t n = 0;
  VirtualClock clock;
  RunCollector(
      cfg,
      [&](const MetricSample&) {
        if (++n == 5) stop.request_stop();
      },
      clock, stop.get_token());
  EXPECT_GE(n, 5u);
  EXPECT_LT(n, 10u);
}

TEST(CollectorConfigTest, Validation) {
  CollectorConfig cfg;
  EXPECT_THROW(ValidateCollectorConfig(cfg), Error);
  cfg.iface = "wlan0";
  EXPECT_NO_THROW(ValidateCollectorConfig(cfg));
  cfg.rssi_rate_hz = 0.0;
  EXPECT_THROW(ValidateCollectorConfig(cfg), Error);
}

}  // namespace
}  // namespace netmeter
