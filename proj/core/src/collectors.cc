#include "netmeter/collectors.h"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <glog/logging.h>

#include "netmeter/error.h"

namespace netmeter {

namespace {

constexpr int kDeviceCounterColumns = 16;
constexpr double kNoiseNotReported = -256.0;

std::vector<std::string_view> SplitLines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    lines.push_back(text.substr(0, nl));
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  return lines;
}

std::vector<std::string_view> SplitFields(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    const std::size_t start = i;
    while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

std::string_view Trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool IsBlank(std::string_view line) { return Trim(line).empty(); }

bool IsHeader(std::string_view line) {
  return line.find('|') != std::string_view::npos;
}

[[noreturn]] void MalformedAt(std::size_t line_no, const std::string& why) {
  throw Error(Errc::kMalformedLine, fmt::format("line {}: {}", line_no, why))
      .WithLine(line_no);
}

std::optional<double> ToReal(std::string_view token) {
  if (!token.empty() && token.back() == '.') token.remove_suffix(1);
  if (token.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

template <typename Int>
std::optional<Int> ToInt(std::string_view token) {
  Int value = 0;
  const auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) return std::nullopt;
  return value;
}

// Splits "iface: rest" (the kernel may omit the space after the colon).
std::pair<std::string_view, std::string_view> SplitIface(std::string_view line,
                                                         std::size_t line_no) {
  const auto colon = line.find(':');
  if (colon == std::string_view::npos) {
    MalformedAt(line_no, "missing 'iface:' prefix");
  }
  const auto iface = Trim(line.substr(0, colon));
  if (iface.empty() || SplitFields(iface).size() != 1) {
    MalformedAt(line_no, "empty or invalid interface name");
  }
  return {iface, line.substr(colon + 1)};
}

}  // namespace

std::vector<WirelessStatLine> ParseWirelessStats(std::string_view text) {
  std::vector<WirelessStatLine> out;
  const auto lines = SplitLines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const auto line = lines[i];
    if (IsBlank(line) || IsHeader(line)) continue;

    const auto [iface, rest] = SplitIface(line, line_no);
    const auto fields = SplitFields(rest);
    if (fields.size() < 4) {
      MalformedAt(line_no, fmt::format("expected status and 3 quality fields, "
                                       "got {} fields",
                                       fields.size()));
    }
    WirelessStatLine w;
    w.iface = std::string(iface);
    w.status = std::string(fields[0]);
    const auto link = ToReal(fields[1]);
    const auto level = ToReal(fields[2]);
    const auto noise = ToReal(fields[3]);
    if (!link || !level || !noise) {
      MalformedAt(line_no, "quality fields must be numeric");
    }
    w.link_quality = *link;
    w.level_dbm = *level;
    w.noise_dbm = *noise;

    std::uint64_t* counters[] = {&w.discard_nwid,  &w.discard_crypt,
                                 &w.discard_frag,  &w.discard_retry,
                                 &w.discard_misc,  &w.missed_beacon};
    for (std::size_t c = 0; c < std::size(counters) && 4 + c < fields.size();
         ++c) {
      const auto value = ToInt<std::uint64_t>(fields[4 + c]);
      if (!value) MalformedAt(line_no, "discard counters must be integers");
      *counters[c] = *value;
    }
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<DeviceCounters> ParseDeviceStats(std::string_view text,
                                             std::uint64_t captured_at_ns) {
  std::vector<DeviceCounters> out;
  const auto lines = SplitLines(text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const auto line = lines[i];
    if (IsBlank(line) || IsHeader(line)) continue;

    const auto [iface, rest] = SplitIface(line, line_no);
    const auto fields = SplitFields(rest);
    if (fields.size() != kDeviceCounterColumns) {
      MalformedAt(line_no, fmt::format("expected {} counters, got {}",
                                       kDeviceCounterColumns, fields.size()));
    }
    std::uint64_t values[kDeviceCounterColumns];
    for (int c = 0; c < kDeviceCounterColumns; ++c) {
      const auto v = ToInt<std::uint64_t>(fields[c]);
      if (!v) {
        MalformedAt(line_no, fmt::format("counter {} is not a non-negative "
                                         "integer: '{}'",
                                         c + 1, fields[c]));
      }
      values[c] = *v;
    }
    DeviceCounters d;
    d.iface = std::string(iface);
    d.rx_bytes = values[0];
    d.rx_packets = values[1];
    d.rx_dropped = values[3];
    d.tx_bytes = values[8];
    d.tx_packets = values[9];
    d.tx_errors = values[10];
    d.captured_at_ns = captured_at_ns;
    out.push_back(std::move(d));
  }
  return out;
}

ProtocolCounters ParseProtocolStats(std::string_view text,
                                    std::uint64_t captured_at_ns) {
  const auto lines = SplitLines(text);

  // netstat -s: "    15 segments retransmitted". Older net-tools spell it
  // "retransmited", so match on the common prefix.
  for (const auto line : lines) {
    const auto fields = SplitFields(line);
    if (fields.size() >= 3 && (fields[1] == "segments" || fields[1] == "segment") &&
        fields[2].starts_with("retransmit")) {
      if (const auto v = ToInt<std::uint64_t>(fields[0])) {
        return {*v, captured_at_ns};
      }
    }
  }

  // /proc/net/snmp: a "Tcp:" name row followed by a "Tcp:" value row.
  for (std::size_t i = 0; i + 1 < lines.size(); ++i) {
    const auto names = SplitFields(lines[i]);
    const auto values = SplitFields(lines[i + 1]);
    if (names.empty() || names[0] != "Tcp:" || values.empty() ||
        values[0] != "Tcp:" || names.size() != values.size()) {
      continue;
    }
    for (std::size_t c = 1; c < names.size(); ++c) {
      if (names[c] == "RetransSegs") {
        if (const auto v = ToInt<std::uint64_t>(values[c])) {
          return {*v, captured_at_ns};
        }
      }
    }
  }
  throw Error(Errc::kCounterNotFound,
              "no 'segments retransmitted' or RetransSegs counter found");
}

ThroughputBody ThroughputFromCounters(const DeviceCounters& prev,
                                      const DeviceCounters& curr) {
  if (prev.iface != curr.iface) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("counters from different interfaces '{}' and '{}'",
                            prev.iface, curr.iface));
  }
  if (curr.captured_at_ns <= prev.captured_at_ns) {
    throw Error(Errc::kZeroInterval,
                fmt::format("capture at {} ns is not after {} ns",
                            curr.captured_at_ns, prev.captured_at_ns));
  }
  if (curr.tx_bytes < prev.tx_bytes || curr.rx_bytes < prev.rx_bytes ||
      curr.tx_packets < prev.tx_packets || curr.rx_packets < prev.rx_packets) {
    throw Error(Errc::kCounterWentBackwards,
                fmt::format("counters for '{}' decreased (reset or wrap)",
                            curr.iface));
  }
  const double dt_s =
      static_cast<double>(curr.captured_at_ns - prev.captured_at_ns) / 1e9;
  const auto mbps = [dt_s](std::uint64_t bytes) {
    return 8.0 * static_cast<double>(bytes) / dt_s / 1e6;
  };
  return ThroughputBody(mbps(curr.tx_bytes - prev.tx_bytes),
                        mbps(curr.rx_bytes - prev.rx_bytes),
                        curr.tx_packets - prev.tx_packets,
                        curr.rx_packets - prev.rx_packets);
}

FilesystemStatsSource::FilesystemStatsSource(std::filesystem::path root,
                                             StatsPaths paths)
    : root_(std::move(root)), paths_(std::move(paths)) {}

namespace {

std::optional<std::string> ReadWhole(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) return std::nullopt;
  return ss.str();
}

}  // namespace

std::optional<std::string> FilesystemStatsSource::ReadWireless() {
  return ReadWhole(root_ / paths_.wireless);
}

std::optional<std::string> FilesystemStatsSource::ReadDevice() {
  return ReadWhole(root_ / paths_.device);
}

std::optional<std::string> FilesystemStatsSource::ReadProtocol() {
  return ReadWhole(root_ / paths_.protocol);
}

void ValidateCollectorConfig(const CollectorConfig& cfg) {
  if (cfg.iface.empty()) {
    throw Error(Errc::kInvalidArgument, "collector iface is empty");
  }
  if (!(cfg.rssi_rate_hz > 0.0) || !(cfg.generic_rate_hz > 0.0)) {
    throw Error(Errc::kInvalidArgument, "collector rates must be > 0");
  }
}

Collector::Collector(CollectorConfig cfg, std::unique_ptr<StatsSource> source)
    : cfg_(std::move(cfg)), source_(std::move(source)) {
  ValidateCollectorConfig(cfg_);
}

void Collector::Run(const SampleSink& sink, Clock& clock,
                    std::stop_token stop) {
  if (!source_->ReadDevice()) {
    throw Error(Errc::kSourceUnreadable,
                fmt::format("device stats unreadable for '{}'", cfg_.iface));
  }
  const auto period_ns = [](double hz) {
    return static_cast<std::uint64_t>(std::llround(1e9 / hz));
  };
  const std::uint64_t rssi_period = period_ns(cfg_.rssi_rate_hz);
  const std::uint64_t generic_period = period_ns(cfg_.generic_rate_hz);
  const std::uint64_t t0 = clock.NowNs();
  std::uint64_t rssi_tick = 0;
  std::uint64_t generic_tick = 0;

  while (!stop.stop_requested()) {
    const std::uint64_t next_rssi = t0 + rssi_tick * rssi_period;
    const std::uint64_t next_generic = t0 + generic_tick * generic_period;
    const std::uint64_t next = std::min(next_rssi, next_generic);
    if (!clock.SleepUntil(next, stop)) break;
    const std::uint64_t now = clock.NowNs();
    if (next == next_rssi) {
      RssiTick(sink, now);
      ++rssi_tick;
    }
    if (next == next_generic) {
      GenericTick(sink, now);
      ++generic_tick;
    }
  }
}

void Collector::RssiTick(const SampleSink& sink, std::uint64_t ts_ns) {
  const auto text = source_->ReadWireless();
  if (!text) {
    ++stats_.skipped_reads;
    LOG_EVERY_N(WARNING, 100) << "wireless stats unreadable; RSSI skipped";
    return;
  }
  std::vector<WirelessStatLine> lines;
  try {
    lines = ParseWirelessStats(*text);
  } catch (const Error& e) {
    ++stats_.skipped_reads;
    LOG_EVERY_N(WARNING, 100) << "wireless stats parse failed: " << e.what();
    return;
  }
  for (const auto& w : lines) {
    if (w.iface != cfg_.iface) continue;
    // Missing or out-of-range level means the driver has no value; never
    // substitute 0 dBm.
    if (w.level_dbm < kMinRssiDbm || w.level_dbm > kMaxRssiDbm) {
      LOG_EVERY_N(WARNING, 100)
          << "RSSI level " << w.level_dbm << " for " << w.iface
          << " outside dBm range; sample suppressed";
      return;
    }
    RssiBody body;
    body.rssi_dbm = w.level_dbm;
    body.link_quality = w.link_quality;
    if (w.noise_dbm != kNoiseNotReported && w.noise_dbm >= kMinRssiDbm &&
        w.noise_dbm <= kMaxRssiDbm) {
      body.noise_dbm = w.noise_dbm;
    }
    sink(MetricSample{ts_ns, cfg_.side, cfg_.iface, body});
    ++stats_.rssi_samples;
    return;
  }
}

void Collector::GenericTick(const SampleSink& sink, std::uint64_t ts_ns) {
  const auto dev_text = source_->ReadDevice();
  if (!dev_text) {
    ++stats_.skipped_reads;
    LOG_EVERY_N(WARNING, 10) << "device stats unreadable; tick skipped";
    return;
  }
  std::optional<DeviceCounters> curr;
  try {
    for (auto& d : ParseDeviceStats(*dev_text, ts_ns)) {
      if (d.iface == cfg_.iface) curr = std::move(d);
    }
  } catch (const Error& e) {
    ++stats_.skipped_reads;
    LOG_EVERY_N(WARNING, 10) << "device stats parse failed: " << e.what();
    return;
  }
  if (!curr) {
    ++stats_.skipped_reads;
    LOG_EVERY_N(WARNING, 10) << "interface " << cfg_.iface
                             << " missing from device stats";
    return;
  }

  std::optional<std::uint64_t> retransmits;
  if (const auto proto_text = source_->ReadProtocol()) {
    try {
      retransmits = ParseProtocolStats(*proto_text, ts_ns).segments_retransmitted;
    } catch (const Error& e) {
      LOG_EVERY_N(WARNING, 10) << "protocol stats: " << e.what();
    }
  }
  if (!retransmits) {
    ++stats_.skipped_reads;
    retransmits = prev_retransmits_;
  }

  bool rate_reset = false;
  bool reset = false;
  if (prev_device_) {
    const auto& p = *prev_device_;
    rate_reset = curr->rx_bytes < p.rx_bytes || curr->tx_bytes < p.tx_bytes ||
                 curr->rx_packets < p.rx_packets ||
                 curr->tx_packets < p.tx_packets;
    reset = rate_reset || curr->rx_dropped < p.rx_dropped ||
            curr->tx_errors < p.tx_errors;
  }
  if (prev_retransmits_ && retransmits && *retransmits < *prev_retransmits_) {
    reset = true;
  }

  if (reset) {
    ++epoch_;
    ++stats_.counter_resets;
    LOG(WARNING) << "counter reset on " << cfg_.iface << "; starting epoch "
                 << epoch_;
  }
  if (prev_device_ && !rate_reset) {
    sink(MetricSample{ts_ns, cfg_.side, cfg_.iface,
                      ThroughputFromCounters(*prev_device_, *curr)});
    ++stats_.throughput_samples;
  }

  if (retransmits) {
    ErrorBody errors;
    errors.retransmits_cum = *retransmits;
    errors.rx_dropped_cum = curr->rx_dropped;
    errors.tx_errors_cum = curr->tx_errors;
    errors.epoch = epoch_;
    errors.epoch_start = reset;
    sink(MetricSample{ts_ns, cfg_.side, cfg_.iface, errors});
    ++stats_.error_samples;
  }
  prev_device_ = std::move(curr);
  prev_retransmits_ = retransmits;
}

CollectorStats RunCollector(const CollectorConfig& cfg, const SampleSink& sink,
                            Clock& clock, std::stop_token stop) {
  Collector collector(
      cfg, std::make_unique<FilesystemStatsSource>(cfg.stats_source_root,
                                                   cfg.paths));
  collector.Run(sink, clock, stop);
  return collector.stats();
}

}  // namespace netmeter
