#include "netmeter/trace_codec.h"

#include <cmath>

#include <fmt/format.h>

#include <nlohmann/json.hpp>

#include "json_config.h"
#include "netmeter/error.h"

namespace netmeter {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;
using internal::CaseFromJson;
using internal::CaseToJson;

// Offset of a key inside the raw line, so semantic errors point somewhere
// useful. Falls back to 0.
std::size_t KeyOffset(std::string_view line, std::string_view key) {
  const std::string quoted = fmt::format("\"{}\"", key);
  const auto pos = line.find(quoted);
  return pos == std::string_view::npos ? 0 : pos;
}

[[noreturn]] void Malformed(std::string_view line, std::string_view key,
                            const std::string& why) {
  throw Error(Errc::kMalformedLine, why).WithByteOffset(KeyOffset(line, key));
}

template <typename T>
T Field(const json& obj, std::string_view line, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) {
    Malformed(line, "", fmt::format("missing field '{}'", key));
  }
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw std::invalid_argument("not a number");
    } else if constexpr (std::is_integral_v<T> && !std::is_same_v<T, bool>) {
      if (!it->is_number_unsigned()) {
        throw std::invalid_argument("not a non-negative integer");
      }
    }
    return it->get<T>();
  } catch (const std::exception& e) {
    Malformed(line, key, fmt::format("field '{}': {}", key, e.what()));
  }
}

template <typename T>
std::optional<T> OptionalField(const json& obj, std::string_view line,
                               const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return Field<T>(obj, line, key);
}

json ParseObject(std::string_view line) {
  if (line.empty()) {
    throw Error(Errc::kMalformedLine, "empty line").WithByteOffset(0);
  }
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    throw Error(Errc::kMalformedLine, e.what()).WithByteOffset(offset);
  }
  if (!j.is_object()) {
    throw Error(Errc::kMalformedLine, "record is not an object")
        .WithByteOffset(0);
  }
  return j;
}

}  // namespace

std::string EncodeRecord(const MetricSample& sample) {
  ordered_json j;
  j["ts_ns"] = sample.ts_ns;
  j["side"] = ToString(sample.side);
  j["iface"] = sample.iface;
  j["type"] = ToString(sample.kind());
  std::visit(
      [&j](const auto& body) {
        using Body = std::decay_t<decltype(body)>;
        if constexpr (std::is_same_v<Body, RssiBody>) {
          j["rssi_dbm"] = body.rssi_dbm;
          if (body.link_quality) j["link_quality"] = *body.link_quality;
          if (body.noise_dbm) j["noise_dbm"] = *body.noise_dbm;
        } else if constexpr (std::is_same_v<Body, ThroughputBody>) {
          j["tx_mbps"] = body.tx_mbps();
          j["rx_mbps"] = body.rx_mbps();
          j["total_mbps"] = body.total_mbps();
          j["tx_packets_delta"] = body.tx_packets_delta();
          j["rx_packets_delta"] = body.rx_packets_delta();
        } else if constexpr (std::is_same_v<Body, DelayBody>) {
          if (body.timed_out()) {
            j["rtt_ms"] = -1;
          } else {
            j["rtt_ms"] = body.rtt_ms();
          }
          j["timed_out"] = body.timed_out();
        } else if constexpr (std::is_same_v<Body, ErrorBody>) {
          j["retransmits_cum"] = body.retransmits_cum;
          j["rx_dropped_cum"] = body.rx_dropped_cum;
          j["tx_errors_cum"] = body.tx_errors_cum;
          j["epoch"] = body.epoch;
          j["epoch_start"] = body.epoch_start;
        } else if constexpr (std::is_same_v<Body, MotionBody>) {
          j["linear_mps"] = body.linear_mps;
          j["angular_rps"] = body.angular_rps;
        }
      },
      sample.body);
  return j.dump();
}

MetricSample DecodeRecord(std::string_view line) {
  const json j = ParseObject(line);

  const auto type_it = j.find("type");
  if (type_it == j.end() || !type_it->is_string()) {
    Malformed(line, "type", "missing or non-string 'type'");
  }
  const std::string type = type_it->get<std::string>();
  const auto kind = ParseMetricKind(type);
  if (!kind) {
    throw Error(Errc::kUnknownType, fmt::format("unknown record type '{}'", type))
        .WithRaw(std::string(line));
  }

  MetricSample s;
  s.ts_ns = Field<std::uint64_t>(j, line, "ts_ns");
  const auto side = Field<std::string>(j, line, "side");
  if (side == "robot") {
    s.side = Side::kRobot;
  } else if (side == "station") {
    s.side = Side::kStation;
  } else {
    Malformed(line, "side", fmt::format("bad side '{}'", side));
  }
  s.iface = Field<std::string>(j, line, "iface");
  if (s.iface.empty()) Malformed(line, "iface", "empty iface");

  try {
    switch (*kind) {
      case MetricKind::kRssi: {
        RssiBody b;
        b.rssi_dbm = Field<double>(j, line, "rssi_dbm");
        b.link_quality = OptionalField<double>(j, line, "link_quality");
        b.noise_dbm = OptionalField<double>(j, line, "noise_dbm");
        s.body = b;
        break;
      }
      case MetricKind::kThroughput: {
        ThroughputBody b(Field<double>(j, line, "tx_mbps"),
                         Field<double>(j, line, "rx_mbps"),
                         Field<std::uint64_t>(j, line, "tx_packets_delta"),
                         Field<std::uint64_t>(j, line, "rx_packets_delta"));
        const auto total = OptionalField<double>(j, line, "total_mbps");
        if (total && std::abs(*total - b.total_mbps()) > 1e-9) {
          Malformed(line, "total_mbps", "total_mbps != tx_mbps + rx_mbps");
        }
        s.body = b;
        break;
      }
      case MetricKind::kDelay: {
        const double rtt = Field<double>(j, line, "rtt_ms");
        const bool timed_out = Field<bool>(j, line, "timed_out");
        if (timed_out != (rtt == DelayBody::kSentinel)) {
          Malformed(line, "timed_out", "timed_out must equal (rtt_ms == -1)");
        }
        s.body = timed_out ? DelayBody::TimedOut() : DelayBody::Measured(rtt);
        break;
      }
      case MetricKind::kErrors: {
        ErrorBody b;
        b.retransmits_cum = Field<std::uint64_t>(j, line, "retransmits_cum");
        b.rx_dropped_cum = Field<std::uint64_t>(j, line, "rx_dropped_cum");
        b.tx_errors_cum = Field<std::uint64_t>(j, line, "tx_errors_cum");
        b.epoch =
            OptionalField<std::uint32_t>(j, line, "epoch").value_or(0);
        b.epoch_start =
            OptionalField<bool>(j, line, "epoch_start").value_or(false);
        s.body = b;
        break;
      }
      case MetricKind::kMotion: {
        MotionBody b;
        b.linear_mps = Field<double>(j, line, "linear_mps");
        b.angular_rps = Field<double>(j, line, "angular_rps");
        s.body = b;
        break;
      }
    }
    ValidateSample(s);
  } catch (const Error& e) {
    if (e.code() == Errc::kInvalidArgument) {
      Malformed(line, "type", e.message());
    }
    throw;
  }
  return s;
}

std::string EncodeHeader(const TraceHeader& header) {
  ordered_json j;
  j["v"] = kTraceFormatVersion;
  j["case"] = CaseToJson(header.experiment);
  j["start_utc"] = header.start_utc;
  j["origin"] = ToString(header.origin);
  if (header.seed) {
    j["seed"] = *header.seed;
  } else {
    j["seed"] = nullptr;
  }
  return j.dump();
}

TraceHeader DecodeHeader(std::string_view line) {
  try {
    const json j = ParseObject(line);
    if (j.value("v", 0) != kTraceFormatVersion) {
      throw Error(Errc::kMissingHeader, "header version must be 1");
    }
    if (j.contains("type")) {
      throw Error(Errc::kMissingHeader, "first line is a record, not a header");
    }
    TraceHeader h;
    h.experiment = CaseFromJson(j.at("case"));
    h.start_utc = j.at("start_utc").get<std::string>();
    h.origin = ParseOrigin(j.at("origin").get<std::string>());
    if (const auto it = j.find("seed"); it != j.end() && !it->is_null()) {
      h.seed = it->get<std::uint64_t>();
    }
    ValidateHeader(h);
    return h;
  } catch (const Error& e) {
    if (e.code() == Errc::kMissingHeader) throw;
    throw Error(Errc::kMissingHeader, e.message());
  } catch (const std::exception& e) {
    throw Error(Errc::kMissingHeader, e.what());
  }
}

}  // namespace netmeter
