#ifndef NETMETER_TRACE_CODEC_H_
#define NETMETER_TRACE_CODEC_H_

// Newline-delimited text encoding of trace headers and samples.
//
//   header: {"v":1,"case":{...},"start_utc":"...","origin":"measured|simulated","seed":<u64|null>}
//   record: {"ts_ns":<u64>,"side":"robot|station","iface":"...","type":"rssi|throughput|delay|errors|motion", ...}
//
// Field order is not significant and unknown fields are ignored on read.

#include <string>
#include <string_view>

#include "netmeter/metrics.h"

namespace netmeter {

// One newline-free line. Total for samples that satisfy ValidateSample.
std::string EncodeRecord(const MetricSample& sample);

// Throws Errc::kMalformedLine (with byte offset) for unparsable or
// inconsistent lines and Errc::kUnknownType (with the raw line) for records
// whose type tag this version does not know.
MetricSample DecodeRecord(std::string_view line);

std::string EncodeHeader(const TraceHeader& header);

// Throws Errc::kMissingHeader when the line is not a valid header object.
TraceHeader DecodeHeader(std::string_view line);

}  // namespace netmeter

#endif  // NETMETER_TRACE_CODEC_H_
