#ifndef NETMETER_ANALYZER_H_
#define NETMETER_ANALYZER_H_

// Per-case summary statistics over a trace and cross-case comparison tables.
//
// Statistics use the sample standard deviation (n - 1 denominator; 0 for a
// single sample). Delay statistics exclude timed-out probes, which are
// counted only in loss_pct. retransmits_cum is the session delta of the
// host-wide retransmit counter, summed over counter epochs.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "netmeter/metrics.h"

namespace netmeter {

enum class MotionMode { kAll, kStaticOnly, kMovingOnly };

std::string_view ToString(MotionMode mode);
MotionMode ParseMotionMode(std::string_view text);

// Half-open [start_ns, end_ns) interval on the session clock.
struct TimeInterval {
  std::uint64_t start_ns = 0;
  std::uint64_t end_ns = 0;
};

// Parses a static-intervals sidecar: one `start_s end_s` pair per line,
// '#' comments. Throws Errc::kMalformedLine with the line number.
std::vector<TimeInterval> ParseStaticIntervals(std::string_view text);

struct MotionFilter {
  MotionMode mode = MotionMode::kAll;
  // When set, these intervals define "static" and everything else is
  // "moving"; otherwise the trace's motion records are used.
  std::optional<std::vector<TimeInterval>> static_intervals;
};

struct Stat {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
};

// Mean and sample standard deviation. Empty input yields nullopt.
std::optional<Stat> ComputeStat(const std::vector<double>& values);

struct SampleCounts {
  std::size_t rssi_robot = 0;
  std::size_t rssi_station = 0;
  std::size_t throughput = 0;
  std::size_t delay = 0;
  std::size_t delay_timeouts = 0;
  std::size_t errors = 0;
};

// Absent fields are the "N/A" cells: no samples of that metric survived the
// filter.
struct SummaryRow {
  std::string label;
  std::optional<int> case_id;
  bool baseline = false;
  std::optional<Stat> throughput_mbps;
  std::optional<Stat> delay_ms;
  std::optional<double> loss_pct;
  std::optional<Stat> rssi_robot_dbm;
  std::optional<Stat> rssi_station_dbm;
  std::optional<std::uint64_t> retransmits_cum;
  SampleCounts counts;
};

// Throws Errc::kNoMotionData when a static/moving filter is requested but no
// motion data exists, and Errc::kEmptyAfterFilter when no metric samples
// remain.
SummaryRow Summarize(const TraceFile& trace, const MotionFilter& filter = {});

// {static row, moving row}. Throws Errc::kNoMotionData when the trace has no
// motion data or no static samples; Errc::kEmptyAfterFilter when it has no
// moving samples.
std::pair<SummaryRow, SummaryRow> StaticVsMoving(
    const TraceFile& trace,
    std::optional<std::vector<TimeInterval>> static_intervals = std::nullopt);

struct BestFlags {
  bool throughput = false;  // max mean
  bool delay = false;       // min mean
  bool loss = false;        // min
  bool rssi_robot = false;  // max mean
  bool rssi_station = false;
  bool retransmits = false;  // min
};

struct ComparisonTable {
  std::vector<SummaryRow> rows;
  std::vector<BestFlags> best;  // parallel to rows
};

// Flags the best value per column among non-baseline rows; exact ties flag
// every tied row. Rows lacking a value do not compete in that column.
ComparisonTable CompareCases(std::vector<SummaryRow> rows);

// Aligned plain-text table; best cells are suffixed with '*'.
std::string RenderTable(const ComparisonTable& table);
std::string RenderCsv(const ComparisonTable& table);
// One JSON object per line.
std::string RenderJson(const ComparisonTable& table);

}  // namespace netmeter

#endif  // NETMETER_ANALYZER_H_
