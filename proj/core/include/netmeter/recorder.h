#ifndef NETMETER_RECORDER_H_
#define NETMETER_RECORDER_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <ostream>
#include <string_view>
#include <tuple>
#include <vector>

#include "netmeter/metrics.h"

namespace netmeter {

// Append-only trace sink. One header line, then one encoded record per line.
// Append() is safe to call from several producer threads; lines are written
// whole, in arrival order, and flushed before Append() returns.
class TraceWriter {
 public:
  // Creates or truncates `path`. Throws Errc::kIo.
  explicit TraceWriter(const std::filesystem::path& path);
  explicit TraceWriter(std::unique_ptr<std::ostream> out);

  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  // Throws Errc::kUsage if a header was already written.
  void WriteHeader(const TraceHeader& header);

  // Throws Errc::kUsage before the header or when ts_ns goes backwards within
  // a (side, iface, type) stream; Errc::kIo when the write fails.
  void Append(const MetricSample& sample);

  // A sink forwarding to Append(); the writer must outlive it.
  SampleSink AsSink();

  std::uint64_t records_written() const;

 private:
  void WriteLine(std::string_view line);

  mutable std::mutex mu_;
  std::unique_ptr<std::ostream> out_;
  bool header_written_ = false;
  std::uint64_t records_ = 0;
  std::map<std::tuple<Side, std::string, MetricKind>, std::uint64_t> last_ts_;
};

enum class ReadMode {
  kStrict,   // a corrupt line is an error carrying its line number
  kLenient,  // corrupt lines are skipped and counted
};

struct TraceReadReport {
  // Final line without a newline that failed to decode (crash artifact).
  std::size_t truncated_tail_dropped = 0;
  // Lenient mode only.
  std::size_t corrupt_skipped = 0;
  // Records whose type tag this version does not know; skipped in both modes.
  std::size_t unknown_type_skipped = 0;
  std::vector<std::size_t> skipped_lines;
};

struct LoadedTrace {
  TraceFile trace;
  TraceReadReport report;
};

// Throws Errc::kMissingHeader for an empty file or invalid first line,
// Errc::kMalformedLine (strict mode) and Errc::kIo.
LoadedTrace ParseTrace(std::string_view text, ReadMode mode = ReadMode::kStrict);
LoadedTrace ReadTrace(const std::filesystem::path& path,
                      ReadMode mode = ReadMode::kStrict);

// Writes a whole trace (header + records) to `path`.
void WriteTrace(const std::filesystem::path& path, const TraceFile& trace);
std::string SerializeTrace(const TraceFile& trace);

}  // namespace netmeter

#endif  // NETMETER_RECORDER_H_
