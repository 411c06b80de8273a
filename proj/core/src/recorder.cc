#include "netmeter/recorder.h"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <glog/logging.h>

#include "netmeter/config.h"
#include "netmeter/error.h"
#include "netmeter/trace_codec.h"

namespace netmeter {

TraceWriter::TraceWriter(const std::filesystem::path& path) {
  auto file = std::make_unique<std::ofstream>(
      path, std::ios::out | std::ios::trunc | std::ios::binary);
  if (!*file) {
    throw Error(Errc::kIo,
                fmt::format("cannot open '{}' for writing", path.string()));
  }
  out_ = std::move(file);
}

TraceWriter::TraceWriter(std::unique_ptr<std::ostream> out)
    : out_(std::move(out)) {
  if (!out_) throw Error(Errc::kInvalidArgument, "null output stream");
}

void TraceWriter::WriteHeader(const TraceHeader& header) {
  ValidateHeader(header);
  std::lock_guard lock(mu_);
  if (header_written_) {
    throw Error(Errc::kUsage, "trace header already written");
  }
  WriteLine(EncodeHeader(header));
  header_written_ = true;
}

void TraceWriter::Append(const MetricSample& sample) {
  ValidateSample(sample);
  const std::string line = EncodeRecord(sample);
  std::lock_guard lock(mu_);
  if (!header_written_) {
    throw Error(Errc::kUsage, "append before trace header");
  }
  const auto key = std::make_tuple(sample.side, sample.iface, sample.kind());
  auto [it, inserted] = last_ts_.try_emplace(key, sample.ts_ns);
  if (!inserted) {
    if (sample.ts_ns < it->second) {
      throw Error(Errc::kUsage,
                  fmt::format("timestamp {} ns precedes {} ns in stream "
                              "({}, {}, {})",
                              sample.ts_ns, it->second, ToString(sample.side),
                              sample.iface, ToString(sample.kind())));
    }
    it->second = sample.ts_ns;
  }
  WriteLine(line);
  ++records_;
}

SampleSink TraceWriter::AsSink() {
  return [this](const MetricSample& s) { Append(s); };
}

std::uint64_t TraceWriter::records_written() const {
  std::lock_guard lock(mu_);
  return records_;
}

void TraceWriter::WriteLine(std::string_view line) {
  out_->write(line.data(), static_cast<std::streamsize>(line.size()));
  out_->put('\n');
  out_->flush();
  if (!*out_) throw Error(Errc::kIo, "trace write failed");
}

LoadedTrace ParseTrace(std::string_view text, ReadMode mode) {
  LoadedTrace loaded;
  std::vector<std::string_view> lines;
  const bool ends_with_newline = !text.empty() && text.back() == '\n';
  while (!text.empty()) {
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    text.remove_prefix(nl + 1);
  }
  if (lines.empty() || lines.front().empty()) {
    throw Error(Errc::kMissingHeader, "trace has no header line").WithLine(1);
  }
  try {
    loaded.trace.header = DecodeHeader(lines.front());
  } catch (Error& e) {
    throw e.WithLine(1);
  }

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t line_no = i + 1;
    const bool is_tail = i + 1 == lines.size() && !ends_with_newline;
    if (lines[i].empty() && !is_tail) {
      if (mode == ReadMode::kStrict) {
        throw Error(Errc::kMalformedLine, fmt::format("line {}: empty", line_no))
            .WithLine(line_no);
      }
      ++loaded.report.corrupt_skipped;
      loaded.report.skipped_lines.push_back(line_no);
      continue;
    }
    if (lines[i].empty()) continue;
    try {
      loaded.trace.records.push_back(DecodeRecord(lines[i]));
    } catch (Error& e) {
      if (e.code() == Errc::kUnknownType) {
        ++loaded.report.unknown_type_skipped;
        loaded.report.skipped_lines.push_back(line_no);
        continue;
      }
      if (is_tail) {
        LOG(WARNING) << "dropping truncated final trace line " << line_no;
        ++loaded.report.truncated_tail_dropped;
        loaded.report.skipped_lines.push_back(line_no);
        continue;
      }
      if (mode == ReadMode::kStrict) {
        throw Error(e.code(), fmt::format("line {}: {}", line_no, e.message()))
            .WithLine(line_no)
            .WithByteOffset(e.byte_offset().value_or(0));
      }
      ++loaded.report.corrupt_skipped;
      loaded.report.skipped_lines.push_back(line_no);
    }
  }
  return loaded;
}

LoadedTrace ReadTrace(const std::filesystem::path& path, ReadMode mode) {
  return ParseTrace(ReadTextFile(path), mode);
}

std::string SerializeTrace(const TraceFile& trace) {
  std::string out = EncodeHeader(trace.header);
  out.push_back('\n');
  for (const auto& r : trace.records) {
    out += EncodeRecord(r);
    out.push_back('\n');
  }
  return out;
}

void WriteTrace(const std::filesystem::path& path, const TraceFile& trace) {
  TraceWriter writer(path);
  writer.WriteHeader(trace.header);
  for (const auto& r : trace.records) writer.Append(r);
}

}  // namespace netmeter
