#include "netmeter/recorder.h"

#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "netmeter/error.h"
#include "netmeter/trace_codec.h"
#include "support/oracles.h"

namespace netmeter {
namespace {

TraceHeader Header() {
  TraceHeader h;
  h.experiment = CatalogCase(7);
  h.start_utc = "2026-03-01T10:00:00Z";
  return h;
}

MetricSample Rssi(std::uint64_t ts, double dbm, Side side = Side::kRobot) {
  return {ts, side, side == Side::kRobot ? "iface2" : "iface4",
          RssiBody{dbm, std::nullopt, std::nullopt}};
}

MetricSample Delay(std::uint64_t ts, double rtt) {
  return {ts, Side::kRobot, "iface2",
          rtt < 0 ? DelayBody::TimedOut() : DelayBody::Measured(rtt)};
}

TraceFile SmallTrace() {
  TraceFile t;
  t.header = Header();
  t.records = {Rssi(0, -50), Rssi(0, -52, Side::kStation), Delay(0, 4.5),
               Rssi(100, -51), Delay(1000, -1)};
  return t;
}

Errc ParseError(const std::string& text, std::size_t* line = nullptr) {
  try {
    ParseTrace(text);
  } catch (const Error& e) {
    if (line) *line = e.line().value_or(0);
    return e.code();
  }
  ADD_FAILURE() << "parsed without error";
  return Errc::kInvalidArgument;
}

TEST(TraceWriterTest, HeaderFirstThenRecords) {
  auto* raw = new std::ostringstream;
  TraceWriter w{std::unique_ptr<std::ostream>(raw)};
  EXPECT_THROW(w.Append(Rssi(0, -50)), Error);
  w.WriteHeader(Header());
  EXPECT_THROW(w.WriteHeader(Header()), Error);
  w.Append(Rssi(0, -50));
  w.Append(Delay(5, 3.0));
  EXPECT_EQ(w.records_written(), 2u);
  const auto loaded = ParseTrace(raw->str());
  EXPECT_EQ(loaded.trace.header, Header());
  ASSERT_EQ(loaded.trace.records.size(), 2u);
  EXPECT_EQ(loaded.trace.records[1], Delay(5, 3.0));
}

TEST(TraceWriterTest, RejectsBackwardsTimestampWithinStream) {
  auto* raw = new std::ostringstream;
  TraceWriter w{std::unique_ptr<std::ostream>(raw)};
  w.WriteHeader(Header());
  w.Append(Rssi(100, -50));
  // Other streams keep their own order.
  w.Append(Rssi(50, -50, Side::kStation));
  w.Append(Delay(10, 2.0));
  w.Append(Rssi(100, -49));
  try {
    w.Append(Rssi(99, -50));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kUsage);
  }
}

TEST(TraceWriterTest, ConcurrentAppendsKeepLinesWhole) {
  testing::TempDir dir;
  {
    TraceWriter w(dir / "c.trace");
    w.WriteHeader(Header());
    auto sink = w.AsSink();
    std::vector<std::thread> threads;
    for (int t = 0; t < 4; ++t) {
      threads.emplace_back([&, t] {
        const Side side = t % 2 ? Side::kStation : Side::kRobot;
        for (std::uint64_t i = 0; i < 250; ++i) {
          MetricSample s = Rssi(i, -40.0 - t, side);
          s.iface = "if" + std::to_string(t);
          sink(s);
        }
      });
    }
    for (auto& th : threads) th.join();
    EXPECT_EQ(w.records_written(), 1000u);
  }
  const auto loaded = ReadTrace(dir / "c.trace");
  EXPECT_EQ(loaded.trace.records.size(), 1000u);
}

TEST(TraceWriterTest, UnwritablePathIsIoError) {
  try {
    TraceWriter w("/nonexistent-dir/x.trace");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kIo);
  }
}

TEST(TraceReadTest, FileRoundTripIsExact) {
  testing::TempDir dir;
  const TraceFile t = SmallTrace();
  WriteTrace(dir / "t.trace", t);
  EXPECT_EQ(testing::Slurp(dir / "t.trace"), SerializeTrace(t));
  const auto loaded = ReadTrace(dir / "t.trace");
  EXPECT_EQ(loaded.trace.header, t.header);
  EXPECT_EQ(loaded.trace.records, t.records);
  EXPECT_EQ(loaded.report.corrupt_skipped, 0u);
  EXPECT_EQ(SerializeTrace(loaded.trace), SerializeTrace(t));
}

TEST(TraceReadTest, EmptyOrHeaderlessIsMissingHeader) {
  EXPECT_EQ(ParseError(""), Errc::kMissingHeader);
  EXPECT_EQ(ParseError("\n"), Errc::kMissingHeader);
  EXPECT_EQ(ParseError(EncodeRecord(Rssi(0, -50)) + "\n"),
            Errc::kMissingHeader);
}

TEST(TraceReadTest, HeaderOnlyIsEmptyTrace) {
  const auto loaded = ParseTrace(EncodeHeader(Header()) + "\n");
  EXPECT_TRUE(loaded.trace.records.empty());
}

TEST(TraceReadTest, StrictModeReportsLineNumber) {
  std::string text = SerializeTrace(SmallTrace());
  const auto third_nl = [&] {
    std::size_t pos = 0;
    for (int i = 0; i < 3; ++i) pos = text.find('\n', pos) + 1;
    return pos;
  }();
  text.insert(third_nl, "{\"ts_ns\":7,\"side\":\"robot\"\n");
  std::size_t line = 0;
  EXPECT_EQ(ParseError(text, &line), Errc::kMalformedLine);
  EXPECT_EQ(line, 4u);
}

TEST(TraceReadTest, LenientModeSkipsAndCounts) {
  std::string text = SerializeTrace(SmallTrace());
  text += "garbage\n\n";
  text += EncodeRecord(Delay(2000, 7.0)) + "\n";
  const auto loaded = ParseTrace(text, ReadMode::kLenient);
  EXPECT_EQ(loaded.trace.records.size(), 6u);
  EXPECT_EQ(loaded.report.corrupt_skipped, 2u);
  EXPECT_EQ(loaded.report.skipped_lines, (std::vector<std::size_t>{7, 8}));
}

TEST(TraceReadTest, TruncatedTailDroppedInBothModes) {
  std::string text = SerializeTrace(SmallTrace());
  const std::string last = EncodeRecord(Delay(3000, 9.0));
  text += last.substr(0, last.size() / 2);
  for (ReadMode mode : {ReadMode::kStrict, ReadMode::kLenient}) {
    const auto loaded = ParseTrace(text, mode);
    EXPECT_EQ(loaded.trace.records.size(), 5u);
    EXPECT_EQ(loaded.report.truncated_tail_dropped, 1u);
    EXPECT_EQ(loaded.report.corrupt_skipped, 0u);
  }
}

TEST(TraceReadTest, CompleteTailWithoutNewlineIsKept) {
  std::string text = SerializeTrace(SmallTrace());
  text += EncodeRecord(Delay(3000, 9.0));
  EXPECT_EQ(ParseTrace(text).trace.records.size(), 6u);
}

TEST(TraceReadTest, UnknownTypesSkipped) {
  std::string text = SerializeTrace(SmallTrace());
  text +=
      "{\"ts_ns\":5000,\"side\":\"robot\",\"iface\":\"iface2\","
      "\"type\":\"battery\",\"pct\":80}\n";
  for (ReadMode mode : {ReadMode::kStrict, ReadMode::kLenient}) {
    const auto loaded = ParseTrace(text, mode);
    EXPECT_EQ(loaded.trace.records.size(), 5u);
    EXPECT_EQ(loaded.report.unknown_type_skipped, 1u);
  }
}

TEST(TraceReadTest, CrLfAccepted) {
  std::string text = SerializeTrace(SmallTrace());
  std::string crlf;
  for (char c : text) {
    if (c == '\n') crlf += '\r';
    crlf += c;
  }
  EXPECT_EQ(ParseTrace(crlf).trace.records, SmallTrace().records);
}

TEST(TraceReadTest, MissingFileIsIoError) {
  try {
    ReadTrace("/nonexistent/trace");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kIo);
  }
}

}  // namespace
}  // namespace netmeter
