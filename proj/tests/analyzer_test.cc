#include "netmeter/analyzer.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "netmeter/error.h"
#include "support/oracles.h"

namespace netmeter {
namespace {

constexpr std::uint64_t kSec = 1'000'000'000ull;

MetricSample At(std::uint64_t ts, SampleBody body, Side side = Side::kRobot) {
  return {ts, side, "iface2", std::move(body)};
}

TraceFile TraceFor(int case_id, std::vector<MetricSample> records) {
  TraceFile t;
  t.header.experiment = CatalogCase(case_id);
  t.header.start_utc = "2026-03-01T10:00:00Z";
  t.records = std::move(records);
  return t;
}

Errc SummarizeError(const TraceFile& t, const MotionFilter& f) {
  try {
    Summarize(t, f);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "summarized without error";
  return Errc::kInvalidArgument;
}

TEST(StatTest, WorkedExample) {
  const auto s = ComputeStat({10, 20, 30});
  ASSERT_TRUE(s);
  EXPECT_DOUBLE_EQ(s->mean, 20.0);
  EXPECT_DOUBLE_EQ(s->std, 10.0);
  EXPECT_EQ(s->n, 3u);
}

TEST(StatTest, SingleAndEmpty) {
  EXPECT_FALSE(ComputeStat({}));
  const auto s = ComputeStat({4.2});
  ASSERT_TRUE(s);
  EXPECT_EQ(s->std, 0.0);
}

TEST(StatTest, MatchesNaiveOracle) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> n(100.0, 15.0);
  std::vector<double> xs(5000);
  for (auto& x : xs) x = n(gen);
  const auto s = ComputeStat(xs);
  const auto m = testing::NaiveMoments(xs);
  EXPECT_NEAR(s->mean, m.mean, 1e-9 * std::abs(m.mean));
  EXPECT_NEAR(s->std, m.std, 1e-9 * m.std);
}

TEST(SummarizeTest, LossFromSentinels) {
  std::vector<MetricSample> rec;
  for (int i = 0; i < 1000; ++i) {
    rec.push_back(At(i * kSec, i % 125 < 12 ? DelayBody::TimedOut()
                                            : DelayBody::Measured(5.0 + i % 7)));
  }
  const auto row = Summarize(TraceFor(7, rec));
  ASSERT_TRUE(row.loss_pct);
  EXPECT_DOUBLE_EQ(*row.loss_pct, 9.6);
  EXPECT_EQ(row.counts.delay, 1000u);
  EXPECT_EQ(row.counts.delay_timeouts, 96u);
  EXPECT_EQ(row.delay_ms->n, 904u);
}

TEST(SummarizeTest, SentinelsDoNotMoveDelayStats) {
  std::vector<MetricSample> clean = {At(0, DelayBody::Measured(10)),
                                     At(1, DelayBody::Measured(20)),
                                     At(2, DelayBody::Measured(30))};
  auto noisy = clean;
  for (int i = 0; i < 5; ++i) noisy.push_back(At(3 + i, DelayBody::TimedOut()));
  const auto a = Summarize(TraceFor(7, clean));
  const auto b = Summarize(TraceFor(7, noisy));
  EXPECT_EQ(a.delay_ms->mean, b.delay_ms->mean);
  EXPECT_EQ(a.delay_ms->std, b.delay_ms->std);
  EXPECT_DOUBLE_EQ(b.delay_ms->mean, 20.0);
  EXPECT_DOUBLE_EQ(b.delay_ms->std, 10.0);
  EXPECT_DOUBLE_EQ(*a.loss_pct, 0.0);
  EXPECT_DOUBLE_EQ(*b.loss_pct, 62.5);
}

TEST(SummarizeTest, AllTimedOutHasNoDelayStat) {
  const auto row = Summarize(TraceFor(7, {At(0, DelayBody::TimedOut()),
                                          At(1, DelayBody::TimedOut())}));
  EXPECT_FALSE(row.delay_ms);
  EXPECT_DOUBLE_EQ(*row.loss_pct, 100.0);
}

TEST(SummarizeTest, SeparatesRssiBySideAndLabelsRow) {
  const auto row = Summarize(TraceFor(
      3, {At(0, RssiBody{-60, {}, {}}, Side::kStation),
          At(1, RssiBody{-62, {}, {}}, Side::kStation),
          At(1, ThroughputBody(10, 5, 1, 1))}));
  EXPECT_EQ(row.label, "Case 3 (Robot-AP)");
  EXPECT_FALSE(row.baseline);
  EXPECT_FALSE(row.rssi_robot_dbm);
  EXPECT_DOUBLE_EQ(row.rssi_station_dbm->mean, -61.0);
  EXPECT_DOUBLE_EQ(row.throughput_mbps->mean, 15.0);
  EXPECT_FALSE(row.retransmits_cum);
  EXPECT_FALSE(row.loss_pct);
  EXPECT_TRUE(Summarize(TraceFor(1, {At(0, DelayBody::Measured(1))})).baseline);
}

TEST(SummarizeTest, RetransmitsSumAcrossEpochs) {
  const auto err = [](std::uint64_t cum, std::uint32_t epoch, bool start) {
    ErrorBody b;
    b.retransmits_cum = cum;
    b.epoch = epoch;
    b.epoch_start = start;
    return b;
  };
  // Epoch 0 goes 1000 -> 1040, the counter resets, epoch 1 goes 0 -> 25.
  const auto row = Summarize(TraceFor(
      7, {At(0, err(1000, 0, true)), At(1, err(1010, 0, false)),
          At(2, err(1040, 0, false)), At(3, err(0, 1, true)),
          At(4, err(25, 1, false))}));
  ASSERT_TRUE(row.retransmits_cum);
  EXPECT_EQ(*row.retransmits_cum, 65u);
  EXPECT_EQ(row.counts.errors, 5u);
}

TraceFile MotionTrace() {
  // Static for [0, 10) s, moving for [10, 20) s, static again after 20 s.
  std::vector<MetricSample> rec = {At(0, MotionBody{0, 0}),
                                   At(10 * kSec, MotionBody{0.5, 0}),
                                   At(20 * kSec, MotionBody{0, 0})};
  for (std::uint64_t s = 0; s < 30; ++s) {
    const bool moving = s >= 10 && s < 20;
    rec.push_back(At(s * kSec, ThroughputBody(moving ? 20 : 80, 0, 1, 0)));
    rec.push_back(At(s * kSec, moving && s % 2 ? DelayBody::TimedOut()
                                               : DelayBody::Measured(moving ? 9 : 3)));
  }
  std::stable_sort(rec.begin(), rec.end(), [](const auto& a, const auto& b) {
    return a.ts_ns < b.ts_ns;
  });
  return TraceFor(7, rec);
}

TEST(MotionFilterTest, StaticAndMovingSplit) {
  const auto [st, mv] = StaticVsMoving(MotionTrace());
  EXPECT_EQ(st.label, "Case 7 (Robot-AP) static");
  EXPECT_EQ(mv.label, "Case 7 (Robot-AP) moving");
  EXPECT_DOUBLE_EQ(st.throughput_mbps->mean, 80.0);
  EXPECT_EQ(st.throughput_mbps->n, 20u);
  EXPECT_DOUBLE_EQ(mv.throughput_mbps->mean, 20.0);
  EXPECT_DOUBLE_EQ(*st.loss_pct, 0.0);
  EXPECT_DOUBLE_EQ(*mv.loss_pct, 50.0);
  EXPECT_DOUBLE_EQ(mv.delay_ms->mean, 9.0);
}

TEST(MotionFilterTest, IntervalsOverrideAnnotations) {
  const auto intervals = ParseStaticIntervals("# parked\n10 20\n");
  ASSERT_EQ(intervals.size(), 1u);
  MotionFilter f{MotionMode::kStaticOnly, intervals};
  const auto row = Summarize(MotionTrace(), f);
  EXPECT_DOUBLE_EQ(row.throughput_mbps->mean, 20.0);
  EXPECT_EQ(row.throughput_mbps->n, 10u);
}

TEST(MotionFilterTest, NoMotionDataIsAnError) {
  const auto t = TraceFor(7, {At(0, DelayBody::Measured(3))});
  EXPECT_EQ(SummarizeError(t, {MotionMode::kStaticOnly, std::nullopt}),
            Errc::kNoMotionData);
  EXPECT_NO_THROW(Summarize(t));
  try {
    StaticVsMoving(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kNoMotionData);
  }
}

TEST(MotionFilterTest, EmptyAfterFilter) {
  const auto t = TraceFor(7, {At(0, MotionBody{0, 0}),
                              At(0, DelayBody::Measured(3))});
  EXPECT_EQ(SummarizeError(t, {MotionMode::kMovingOnly, std::nullopt}),
            Errc::kEmptyAfterFilter);
  EXPECT_EQ(SummarizeError(TraceFor(7, {}), {}), Errc::kEmptyAfterFilter);
}

TEST(MotionFilterTest, IntervalParseErrors) {
  EXPECT_TRUE(ParseStaticIntervals("").empty());
  for (const char* bad : {"1\n", "5 2\n", "-1 3\n", "1 2 3\n", "a b\n"}) {
    try {
      ParseStaticIntervals(std::string("0 1\n") + bad);
      ADD_FAILURE() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::kMalformedLine);
      EXPECT_EQ(e.line(), 2u);
    }
  }
  EXPECT_EQ(ParseMotionMode("moving"), MotionMode::kMovingOnly);
  EXPECT_THROW(ParseMotionMode("walking"), Error);
}

SummaryRow Row(int case_id, double tput, double delay, double loss,
               std::optional<double> rssi_robot,
               std::optional<double> rssi_station, std::uint64_t retx) {
  SummaryRow r;
  const auto c = CatalogCase(case_id);
  r.case_id = case_id;
  r.label = c.Label();
  r.baseline = c.is_baseline();
  r.throughput_mbps = Stat{tput, 1.0, 10};
  r.delay_ms = Stat{delay, 1.0, 10};
  r.loss_pct = loss;
  if (rssi_robot) r.rssi_robot_dbm = Stat{*rssi_robot, 1.0, 10};
  if (rssi_station) r.rssi_station_dbm = Stat{*rssi_station, 1.0, 10};
  r.retransmits_cum = retx;
  return r;
}

// Five 2.4 GHz rows with a mixed best-of pattern.
std::vector<SummaryRow> ReferenceRows() {
  return {Row(1, 12.8, 47.8, 0.0, -57.5, -54.7, 2376),
          Row(3, 19.1, 163.6, 9.6, std::nullopt, -63.7, 133),
          Row(5, 13.1, 96.6, 0.1, -67.4, std::nullopt, 96),
          Row(7, 50.2, 124.8, 0.6, -57.9, -56.5, 324),
          Row(9, 35.9, 116.4, 0.3, -51.4, -44.6, 235)};
}

TEST(CompareCasesTest, ReferenceRowsBestCells) {
  const auto table = CompareCases(ReferenceRows());
  ASSERT_EQ(table.best.size(), 5u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(table.best[i].throughput, i == 3) << i;
    // The baseline has the lowest delay but does not compete.
    EXPECT_EQ(table.best[i].delay, i == 2) << i;
    EXPECT_EQ(table.best[i].retransmits, i == 2) << i;
    EXPECT_EQ(table.best[i].rssi_robot, i == 4) << i;
    EXPECT_EQ(table.best[i].rssi_station, i == 4) << i;
    EXPECT_EQ(table.best[i].loss, i == 2) << i;
  }
}

TEST(CompareCasesTest, TiesFlagEveryTiedRow) {
  auto rows = ReferenceRows();
  rows[4].throughput_mbps->mean = 50.2;
  const auto table = CompareCases(rows);
  EXPECT_TRUE(table.best[3].throughput);
  EXPECT_TRUE(table.best[4].throughput);
  EXPECT_FALSE(table.best[0].throughput);
}

TEST(CompareCasesTest, OnlyBaselineFlagsNothing) {
  const auto table = CompareCases({ReferenceRows()[0]});
  EXPECT_FALSE(table.best[0].throughput);
  EXPECT_FALSE(table.best[0].delay);
}

TEST(RenderTest, TableMarksBestAndNa) {
  const auto text = RenderTable(CompareCases(ReferenceRows()));
  EXPECT_NE(text.find("50.2*"), std::string::npos);
  EXPECT_NE(text.find("96.6*"), std::string::npos);
  EXPECT_EQ(text.find("47.8*"), std::string::npos);
  EXPECT_NE(text.find("N/A"), std::string::npos);
  EXPECT_NE(text.find("Case 3 (Robot-AP)"), std::string::npos);
}

TEST(RenderTest, CsvHasOneLinePerRow) {
  const auto csv = RenderCsv(CompareCases(ReferenceRows()));
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 6);
  EXPECT_EQ(csv.rfind("case,tput_mean_mbps", 0), 0u);
  EXPECT_NE(csv.find("Case 7 (Robot-AP),50.2,"), std::string::npos);
  // Missing RSSI is an empty cell.
  EXPECT_NE(csv.find("Case 3 (Robot-AP),19.1,1,163.6,1,9.6,,,"),
            std::string::npos);
}

TEST(RenderTest, CsvQuotesAwkwardLabels) {
  auto rows = ReferenceRows();
  rows[3].label = "odd, \"label\"";
  const auto csv = RenderCsv(CompareCases(rows));
  EXPECT_NE(csv.find("\"odd, \"\"label\"\"\",50.2"), std::string::npos);
}

TEST(RenderTest, JsonLinesParse) {
  const auto text = RenderJson(CompareCases(ReferenceRows()));
  std::size_t lines = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const auto j = nlohmann::json::parse(text.substr(pos, nl - pos));
    EXPECT_TRUE(j.contains("label"));
    if (j["case_id"] == 3) {
      EXPECT_TRUE(j["rssi_robot_dbm"].is_null());
    }
    ++lines;
    pos = nl + 1;
  }
  EXPECT_EQ(lines, 5u);
}

}  // namespace
}  // namespace netmeter
