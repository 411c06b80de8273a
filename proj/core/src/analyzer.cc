#include "netmeter/analyzer.h"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "netmeter/error.h"

namespace netmeter {

namespace {

// Motion state lookup over the session clock.
class MotionTimeline {
 public:
  static std::optional<MotionTimeline> FromTrace(const TraceFile& trace) {
    MotionTimeline t;
    for (const auto& r : trace.records) {
      if (const auto* m = r.as<MotionBody>()) {
        t.changes_.emplace_back(r.ts_ns, m->is_static());
      }
    }
    if (t.changes_.empty()) return std::nullopt;
    std::stable_sort(t.changes_.begin(), t.changes_.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    return t;
  }

  static MotionTimeline FromIntervals(std::vector<TimeInterval> intervals) {
    MotionTimeline t;
    t.intervals_ = std::move(intervals);
    t.use_intervals_ = true;
    return t;
  }

  bool IsStatic(std::uint64_t ts_ns) const {
    if (use_intervals_) {
      return std::any_of(intervals_.begin(), intervals_.end(),
                         [ts_ns](const TimeInterval& iv) {
                           return ts_ns >= iv.start_ns && ts_ns < iv.end_ns;
                         });
    }
    // Latest annotation at or before ts; before the first one, the first
    // annotation's state applies.
    auto it = std::upper_bound(
        changes_.begin(), changes_.end(), ts_ns,
        [](std::uint64_t ts, const auto& c) { return ts < c.first; });
    if (it == changes_.begin()) return changes_.front().second;
    return std::prev(it)->second;
  }

 private:
  std::vector<std::pair<std::uint64_t, bool>> changes_;
  std::vector<TimeInterval> intervals_;
  bool use_intervals_ = false;
};

std::string Fmt1(const std::optional<double>& v) {
  return v ? fmt::format("{:.1f}", *v) : "N/A";
}

}  // namespace

std::string_view ToString(MotionMode mode) {
  switch (mode) {
    case MotionMode::kAll: return "all";
    case MotionMode::kStaticOnly: return "static";
    case MotionMode::kMovingOnly: return "moving";
  }
  return "all";
}

MotionMode ParseMotionMode(std::string_view text) {
  if (text == "all") return MotionMode::kAll;
  if (text == "static") return MotionMode::kStaticOnly;
  if (text == "moving") return MotionMode::kMovingOnly;
  throw Error(Errc::kInvalidArgument,
              fmt::format("unknown motion mode '{}'", text));
}

std::vector<TimeInterval> ParseStaticIntervals(std::string_view text) {
  std::vector<TimeInterval> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    std::istringstream fields(line);
    double start_s = 0.0;
    double end_s = 0.0;
    if (!(fields >> start_s)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw Error(Errc::kMalformedLine,
                  fmt::format("intervals line {}: expected 'start_s end_s'",
                              line_no))
          .WithLine(line_no);
    }
    std::string extra;
    if (!(fields >> end_s) || (fields >> extra) || start_s < 0.0 ||
        end_s < start_s) {
      throw Error(Errc::kMalformedLine,
                  fmt::format("intervals line {}: expected 0 <= start_s <= "
                              "end_s",
                              line_no))
          .WithLine(line_no);
    }
    out.push_back({static_cast<std::uint64_t>(std::llround(start_s * 1e9)),
                   static_cast<std::uint64_t>(std::llround(end_s * 1e9))});
  }
  return out;
}

std::optional<Stat> ComputeStat(const std::vector<double>& values) {
  if (values.empty()) return std::nullopt;
  Stat s;
  s.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

SummaryRow Summarize(const TraceFile& trace, const MotionFilter& filter) {
  std::optional<MotionTimeline> timeline;
  if (filter.static_intervals) {
    timeline = MotionTimeline::FromIntervals(*filter.static_intervals);
  } else {
    timeline = MotionTimeline::FromTrace(trace);
  }
  if (filter.mode != MotionMode::kAll && !timeline) {
    throw Error(Errc::kNoMotionData,
                "trace has no motion annotations and no static intervals were "
                "given");
  }
  const auto keep = [&](std::uint64_t ts) {
    switch (filter.mode) {
      case MotionMode::kAll: return true;
      case MotionMode::kStaticOnly: return timeline->IsStatic(ts);
      case MotionMode::kMovingOnly: return !timeline->IsStatic(ts);
    }
    return true;
  };

  std::vector<double> throughput, delay, rssi_robot, rssi_station;
  std::size_t delay_total = 0;
  std::size_t timeouts = 0;
  // epoch -> (first, last) retransmit counter
  std::map<std::uint32_t, std::pair<std::uint64_t, std::uint64_t>> epochs;
  SampleCounts counts;

  for (const auto& r : trace.records) {
    if (r.kind() == MetricKind::kMotion || !keep(r.ts_ns)) continue;
    if (const auto* b = r.as<RssiBody>()) {
      (r.side == Side::kRobot ? rssi_robot : rssi_station).push_back(b->rssi_dbm);
    } else if (const auto* b = r.as<ThroughputBody>()) {
      throughput.push_back(b->total_mbps());
    } else if (const auto* b = r.as<DelayBody>()) {
      ++delay_total;
      if (b->timed_out()) {
        ++timeouts;
      } else {
        delay.push_back(b->rtt_ms());
      }
    } else if (const auto* b = r.as<ErrorBody>()) {
      ++counts.errors;
      auto [it, inserted] = epochs.try_emplace(
          b->epoch, b->retransmits_cum, b->retransmits_cum);
      if (!inserted) it->second.second = b->retransmits_cum;
    }
  }

  counts.rssi_robot = rssi_robot.size();
  counts.rssi_station = rssi_station.size();
  counts.throughput = throughput.size();
  counts.delay = delay_total;
  counts.delay_timeouts = timeouts;
  if (counts.rssi_robot + counts.rssi_station + counts.throughput +
          counts.delay + counts.errors ==
      0) {
    throw Error(Errc::kEmptyAfterFilter,
                fmt::format("no samples remain after the '{}' motion filter",
                            ToString(filter.mode)));
  }

  SummaryRow row;
  row.case_id = trace.header.experiment.case_id;
  row.label = trace.header.experiment.Label();
  row.baseline = trace.header.experiment.is_baseline();
  row.counts = counts;
  row.throughput_mbps = ComputeStat(throughput);
  row.delay_ms = ComputeStat(delay);
  if (delay_total > 0) {
    row.loss_pct = 100.0 * static_cast<double>(timeouts) /
                   static_cast<double>(delay_total);
  }
  row.rssi_robot_dbm = ComputeStat(rssi_robot);
  row.rssi_station_dbm = ComputeStat(rssi_station);
  if (!epochs.empty()) {
    std::uint64_t total = 0;
    for (const auto& [epoch, span] : epochs) {
      if (span.second > span.first) total += span.second - span.first;
    }
    row.retransmits_cum = total;
  }
  return row;
}

std::pair<SummaryRow, SummaryRow> StaticVsMoving(
    const TraceFile& trace,
    std::optional<std::vector<TimeInterval>> static_intervals) {
  MotionFilter filter;
  filter.static_intervals = std::move(static_intervals);
  filter.mode = MotionMode::kStaticOnly;
  SummaryRow static_row;
  try {
    static_row = Summarize(trace, filter);
  } catch (const Error& e) {
    if (e.code() == Errc::kEmptyAfterFilter) {
      throw Error(Errc::kNoMotionData, "trace has no static samples");
    }
    throw;
  }
  static_row.label += " static";
  filter.mode = MotionMode::kMovingOnly;
  SummaryRow moving_row = Summarize(trace, filter);
  moving_row.label += " moving";
  return {std::move(static_row), std::move(moving_row)};
}

ComparisonTable CompareCases(std::vector<SummaryRow> rows) {
  ComparisonTable table;
  table.best.resize(rows.size());

  // Marks every competing row whose value equals the best one.
  const auto flag = [&](auto value_of, bool higher_is_better,
                        bool BestFlags::*field) {
    std::optional<double> best;
    for (const auto& r : rows) {
      if (r.baseline) continue;
      const std::optional<double> v = value_of(r);
      if (!v) continue;
      if (!best || (higher_is_better ? *v > *best : *v < *best)) best = v;
    }
    if (!best) return;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].baseline) continue;
      const auto v = value_of(rows[i]);
      if (v && *v == *best) table.best[i].*field = true;
    }
  };
  const auto mean_of = [](const std::optional<Stat>& s) -> std::optional<double> {
    return s ? std::optional<double>(s->mean) : std::nullopt;
  };

  flag([&](const SummaryRow& r) { return mean_of(r.throughput_mbps); }, true,
       &BestFlags::throughput);
  flag([&](const SummaryRow& r) { return mean_of(r.delay_ms); }, false,
       &BestFlags::delay);
  flag([](const SummaryRow& r) { return r.loss_pct; }, false, &BestFlags::loss);
  flag([&](const SummaryRow& r) { return mean_of(r.rssi_robot_dbm); }, true,
       &BestFlags::rssi_robot);
  flag([&](const SummaryRow& r) { return mean_of(r.rssi_station_dbm); }, true,
       &BestFlags::rssi_station);
  flag(
      [](const SummaryRow& r) -> std::optional<double> {
        if (!r.retransmits_cum) return std::nullopt;
        return static_cast<double>(*r.retransmits_cum);
      },
      false, &BestFlags::retransmits);

  table.rows = std::move(rows);
  return table;
}

namespace {

std::optional<double> MeanOf(const std::optional<Stat>& s) {
  return s ? std::optional<double>(s->mean) : std::nullopt;
}

std::optional<double> StdOf(const std::optional<Stat>& s) {
  return s ? std::optional<double>(s->std) : std::nullopt;
}

std::optional<double> Retx(const SummaryRow& r) {
  return r.retransmits_cum ? std::optional<double>(
                                 static_cast<double>(*r.retransmits_cum))
                           : std::nullopt;
}

std::vector<std::string> Cells(const SummaryRow& r, const BestFlags& b) {
  const auto mark = [](std::string cell, bool best) {
    return best ? cell + "*" : cell;
  };
  std::string retx = r.retransmits_cum
                         ? std::to_string(*r.retransmits_cum)
                         : std::string("N/A");
  return {r.label,
          mark(Fmt1(MeanOf(r.throughput_mbps)), b.throughput),
          Fmt1(StdOf(r.throughput_mbps)),
          mark(Fmt1(MeanOf(r.delay_ms)), b.delay),
          Fmt1(StdOf(r.delay_ms)),
          mark(Fmt1(r.loss_pct), b.loss),
          mark(Fmt1(MeanOf(r.rssi_robot_dbm)), b.rssi_robot),
          Fmt1(StdOf(r.rssi_robot_dbm)),
          mark(Fmt1(MeanOf(r.rssi_station_dbm)), b.rssi_station),
          Fmt1(StdOf(r.rssi_station_dbm)),
          mark(retx, b.retransmits)};
}

const std::vector<std::string>& Headings() {
  static const std::vector<std::string> h = {
      "case",          "tput_mean_mbps",  "tput_std_mbps",
      "delay_mean_ms", "delay_std_ms",    "loss_pct",
      "rssi_robot_mean_dbm", "rssi_robot_std_db", "rssi_station_mean_dbm",
      "rssi_station_std_db", "retransmits_session"};
  return h;
}

}  // namespace

std::string RenderTable(const ComparisonTable& table) {
  std::vector<std::vector<std::string>> grid;
  grid.push_back(Headings());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    grid.push_back(Cells(table.rows[i], table.best[i]));
  }
  std::vector<std::size_t> width(Headings().size(), 0);
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      width[c] = std::max(width[c], row[c].size());
    }
  }
  std::string out;
  for (const auto& row : grid) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) {
        out += fmt::format("{:<{}}", row[c], width[c]);
      } else {
        out += fmt::format("  {:>{}}", row[c], width[c]);
      }
    }
    out += '\n';
  }
  out += "* best among non-baseline rows\n";
  return out;
}

std::string RenderCsv(const ComparisonTable& table) {
  std::string out;
  const auto& h = Headings();
  for (std::size_t c = 0; c < h.size(); ++c) {
    out += (c ? "," : "") + h[c];
  }
  out += ",n_throughput,n_delay,n_rssi_robot,n_rssi_station,best\n";
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const auto& b = table.best[i];
    const auto num = [](const std::optional<double>& v) {
      return v ? fmt::format("{}", *v) : std::string();
    };
    std::string best;
    const auto add = [&best](bool on, const char* name) {
      if (!on) return;
      if (!best.empty()) best += ';';
      best += name;
    };
    add(b.throughput, "throughput");
    add(b.delay, "delay");
    add(b.loss, "loss");
    add(b.rssi_robot, "rssi_robot");
    add(b.rssi_station, "rssi_station");
    add(b.retransmits, "retransmits");
    std::string label = r.label;
    if (label.find_first_of(",\"") != std::string::npos) {
      std::string quoted = "\"";
      for (char ch : label) {
        if (ch == '"') quoted += '"';
        quoted += ch;
      }
      label = quoted + "\"";
    }
    out += fmt::format(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", label,
        num(MeanOf(r.throughput_mbps)), num(StdOf(r.throughput_mbps)),
        num(MeanOf(r.delay_ms)), num(StdOf(r.delay_ms)), num(r.loss_pct),
        num(MeanOf(r.rssi_robot_dbm)), num(StdOf(r.rssi_robot_dbm)),
        num(MeanOf(r.rssi_station_dbm)), num(StdOf(r.rssi_station_dbm)),
        num(Retx(r)), r.counts.throughput, r.counts.delay, r.counts.rssi_robot,
        r.counts.rssi_station, best);
  }
  return out;
}

std::string RenderJson(const ComparisonTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    const auto& r = table.rows[i];
    const auto& b = table.best[i];
    nlohmann::ordered_json j;
    const auto stat = [](const std::optional<Stat>& s) -> nlohmann::ordered_json {
      if (!s) return nullptr;
      return {{"mean", s->mean}, {"std", s->std}, {"n", s->n}};
    };
    j["label"] = r.label;
    j["case_id"] = r.case_id ? nlohmann::ordered_json(*r.case_id)
                             : nlohmann::ordered_json("custom");
    j["baseline"] = r.baseline;
    j["throughput_mbps"] = stat(r.throughput_mbps);
    j["delay_ms"] = stat(r.delay_ms);
    j["loss_pct"] = r.loss_pct ? nlohmann::ordered_json(*r.loss_pct)
                               : nlohmann::ordered_json(nullptr);
    j["rssi_robot_dbm"] = stat(r.rssi_robot_dbm);
    j["rssi_station_dbm"] = stat(r.rssi_station_dbm);
    j["retransmits_session"] =
        r.retransmits_cum ? nlohmann::ordered_json(*r.retransmits_cum)
                          : nlohmann::ordered_json(nullptr);
    j["best"] = {{"throughput", b.throughput},   {"delay", b.delay},
                 {"loss", b.loss},               {"rssi_robot", b.rssi_robot},
                 {"rssi_station", b.rssi_station}, {"retransmits", b.retransmits}};
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace netmeter
