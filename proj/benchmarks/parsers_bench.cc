#include <string>

#include <benchmark/benchmark.h>

#include "netmeter/collectors.h"

namespace netmeter {
namespace {

constexpr const char* kWireless =
    "Inter-| sta-|   Quality        |   Discarded packets               | Missed | WE\n"
    " face | tus | link level noise |  nwid  crypt   frag  retry   misc | beacon | 22\n"
    "wlp2s0: 0000   62.  -48.  -256        0      0      0     17      3        0\n";

constexpr const char* kDevice =
    "Inter-|   Receive                                                |  Transmit\n"
    " face |bytes    packets errs drop fifo frame compressed multicast|bytes    "
    "packets errs drop fifo colls carrier compressed\n"
    "    lo: 8235061   61120    0    0    0     0          0         0  8235061   "
    "61120    0    0    0     0       0          0\n"
    "wlp2s0: 1843922741 1402611 0 2117 0 0 0 0 201399811 612118 3 0 0 0 0 0\n";

void BM_ParseWireless(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(ParseWirelessStats(kWireless));
}
BENCHMARK(BM_ParseWireless);

void BM_ParseDevice(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(ParseDeviceStats(kDevice));
}
BENCHMARK(BM_ParseDevice);

void BM_ParseSnmp(benchmark::State& state) {
  const std::string text =
      "Tcp: RtoAlgorithm RtoMin RtoMax MaxConn ActiveOpens PassiveOpens "
      "AttemptFails EstabResets CurrEstab InSegs OutSegs RetransSegs InErrs "
      "OutRsts InCsumErrors\n"
      "Tcp: 1 200 120000 -1 1450 37 12 9 6 912345 876543 2741 0 180 0\n";
  for (auto _ : state) benchmark::DoNotOptimize(ParseProtocolStats(text));
}
BENCHMARK(BM_ParseSnmp);

}  // namespace
}  // namespace netmeter

BENCHMARK_MAIN();
