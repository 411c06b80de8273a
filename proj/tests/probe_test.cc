#include "netmeter/probe.h"

#include <chrono>
#include <vector>

#include <gtest/gtest.h>

#include "netmeter/error.h"

namespace netmeter {
namespace {

Errc DecodeError(const std::vector<std::uint8_t>& bytes) {
  try {
    DecodeFrame(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "decoded without error";
  return Errc::kInvalidArgument;
}

TEST(ProbeFrameTest, ExactWireBytes) {
  ProbeFrame f;
  f.kind = FrameKind::kPong;
  f.seq = 0x0102030405060708ull;
  f.client_send_ns = 0x1112131415161718ull;
  f.server_recv_ns = 0x2122232425262728ull;
  f.payload = {0xAA, 0xBB};
  const std::vector<std::uint8_t> want = {
      0x52, 0x4E, 0x50, 0x42, 0x01, 0x02,                    //
      0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08,        //
      0x11, 0x12, 0x13, 0x14, 0x15, 0x16, 0x17, 0x18,        //
      0x21, 0x22, 0x23, 0x24, 0x25, 0x26, 0x27, 0x28,        //
      0x00, 0x02, 0xAA, 0xBB};
  EXPECT_EQ(EncodeFrame(f), want);
  EXPECT_EQ(DecodeFrame(want), f);
}

TEST(ProbeFrameTest, RoundTripPayloadSizes) {
  for (std::size_t n : {0u, 1u, 64u, 1400u, 65000u}) {
    ProbeFrame f;
    f.seq = n;
    f.payload.assign(n, static_cast<std::uint8_t>(n));
    const auto bytes = EncodeFrame(f);
    EXPECT_EQ(bytes.size(), kFrameHeaderBytes + n);
    EXPECT_EQ(DecodeFrame(bytes), f);
  }
}

TEST(ProbeFrameTest, OversizePayloadRejected) {
  ProbeFrame f;
  f.payload.resize(kMaxPayloadBytes + 1);
  try {
    EncodeFrame(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kOversizePayload);
  }
}

TEST(ProbeFrameTest, MalformedFrames) {
  ProbeFrame f;
  f.payload = {1, 2, 3};
  const auto good = EncodeFrame(f);

  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(DecodeError(bad_magic), Errc::kBadMagic);
  EXPECT_EQ(DecodeError({'G', 'E', 'T'}), Errc::kBadMagic);

  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_EQ(DecodeError(bad_version), Errc::kBadVersion);

  auto bad_kind = good;
  bad_kind[5] = 9;
  EXPECT_EQ(DecodeError(bad_kind), Errc::kBadKind);

  EXPECT_EQ(DecodeError({good.begin(), good.begin() + 20}),
            Errc::kTruncatedFrame);
  EXPECT_EQ(DecodeError({good.begin(), good.end() - 1}), Errc::kTruncatedFrame);

  auto trailing = good;
  trailing.push_back(0);
  EXPECT_EQ(DecodeError(trailing), Errc::kTrailingBytes);
}

TEST(EndpointTest, Parse) {
  const Endpoint a = ParseEndpoint("127.0.0.1:7447");
  EXPECT_EQ(a.host, "127.0.0.1");
  EXPECT_EQ(a.port, 7447);
  const Endpoint b = ParseEndpoint("[::1]:9000");
  EXPECT_EQ(b.host, "::1");
  EXPECT_EQ(b.port, 9000);
  EXPECT_THROW(ParseEndpoint("localhost"), Error);
  EXPECT_THROW(ParseEndpoint("h:70000"), Error);
  EXPECT_THROW(ParseEndpoint("h:80x"), Error);
  EXPECT_THROW(ParseEndpoint("[::1]9000"), Error);
}

TEST(ProbeConfigTest, Validation) {
  ProbeConfig cfg;
  EXPECT_NO_THROW(ValidateProbeConfig(cfg));
  cfg.rate_hz = 0;
  EXPECT_THROW(ValidateProbeConfig(cfg), Error);
  cfg.rate_hz = 1;
  cfg.timeout_ms = -5;
  EXPECT_THROW(ValidateProbeConfig(cfg), Error);
  cfg.timeout_ms = 100;
  cfg.payload_len = kMaxPayloadBytes + 1;
  EXPECT_THROW(ValidateProbeConfig(cfg), Error);
}

std::vector<DelayBody> RunClient(ProbeConfig cfg, std::uint64_t n,
                                 ProbeClientStats* stats = nullptr) {
  ProbeClient client(cfg);
  std::vector<DelayBody> out;
  SteadyClock clock;
  const auto s = client.Run(
      [&](const MetricSample& m) {
        ASSERT_NE(m.as<DelayBody>(), nullptr);
        out.push_back(*m.as<DelayBody>());
      },
      clock, {}, n);
  if (stats) *stats = s;
  return out;
}

TEST(ProbeLoopbackTest, MeasuresLowRtt) {
  ProbeServer server({{"127.0.0.1", 0}, std::chrono::milliseconds(0)});
  server.Start();
  ProbeConfig cfg;
  cfg.server = {"127.0.0.1", server.port()};
  cfg.rate_hz = 50;
  cfg.timeout_ms = 500;
  ProbeClientStats stats;
  const auto samples = RunClient(cfg, 10, &stats);
  ASSERT_EQ(samples.size(), 10u);
  for (const auto& d : samples) {
    EXPECT_FALSE(d.timed_out());
    EXPECT_LT(d.rtt_ms(), 50.0);
  }
  EXPECT_EQ(stats.sent, 10u);
  EXPECT_EQ(stats.replies, 10u);
  server.Stop();
  EXPECT_GE(server.pongs_sent(), 10u);
}

TEST(ProbeLoopbackTest, InjectedDelayIsMeasured) {
  ProbeServer server({{"127.0.0.1", 0}, std::chrono::milliseconds(30)});
  server.Start();
  ProbeConfig cfg;
  cfg.server = {"127.0.0.1", server.port()};
  cfg.rate_hz = 20;
  cfg.timeout_ms = 1000;
  const auto samples = RunClient(cfg, 5);
  ASSERT_EQ(samples.size(), 5u);
  for (const auto& d : samples) {
    ASSERT_FALSE(d.timed_out());
    EXPECT_GE(d.rtt_ms(), 30.0);
    EXPECT_LT(d.rtt_ms(), 130.0);
  }
}

TEST(ProbeLoopbackTest, NoServerMeansSentinels) {
  // Bind and release a port so nothing listens on it.
  std::uint16_t port;
  {
    ProbeServer gone({{"127.0.0.1", 0}, std::chrono::milliseconds(0)});
    port = gone.port();
  }
  ProbeConfig cfg;
  cfg.server = {"127.0.0.1", port};
  cfg.rate_hz = 20;
  cfg.timeout_ms = 100;
  ProbeClientStats stats;
  const auto samples = RunClient(cfg, 5, &stats);
  ASSERT_EQ(samples.size(), 5u);
  for (const auto& d : samples) EXPECT_TRUE(d.timed_out());
  EXPECT_EQ(stats.timeouts, 5u);
}

TEST(ProbeLoopbackTest, ValidPingsAreNotInvalid) {
  ProbeServer server({{"127.0.0.1", 0}, std::chrono::milliseconds(0)});
  server.Start();
  ProbeConfig cfg;
  cfg.server = {"127.0.0.1", server.port()};
  cfg.rate_hz = 50;
  RunClient(cfg, 3);
  server.Stop();
  EXPECT_EQ(server.invalid_frames(), 0u);
}

TEST(ProbeServerTest, BindFailureReported) {
  ProbeServer first({{"127.0.0.1", 0}, std::chrono::milliseconds(0)});
  try {
    ProbeServer second({{"127.0.0.1", first.port()},
                        std::chrono::milliseconds(0)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kBindFailure);
  }
}

}  // namespace
}  // namespace netmeter
