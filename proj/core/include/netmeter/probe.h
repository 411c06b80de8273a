#ifndef NETMETER_PROBE_H_
#define NETMETER_PROBE_H_

// Application-level round-trip delay probe over UDP.
//
// Frame layout (big-endian, 32-byte header + payload):
//
//   offset  size  field
//        0     4  magic 'R' 'N' 'P' 'B' (52 4E 50 42)
//        4     1  version (0x01)
//        5     1  kind (0x01 PING, 0x02 PONG)
//        6     8  seq
//       14     8  client_send_ns
//       22     8  server_recv_ns (0 in PING)
//       30     2  payload_len (<= 65000)
//       32     n  payload
//
// RTT is computed from the client's monotonic clock only: the server echoes
// client_send_ns and the client subtracts it from its receive time.

#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <thread>
#include <vector>

#include "netmeter/clock.h"
#include "netmeter/metrics.h"

namespace netmeter {

inline constexpr std::array<std::uint8_t, 4> kProbeMagic = {0x52, 0x4E, 0x50,
                                                            0x42};
inline constexpr std::uint8_t kProbeVersion = 0x01;
inline constexpr std::size_t kFrameHeaderBytes = 32;
inline constexpr std::size_t kMaxPayloadBytes = 65000;

enum class FrameKind : std::uint8_t { kPing = 0x01, kPong = 0x02 };

struct ProbeFrame {
  FrameKind kind = FrameKind::kPing;
  std::uint64_t seq = 0;
  std::uint64_t client_send_ns = 0;
  std::uint64_t server_recv_ns = 0;
  std::vector<std::uint8_t> payload;

  bool operator==(const ProbeFrame&) const = default;
};

// Throws Errc::kOversizePayload when the payload exceeds kMaxPayloadBytes.
std::vector<std::uint8_t> EncodeFrame(const ProbeFrame& frame);

// Throws Errc::kTruncatedFrame, kBadMagic, kBadVersion, kBadKind,
// kOversizePayload or kTrailingBytes.
ProbeFrame DecodeFrame(std::span<const std::uint8_t> bytes);

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  std::string ToString() const;
};

// "host:port" or "[v6addr]:port". Throws Errc::kInvalidArgument.
Endpoint ParseEndpoint(const std::string& text);

struct ServerOptions {
  Endpoint listen{"127.0.0.1", 0};
  // Test hook: hold every PONG for this long before sending it.
  std::chrono::milliseconds inject_delay{0};
};

// Echo server. Replies to each valid PING with a PONG that echoes seq,
// client_send_ns and payload and stamps server_recv_ns. Anything else is
// dropped and counted as invalid.
class ProbeServer {
 public:
  // Binds immediately; throws Errc::kBindFailure or kResolveFailure.
  explicit ProbeServer(ServerOptions options);
  ~ProbeServer();

  ProbeServer(const ProbeServer&) = delete;
  ProbeServer& operator=(const ProbeServer&) = delete;

  // Actual bound port (useful when listening on port 0).
  std::uint16_t port() const { return port_; }

  // Blocking serve loop; returns once `stop` is requested.
  void Serve(std::stop_token stop);

  // Serve() on a background thread until Stop() or destruction.
  void Start();
  void Stop();

  std::uint64_t pongs_sent() const { return pongs_sent_.load(); }
  std::uint64_t invalid_frames() const { return invalid_frames_.load(); }

 private:
  ServerOptions options_;
  int fd_ = -1;
  std::uint16_t port_ = 0;
  SteadyClock clock_;
  std::atomic<std::uint64_t> pongs_sent_{0};
  std::atomic<std::uint64_t> invalid_frames_{0};
  std::jthread thread_;
};

struct ProbeConfig {
  double rate_hz = 1.0;
  double timeout_ms = kDefaultTimeoutMs;
  std::size_t payload_len = 64;
  Endpoint server;
  Side side = Side::kRobot;
  std::string iface = "probe";
};

// Throws Errc::kInvalidArgument for non-positive rate/timeout or an oversize
// payload.
void ValidateProbeConfig(const ProbeConfig& cfg);

struct ProbeClientStats {
  std::uint64_t sent = 0;
  std::uint64_t replies = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t stale = 0;
};

// Sends one PING per tick at rate_hz and emits one DelayBody per PING: the
// measured RTT when the matching PONG arrives within timeout_ms, otherwise
// the -1 sentinel. Replies for expired or unknown seq numbers are discarded.
// Overlapping PINGs (timeout longer than the period) are matched by seq.
class ProbeClient {
 public:
  // Resolves the server endpoint; throws Errc::kResolveFailure.
  explicit ProbeClient(ProbeConfig cfg);
  ~ProbeClient();

  ProbeClient(const ProbeClient&) = delete;
  ProbeClient& operator=(const ProbeClient&) = delete;

  // Runs until `stop` or until max_samples samples were emitted. Sample
  // timestamps come from `clock`, which must be a real-time clock.
  ProbeClientStats Run(const SampleSink& sink, SteadyClock& clock,
                       std::stop_token stop,
                       std::optional<std::uint64_t> max_samples = std::nullopt);

 private:
  ProbeConfig cfg_;
  int fd_ = -1;
};

}  // namespace netmeter

#endif  // NETMETER_PROBE_H_
