#include "netmeter/probe.h"

#include <arpa/inet.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <deque>
#include <map>

#include <fmt/format.h>
#include <glog/logging.h>

#include "netmeter/error.h"

namespace netmeter {

namespace {

constexpr std::size_t kMaxDatagram = 65536;
// Upper bound on a single poll wait so stop requests are noticed promptly.
constexpr std::uint64_t kMaxWaitNs = 50'000'000;

struct AddrInfoDeleter {
  void operator()(addrinfo* ai) const { freeaddrinfo(ai); }
};
using AddrInfoPtr = std::unique_ptr<addrinfo, AddrInfoDeleter>;

AddrInfoPtr Resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_DGRAM;
  hints.ai_protocol = IPPROTO_UDP;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const std::string port = std::to_string(ep.port);
  const char* host = ep.host.empty() ? nullptr : ep.host.c_str();
  const int rc = getaddrinfo(host, port.c_str(), &hints, &res);
  if (rc != 0 || res == nullptr) {
    throw Error(Errc::kResolveFailure,
                fmt::format("cannot resolve '{}': {}", ep.ToString(),
                            gai_strerror(rc)));
  }
  return AddrInfoPtr(res);
}

// Waits until fd is readable or `wait_ns` elapses. Returns true if readable.
bool WaitReadable(int fd, std::uint64_t wait_ns) {
  pollfd pfd{fd, POLLIN, 0};
  timespec ts{static_cast<time_t>(wait_ns / 1'000'000'000),
              static_cast<long>(wait_ns % 1'000'000'000)};
  const int rc = ppoll(&pfd, 1, &ts, nullptr);
  return rc > 0 && (pfd.revents & POLLIN);
}

}  // namespace

std::string Endpoint::ToString() const {
  if (host.find(':') != std::string::npos) {
    return fmt::format("[{}]:{}", host, port);
  }
  return fmt::format("{}:{}", host, port);
}

Endpoint ParseEndpoint(const std::string& text) {
  std::string host;
  std::string port;
  if (!text.empty() && text.front() == '[') {
    const auto close = text.find(']');
    if (close == std::string::npos || close + 1 >= text.size() ||
        text[close + 1] != ':') {
      throw Error(Errc::kInvalidArgument,
                  fmt::format("bad endpoint '{}', expected [addr]:port", text));
    }
    host = text.substr(1, close - 1);
    port = text.substr(close + 2);
  } else {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos) {
      throw Error(Errc::kInvalidArgument,
                  fmt::format("bad endpoint '{}', expected addr:port", text));
    }
    host = text.substr(0, colon);
    port = text.substr(colon + 1);
  }
  int value = -1;
  try {
    std::size_t used = 0;
    value = std::stoi(port, &used);
    if (used != port.size()) value = -1;
  } catch (const std::exception&) {
    value = -1;
  }
  if (value < 0 || value > 65535) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("bad port in endpoint '{}'", text));
  }
  return Endpoint{host, static_cast<std::uint16_t>(value)};
}

// ---------------------------------------------------------------------------
// Server

ProbeServer::ProbeServer(ServerOptions options) : options_(std::move(options)) {
  const auto ai = Resolve(options_.listen, /*passive=*/true);
  std::string last_error = "no usable address";
  for (addrinfo* p = ai.get(); p != nullptr; p = p->ai_next) {
    const int fd = socket(p->ai_family, p->ai_socktype | SOCK_CLOEXEC,
                          p->ai_protocol);
    if (fd < 0) {
      last_error = std::strerror(errno);
      continue;
    }
    if (bind(fd, p->ai_addr, p->ai_addrlen) != 0) {
      last_error = std::strerror(errno);
      close(fd);
      continue;
    }
    fd_ = fd;
    break;
  }
  if (fd_ < 0) {
    throw Error(Errc::kBindFailure,
                fmt::format("cannot bind {}: {}", options_.listen.ToString(),
                            last_error));
  }
  sockaddr_storage addr{};
  socklen_t len = sizeof(addr);
  getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  if (addr.ss_family == AF_INET) {
    port_ = ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  } else {
    port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
  }
}

ProbeServer::~ProbeServer() {
  Stop();
  if (fd_ >= 0) close(fd_);
}

void ProbeServer::Start() {
  thread_ = std::jthread([this](std::stop_token stop) { Serve(stop); });
}

void ProbeServer::Stop() {
  if (thread_.joinable()) {
    thread_.request_stop();
    thread_.join();
  }
}

void ProbeServer::Serve(std::stop_token stop) {
  struct PendingReply {
    std::uint64_t due_ns;
    sockaddr_storage peer;
    socklen_t peer_len;
    std::vector<std::uint8_t> bytes;
  };
  // The injected delay is constant, so due times are FIFO ordered.
  std::deque<PendingReply> pending;
  const auto delay_ns = static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(
          options_.inject_delay)
          .count());
  std::vector<std::uint8_t> buf(kMaxDatagram);

  const auto send_reply = [this](const PendingReply& r) {
    const auto n = sendto(fd_, r.bytes.data(), r.bytes.size(), 0,
                          reinterpret_cast<const sockaddr*>(&r.peer),
                          r.peer_len);
    if (n < 0) {
      LOG_EVERY_N(WARNING, 100) << "probe server sendto: "
                                << std::strerror(errno);
    } else {
      ++pongs_sent_;
    }
  };

  while (!stop.stop_requested()) {
    const std::uint64_t now = clock_.NowNs();
    while (!pending.empty() && pending.front().due_ns <= now) {
      send_reply(pending.front());
      pending.pop_front();
    }
    std::uint64_t wait = kMaxWaitNs;
    if (!pending.empty()) {
      wait = std::min(wait, pending.front().due_ns - now);
    }
    if (!WaitReadable(fd_, wait)) continue;

    // Drain everything that is queued.
    for (;;) {
      PendingReply r;
      r.peer_len = sizeof(r.peer);
      const auto n = recvfrom(fd_, buf.data(), buf.size(), MSG_DONTWAIT,
                              reinterpret_cast<sockaddr*>(&r.peer), &r.peer_len);
      if (n < 0) break;
      const std::uint64_t recv_ns = clock_.NowNs();
      ProbeFrame frame;
      try {
        frame = DecodeFrame(std::span(buf.data(), static_cast<std::size_t>(n)));
      } catch (const Error&) {
        ++invalid_frames_;
        continue;
      }
      if (frame.kind != FrameKind::kPing) {
        ++invalid_frames_;
        continue;
      }
      frame.kind = FrameKind::kPong;
      frame.server_recv_ns = recv_ns;
      r.bytes = EncodeFrame(frame);
      r.due_ns = recv_ns + delay_ns;
      if (delay_ns == 0) {
        send_reply(r);
      } else {
        pending.push_back(std::move(r));
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Client

void ValidateProbeConfig(const ProbeConfig& cfg) {
  if (!(cfg.rate_hz > 0.0) || !std::isfinite(cfg.rate_hz)) {
    throw Error(Errc::kInvalidArgument, "probe rate must be > 0");
  }
  if (!(cfg.timeout_ms > 0.0) || !std::isfinite(cfg.timeout_ms)) {
    throw Error(Errc::kInvalidArgument, "probe timeout must be > 0 ms");
  }
  if (cfg.payload_len > kMaxPayloadBytes) {
    throw Error(Errc::kInvalidArgument,
                fmt::format("probe payload {} exceeds {}", cfg.payload_len,
                            kMaxPayloadBytes));
  }
  if (cfg.iface.empty()) {
    throw Error(Errc::kInvalidArgument, "probe iface label is empty");
  }
}

ProbeClient::ProbeClient(ProbeConfig cfg) : cfg_(std::move(cfg)) {
  ValidateProbeConfig(cfg_);
  const auto ai = Resolve(cfg_.server, /*passive=*/false);
  std::string last_error = "no usable address";
  for (addrinfo* p = ai.get(); p != nullptr; p = p->ai_next) {
    const int fd = socket(p->ai_family, p->ai_socktype | SOCK_CLOEXEC,
                          p->ai_protocol);
    if (fd < 0) {
      last_error = std::strerror(errno);
      continue;
    }
    // A connected datagram socket only accepts replies from the server.
    if (connect(fd, p->ai_addr, p->ai_addrlen) != 0) {
      last_error = std::strerror(errno);
      close(fd);
      continue;
    }
    fd_ = fd;
    break;
  }
  if (fd_ < 0) {
    throw Error(Errc::kResolveFailure,
                fmt::format("cannot open socket to {}: {}",
                            cfg_.server.ToString(), last_error));
  }
}

ProbeClient::~ProbeClient() {
  if (fd_ >= 0) close(fd_);
}

ProbeClientStats ProbeClient::Run(const SampleSink& sink, SteadyClock& clock,
                                  std::stop_token stop,
                                  std::optional<std::uint64_t> max_samples) {
  ProbeClientStats stats;
  const auto period_ns =
      static_cast<std::uint64_t>(std::llround(1e9 / cfg_.rate_hz));
  const auto timeout_ns =
      static_cast<std::uint64_t>(std::llround(cfg_.timeout_ms * 1e6));
  std::map<std::uint64_t, std::uint64_t> outstanding;  // seq -> send time
  std::uint64_t next_seq = 1;
  std::uint64_t next_tick = clock.NowNs();
  std::uint64_t emitted = 0;
  const std::vector<std::uint8_t> payload(cfg_.payload_len, 0xA5);
  std::vector<std::uint8_t> buf(kMaxDatagram);

  const auto emit = [&](const DelayBody& body) {
    sink(MetricSample{clock.NowNs(), cfg_.side, cfg_.iface, body});
    ++emitted;
  };
  const auto more_to_send = [&] {
    return !max_samples || stats.sent < *max_samples;
  };

  while (!stop.stop_requested()) {
    if (max_samples && emitted >= *max_samples) break;
    std::uint64_t now = clock.NowNs();

    if (more_to_send() && now >= next_tick) {
      ProbeFrame ping;
      ping.kind = FrameKind::kPing;
      ping.seq = next_seq++;
      ping.client_send_ns = now;
      ping.payload = payload;
      const auto bytes = EncodeFrame(ping);
      // Send failures (e.g. ICMP-refused from a down server) surface as
      // timeouts for this seq.
      send(fd_, bytes.data(), bytes.size(), 0);
      outstanding.emplace(ping.seq, now);
      ++stats.sent;
      next_tick += period_ns;
      if (next_tick <= now) next_tick = now + period_ns;
    }

    for (auto it = outstanding.begin(); it != outstanding.end();) {
      if (now - it->second >= timeout_ns) {
        emit(DelayBody::TimedOut());
        ++stats.timeouts;
        it = outstanding.erase(it);
      } else {
        ++it;
      }
    }
    if (max_samples && emitted >= *max_samples) break;

    std::uint64_t wake = now + kMaxWaitNs;
    if (more_to_send()) wake = std::min(wake, next_tick);
    for (const auto& [seq, sent_ns] : outstanding) {
      wake = std::min(wake, sent_ns + timeout_ns);
    }
    now = clock.NowNs();
    const std::uint64_t wait = wake > now ? wake - now : 0;
    if (!WaitReadable(fd_, wait)) continue;

    for (;;) {
      const auto n = recv(fd_, buf.data(), buf.size(), MSG_DONTWAIT);
      if (n < 0) break;  // EAGAIN, or ECONNREFUSED while the server is down
      const std::uint64_t recv_ns = clock.NowNs();
      ProbeFrame pong;
      try {
        pong = DecodeFrame(std::span(buf.data(), static_cast<std::size_t>(n)));
      } catch (const Error&) {
        ++stats.stale;
        continue;
      }
      const auto it = outstanding.find(pong.seq);
      if (pong.kind != FrameKind::kPong || it == outstanding.end()) {
        ++stats.stale;
        continue;
      }
      outstanding.erase(it);
      const double rtt_ms =
          static_cast<double>(recv_ns - pong.client_send_ns) / 1e6;
      if (pong.client_send_ns > recv_ns || rtt_ms > cfg_.timeout_ms) {
        emit(DelayBody::TimedOut());
        ++stats.timeouts;
      } else {
        // A zero-nanosecond RTT is not physically possible; keep the value
        // strictly positive.
        emit(DelayBody::Measured(std::max(rtt_ms, 1e-6)));
        ++stats.replies;
      }
    }
  }
  return stats;
}

}  // namespace netmeter
