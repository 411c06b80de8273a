#include <algorithm>

#include <fmt/format.h>

#include "netmeter/error.h"
#include "netmeter/probe.h"

namespace netmeter {

namespace {

std::uint8_t* PutU64(std::uint8_t* out, std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) {
    *out++ = static_cast<std::uint8_t>(v >> shift);
  }
  return out;
}

std::uint64_t GetU64(std::span<const std::uint8_t> bytes, std::size_t at) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < 8; ++i) v = (v << 8) | bytes[at + i];
  return v;
}

}  // namespace

std::vector<std::uint8_t> EncodeFrame(const ProbeFrame& frame) {
  if (frame.payload.size() > kMaxPayloadBytes) {
    throw Error(Errc::kOversizePayload,
                fmt::format("payload of {} bytes exceeds {}",
                            frame.payload.size(), kMaxPayloadBytes));
  }
  std::vector<std::uint8_t> out(kFrameHeaderBytes + frame.payload.size());
  std::uint8_t* p = std::copy(kProbeMagic.begin(), kProbeMagic.end(), out.data());
  *p++ = kProbeVersion;
  *p++ = static_cast<std::uint8_t>(frame.kind);
  p = PutU64(p, frame.seq);
  p = PutU64(p, frame.client_send_ns);
  p = PutU64(p, frame.server_recv_ns);
  const auto len = static_cast<std::uint16_t>(frame.payload.size());
  *p++ = static_cast<std::uint8_t>(len >> 8);
  *p++ = static_cast<std::uint8_t>(len & 0xFF);
  std::copy(frame.payload.begin(), frame.payload.end(), p);
  return out;
}

ProbeFrame DecodeFrame(std::span<const std::uint8_t> bytes) {
  // Magic and version are checked on whatever prefix is present so a short
  // garbage datagram is reported as bad magic rather than truncated.
  const std::size_t magic_len = std::min(bytes.size(), kProbeMagic.size());
  if (!std::equal(bytes.begin(), bytes.begin() + magic_len,
                  kProbeMagic.begin())) {
    throw Error(Errc::kBadMagic, "frame magic mismatch");
  }
  if (bytes.size() > 4 && bytes[4] != kProbeVersion) {
    throw Error(Errc::kBadVersion,
                fmt::format("unsupported frame version {}", bytes[4]));
  }
  if (bytes.size() < kFrameHeaderBytes) {
    throw Error(Errc::kTruncatedFrame,
                fmt::format("frame of {} bytes is shorter than the {}-byte "
                            "header",
                            bytes.size(), kFrameHeaderBytes));
  }
  ProbeFrame f;
  const std::uint8_t kind = bytes[5];
  if (kind != static_cast<std::uint8_t>(FrameKind::kPing) &&
      kind != static_cast<std::uint8_t>(FrameKind::kPong)) {
    throw Error(Errc::kBadKind, fmt::format("unknown frame kind {}", kind));
  }
  f.kind = static_cast<FrameKind>(kind);
  f.seq = GetU64(bytes, 6);
  f.client_send_ns = GetU64(bytes, 14);
  f.server_recv_ns = GetU64(bytes, 22);
  const std::size_t len =
      (static_cast<std::size_t>(bytes[30]) << 8) | bytes[31];
  if (len > kMaxPayloadBytes) {
    throw Error(Errc::kOversizePayload,
                fmt::format("declared payload {} exceeds {}", len,
                            kMaxPayloadBytes));
  }
  if (bytes.size() < kFrameHeaderBytes + len) {
    throw Error(Errc::kTruncatedFrame,
                fmt::format("frame has {} payload bytes, header declares {}",
                            bytes.size() - kFrameHeaderBytes, len));
  }
  if (bytes.size() > kFrameHeaderBytes + len) {
    throw Error(Errc::kTrailingBytes,
                fmt::format("{} bytes after the declared payload",
                            bytes.size() - kFrameHeaderBytes - len));
  }
  f.payload.assign(bytes.begin() + kFrameHeaderBytes, bytes.end());
  return f;
}

}  // namespace netmeter
