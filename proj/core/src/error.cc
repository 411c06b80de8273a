#include "netmeter/error.h"

#include <utility>

namespace netmeter {

std::string_view ErrcName(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "invalid-argument";
    case Errc::kNonpositiveDistance: return "nonpositive-distance";
    case Errc::kDistanceBelowReference: return "distance-below-reference";
    case Errc::kNonpositiveRate: return "nonpositive-rate";
    case Errc::kZeroThroughput: return "zero-throughput";
    case Errc::kMalformedLine: return "malformed-line";
    case Errc::kUnknownType: return "unknown-type";
    case Errc::kMissingHeader: return "missing-header";
    case Errc::kUsage: return "usage";
    case Errc::kIo: return "io";
    case Errc::kCounterWentBackwards: return "counter-went-backwards";
    case Errc::kZeroInterval: return "zero-interval";
    case Errc::kCounterNotFound: return "counter-not-found";
    case Errc::kSourceUnreadable: return "source-unreadable";
    case Errc::kOversizePayload: return "oversize-payload";
    case Errc::kBadMagic: return "bad-magic";
    case Errc::kBadVersion: return "bad-version";
    case Errc::kBadKind: return "bad-kind";
    case Errc::kTruncatedFrame: return "truncated-frame";
    case Errc::kTrailingBytes: return "trailing-bytes";
    case Errc::kBindFailure: return "bind-failure";
    case Errc::kResolveFailure: return "resolve-failure";
    case Errc::kEmptyAfterFilter: return "empty-after-filter";
    case Errc::kNoMotionData: return "no-motion-data";
    case Errc::kUnknownCase: return "unknown-case";
  }
  return "unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(ErrcName(code)) + ": " + message),
      code_(code),
      message_(message) {}

Error& Error::WithLine(std::size_t line) {
  line_ = line;
  return *this;
}

Error& Error::WithByteOffset(std::size_t offset) {
  byte_offset_ = offset;
  return *this;
}

Error& Error::WithRaw(std::string raw) {
  raw_ = std::move(raw);
  return *this;
}

}  // namespace netmeter
