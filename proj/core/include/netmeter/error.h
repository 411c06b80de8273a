#ifndef NETMETER_ERROR_H_
#define NETMETER_ERROR_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace netmeter {

// Every failure the library reports carries one of these kinds, so callers
// (and the CLI exit-code mapping) can branch without string matching.
enum class Errc {
  kInvalidArgument,
  // channel model
  kNonpositiveDistance,
  kDistanceBelowReference,
  kNonpositiveRate,
  kZeroThroughput,
  // trace codec / recorder
  kMalformedLine,
  kUnknownType,
  kMissingHeader,
  kUsage,
  kIo,
  // collectors
  kCounterWentBackwards,
  kZeroInterval,
  kCounterNotFound,
  kSourceUnreadable,
  // probe
  kOversizePayload,
  kBadMagic,
  kBadVersion,
  kBadKind,
  kTruncatedFrame,
  kTrailingBytes,
  kBindFailure,
  kResolveFailure,
  // analysis / simulation
  kEmptyAfterFilter,
  kNoMotionData,
  kUnknownCase,
};

std::string_view ErrcName(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message);

  Errc code() const { return code_; }
  // what() without the leading error-kind name.
  const std::string& message() const { return message_; }

  // 1-based line number within the input text, when the error is tied to one.
  std::optional<std::size_t> line() const { return line_; }
  // 0-based byte offset within the offending line.
  std::optional<std::size_t> byte_offset() const { return byte_offset_; }
  // The raw offending input, kept for unknown-type records.
  const std::string& raw() const { return raw_; }

  Error& WithLine(std::size_t line);
  Error& WithByteOffset(std::size_t offset);
  Error& WithRaw(std::string raw);

 private:
  Errc code_;
  std::string message_;
  std::optional<std::size_t> line_;
  std::optional<std::size_t> byte_offset_;
  std::string raw_;
};

}  // namespace netmeter

#endif  // NETMETER_ERROR_H_
