#ifndef NETMETER_CLOCK_H_
#define NETMETER_CLOCK_H_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <mutex>
#include <optional>
#include <stop_token>

namespace netmeter {

// Monotonic session clock: NowNs() counts nanoseconds since session start.
class Clock {
 public:
  virtual ~Clock() = default;

  virtual std::uint64_t NowNs() const = 0;

  // Waits until NowNs() >= deadline_ns. Returns false without reaching the
  // deadline when `stop` is requested or the clock cannot advance further.
  virtual bool SleepUntil(std::uint64_t deadline_ns, std::stop_token stop) = 0;
};

class SteadyClock : public Clock {
 public:
  SteadyClock() : start_(std::chrono::steady_clock::now()) {}
  explicit SteadyClock(std::chrono::steady_clock::time_point start)
      : start_(start) {}

  std::uint64_t NowNs() const override;
  bool SleepUntil(std::uint64_t deadline_ns, std::stop_token stop) override;

  std::chrono::steady_clock::time_point start() const { return start_; }

 private:
  std::chrono::steady_clock::time_point start_;
  std::mutex mu_;
  std::condition_variable_any cv_;
};

// Synthetic clock for deterministic tests: sleeping jumps time forward.
// With an end time set, deadlines at or past it are never reached.
class VirtualClock : public Clock {
 public:
  explicit VirtualClock(std::optional<std::uint64_t> end_ns = std::nullopt)
      : end_ns_(end_ns) {}

  std::uint64_t NowNs() const override { return now_ns_.load(); }
  bool SleepUntil(std::uint64_t deadline_ns, std::stop_token stop) override;

 private:
  std::atomic<std::uint64_t> now_ns_{0};
  std::optional<std::uint64_t> end_ns_;
};

}  // namespace netmeter

#endif  // NETMETER_CLOCK_H_
