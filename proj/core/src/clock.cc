#include "netmeter/clock.h"

namespace netmeter {

std::uint64_t SteadyClock::NowNs() const {
  const auto elapsed = std::chrono::steady_clock::now() - start_;
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(elapsed).count());
}

bool SteadyClock::SleepUntil(std::uint64_t deadline_ns, std::stop_token stop) {
  const auto deadline = start_ + std::chrono::nanoseconds(deadline_ns);
  std::unique_lock lock(mu_);
  cv_.wait_until(lock, stop, deadline, [] { return false; });
  return !stop.stop_requested();
}

bool VirtualClock::SleepUntil(std::uint64_t deadline_ns, std::stop_token stop) {
  if (stop.stop_requested()) return false;
  if (end_ns_ && deadline_ns >= *end_ns_) {
    now_ns_ = *end_ns_;
    return false;
  }
  if (deadline_ns > now_ns_) now_ns_ = deadline_ns;
  return true;
}

}  // namespace netmeter
