#include "coopsteer/rate_limiter.hpp"

#include <stdexcept>
#include <thread>

namespace coopsteer {

void SteadyClock::sleep_until(time_point t) { std::this_thread::sleep_until(t); }

Clock::time_point VirtualClock::now() {
  std::lock_guard lock(mutex_);
  return now_;
}

void VirtualClock::sleep_until(time_point t) {
  std::lock_guard lock(mutex_);
  if (t > now_) now_ = t;
}

void VirtualClock::advance(std::chrono::nanoseconds d) {
  std::lock_guard lock(mutex_);
  now_ += d;
}

RateLimiter::RateLimiter(int per_minute, std::shared_ptr<Clock> clock)
    : per_minute_(per_minute), clock_(std::move(clock)) {
  if (per_minute_ < 1) throw std::invalid_argument("rate limit must be at least 1 request/minute");
}

Clock::time_point RateLimiter::acquire() {
  constexpr auto kWindow = std::chrono::minutes(1);
  std::unique_lock lock(mutex_);
  for (;;) {
    const auto now = clock_->now();
    while (!admitted_.empty() && admitted_.front() <= now - kWindow) admitted_.pop_front();
    if (static_cast<int>(admitted_.size()) < per_minute_) {
      admitted_.push_back(now);
      return now;
    }
    const auto wake = admitted_.front() + kWindow;
    lock.unlock();
    clock_->sleep_until(wake);
    lock.lock();
  }
}

}  // namespace coopsteer
