#pragma once

#include <chrono>
#include <deque>
#include <memory>
#include <mutex>

namespace coopsteer {

class Clock {
 public:
  using time_point = std::chrono::steady_clock::time_point;
  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_until(time_point t) = 0;
};

class SteadyClock final : public Clock {
 public:
  time_point now() override { return std::chrono::steady_clock::now(); }
  void sleep_until(time_point t) override;
};

// Time only moves when someone sleeps. Thread-safe.
class VirtualClock final : public Clock {
 public:
  time_point now() override;
  void sleep_until(time_point t) override;
  void advance(std::chrono::nanoseconds d);

 private:
  std::mutex mutex_;
  time_point now_{};
};

/// Sliding-window limiter: at most `per_minute` admissions in any 60 s window.
/// Shared by every request sent to one endpoint.
class RateLimiter {
 public:
  explicit RateLimiter(int per_minute, std::shared_ptr<Clock> clock = std::make_shared<SteadyClock>());

  // Blocks until a request may be sent, then records it. Returns admission time.
  Clock::time_point acquire();

  int per_minute() const { return per_minute_; }

 private:
  int per_minute_;
  std::shared_ptr<Clock> clock_;
  std::mutex mutex_;
  std::deque<Clock::time_point> admitted_;
};

}  // namespace coopsteer
