#pragma once

#include <chrono>
#include <thread>

#include "tweetvault/civil_time.hpp"

namespace tweetvault {

// Injectable time source; everything timing-sensitive goes through this.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual EpochMs now_ms() = 0;
  virtual void sleep_until(EpochMs t) = 0;

  void sleep_for(EpochMs ms) {
    if (ms > 0) sleep_until(now_ms() + ms);
  }
};

class SystemClock final : public Clock {
 public:
  EpochMs now_ms() override {
    using namespace std::chrono;
    return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
  }
  void sleep_until(EpochMs t) override {
    auto d = t - now_ms();
    if (d > 0) std::this_thread::sleep_for(std::chrono::milliseconds(d));
  }
};

// Time only moves when someone sleeps (or advance() is called).
class SimulatedClock final : public Clock {
 public:
  explicit SimulatedClock(EpochMs start = 0) : now_(start) {}
  EpochMs now_ms() override { return now_; }
  void sleep_until(EpochMs t) override {
    if (t > now_) now_ = t;
  }
  void advance(EpochMs ms) { now_ += ms; }

 private:
  EpochMs now_;
};

}  // namespace tweetvault
