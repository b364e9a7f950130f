#pragma once

#include "cloakcatch/time.hpp"

#include <atomic>
#include <chrono>

namespace cloakcatch::server {

class Clock {
public:
    virtual ~Clock() = default;
    virtual Timestamp now() const = 0;
};

class SystemClock final : public Clock {
public:
    Timestamp now() const override { return now_utc(); }
};

/// Test clock; only moves when told to.
class ManualClock final : public Clock {
public:
    explicit ManualClock(Timestamp start = Timestamp{}) : ms_(start.time_since_epoch().count()) {}

    Timestamp now() const override { return Timestamp(std::chrono::milliseconds(ms_.load())); }

    void set(Timestamp t) { ms_.store(t.time_since_epoch().count()); }

    void advance(std::chrono::milliseconds d) { ms_.fetch_add(d.count()); }

private:
    std::atomic<std::int64_t> ms_;
};

}  // namespace cloakcatch::server
