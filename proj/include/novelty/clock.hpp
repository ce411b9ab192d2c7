#pragma once

#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "novelty/error.hpp"

namespace novelty {

/// Time source used for backoff and rate limiting, in seconds.
class Clock {
public:
    virtual ~Clock() = default;
    virtual double now() = 0;
    virtual void sleep_for(double seconds) = 0;
};

class SystemClock final : public Clock {
public:
    double now() override;
    void sleep_for(double seconds) override;
};

/// Deterministic clock for tests: sleeping advances time instantly.
class VirtualClock final : public Clock {
public:
    double now() override;
    void sleep_for(double seconds) override;
    /// Durations passed to sleep_for, in call order.
    std::vector<double> sleeps() const;

private:
    mutable std::mutex mu_;
    double now_ = 0.0;
    std::vector<double> sleeps_;
};

/// Marks a failure worth retrying (network errors, 5xx, 429).
class TransientError : public Error {
public:
    using Error::Error;
};

struct RetryPolicy {
    int max_retries = 3;
    double base_delay = 1.0;  // seconds; doubles after every failed attempt
};

/// Runs `fn`, retrying on TransientError with exponential backoff
/// (base, 2*base, 4*base, ...). When retries are exhausted the last error is
/// rethrown as a plain, non-transient Error of the same kind.
template <typename Fn>
auto with_retries(Clock& clock, const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
    double delay = policy.base_delay;
    for (int attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const TransientError& e) {
            if (attempt >= policy.max_retries) {
                throw Error(e.kind(), std::string(e.what()) + " (after " +
                                          std::to_string(attempt + 1) + " attempts)");
            }
            clock.sleep_for(delay);
            delay *= 2.0;
        }
    }
}

/// Per-host pacing: consecutive dispatches to one host are at least
/// 1/rate seconds apart, so any window of w seconds sees at most
/// floor(rate*w)+1 requests. Dispatch is serialized per host; distinct
/// hosts do not block each other.
class RateLimiter {
public:
    RateLimiter(Clock& clock, double requests_per_second);

    /// Blocks until a request to `host` may be sent; returns the dispatch time.
    double acquire(const std::string& host);
    double rate() const noexcept { return rate_; }

private:
    struct HostSlot {
        std::mutex mu;
        double next_allowed = -1e300;
    };

    Clock& clock_;
    double rate_;
    std::mutex map_mu_;
    std::map<std::string, std::unique_ptr<HostSlot>> hosts_;
};

}  // namespace novelty
