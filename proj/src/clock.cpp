#include "novelty/clock.hpp"

#include <chrono>
#include <thread>

namespace novelty {

double SystemClock::now() {
    using namespace std::chrono;
    return duration<double>(steady_clock::now().time_since_epoch()).count();
}

void SystemClock::sleep_for(double seconds) {
    if (seconds > 0) {
        std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
    }
}

double VirtualClock::now() {
    std::lock_guard lock(mu_);
    return now_;
}

void VirtualClock::sleep_for(double seconds) {
    std::lock_guard lock(mu_);
    sleeps_.push_back(seconds);
    if (seconds > 0) {
        now_ += seconds;
    }
}

std::vector<double> VirtualClock::sleeps() const {
    std::lock_guard lock(mu_);
    return sleeps_;
}

RateLimiter::RateLimiter(Clock& clock, double requests_per_second)
    : clock_(clock), rate_(requests_per_second) {
    if (!(rate_ > 0.0)) {
        throw Error(ErrorKind::InvalidConfig, "rate limit must be positive");
    }
}

double RateLimiter::acquire(const std::string& host) {
    HostSlot* slot = nullptr;
    {
        std::lock_guard lock(map_mu_);
        auto& entry = hosts_[host];
        if (!entry) {
            entry = std::make_unique<HostSlot>();
        }
        slot = entry.get();
    }
    std::lock_guard lock(slot->mu);
    double t = clock_.now();
    if (t < slot->next_allowed) {
        clock_.sleep_for(slot->next_allowed - t);
        t = clock_.now();
    }
    slot->next_allowed = t + 1.0 / rate_;
    return t;
}

}  // namespace novelty
