#pragma once

#include <chrono>
#include <random>
#include <thread>

#include "editbench/error.hpp"

namespace editbench {

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{200};
    std::chrono::milliseconds max_delay{5000};
};

/// Runs `fn`, retrying retryable ProviderErrors with jittered exponential backoff.
template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
    thread_local std::minstd_rand jitter_rng{std::random_device{}()};
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (const ProviderError& e) {
            if (!e.retryable() || attempt >= policy.max_attempts) throw;
            auto delay = policy.base_delay * (1 << (attempt - 1));
            if (delay > policy.max_delay) delay = policy.max_delay;
            if (delay.count() > 0) {
                std::uniform_int_distribution<long> jitter(0, delay.count() / 2);
                std::this_thread::sleep_for(delay + std::chrono::milliseconds(jitter(jitter_rng)));
            }
        }
    }
}

}  // namespace editbench
