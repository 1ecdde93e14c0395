#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace editbench {

/// Applies `fn(item, index)` to every item with at most `max_inflight` concurrent calls.
/// Results keep input order. The first exception thrown by `fn` is rethrown after all
/// workers finish.
template <typename T, typename Fn>
auto parallel_map(const std::vector<T>& items, std::size_t max_inflight, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, const T&, std::size_t>> {
    using R = std::invoke_result_t<Fn&, const T&, std::size_t>;
    std::vector<R> results(items.size());
    const std::size_t workers = std::min(std::max<std::size_t>(max_inflight, 1), items.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < items.size(); ++i) results[i] = fn(items[i], i);
        return results;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (auto i = next.fetch_add(1); i < items.size(); i = next.fetch_add(1)) {
                try {
                    results[i] = fn(items[i], i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    return results;
}

}  // namespace editbench
