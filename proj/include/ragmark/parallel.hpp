#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace ragmark {

/// Runs fn(i) for i in [0, n) with at most max_inflight concurrent calls.
/// Results are the caller's business (write to slot i); the first exception
/// by index order is rethrown after all workers join.
template <typename Fn>
void parallel_for_bounded(std::size_t n, std::size_t max_inflight, Fn &&fn) {
    if (n == 0) return;
    const std::size_t workers = std::clamp<std::size_t>(max_inflight, 1, n);
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        errors[i] = std::current_exception();
                    }
                }
            });
        }
    }
    for (auto &e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace ragmark
