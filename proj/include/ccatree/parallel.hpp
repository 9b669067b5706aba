#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace ccatree {

inline int default_workers() {
    const auto hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Calls fn(worker, i) for every i in [0, count) using up to `workers` threads.
// Work is handed out in fixed-size blocks; callers store results by index, so
// the outcome does not depend on scheduling. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
    workers = std::max(1, workers);
    if (workers == 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) fn(0, i);
        return;
    }
    const auto nthreads = static_cast<std::size_t>(std::min<std::size_t>(static_cast<std::size_t>(workers), count));
    constexpr std::size_t block = 64;
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (std::size_t w = 0; w < nthreads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (;;) {
                    const std::size_t start = next.fetch_add(block);
                    if (start >= count) break;
                    const std::size_t stop = std::min(count, start + block);
                    for (std::size_t i = start; i < stop; ++i) fn(static_cast<int>(w), i);
                }
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next.store(count);
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace ccatree
