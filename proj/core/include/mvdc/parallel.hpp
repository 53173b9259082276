#pragma once

#include <atomic>
#include <functional>
#include <thread>
#include <vector>

namespace mvdc {

/// Runs fn(i) for i in [0, n). Each index is processed exactly once by one
/// worker; results must be written to per-index slots so the outcome does not
/// depend on scheduling. threads <= 1 (or 0 with a single-core machine) runs
/// inline.
inline void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    threads = std::min(threads, n);
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

}  // namespace mvdc
