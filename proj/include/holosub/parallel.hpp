#pragma once

// Deterministic parallel_for. Work is partitioned by index; every element
// is computed start-to-finish by exactly one thread with a fixed inner
// order, so results are bitwise identical for any worker count.
// HOLOSUB_THREADS caps the pool size.

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>
#include <vector>

namespace holosub {

inline int max_threads() {
    static const int cached = [] {
        int n = static_cast<int>(std::thread::hardware_concurrency());
        if (n <= 0) n = 1;
        if (const char* env = std::getenv("HOLOSUB_THREADS")) {
            const int cap = std::atoi(env);
            if (cap >= 1) n = std::min(n, cap);
        }
        return n;
    }();
    return cached;
}

// Calls fn(begin, end) on contiguous chunks of [0, count) from worker
// threads (and the calling thread).
inline void parallel_for(std::size_t count,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    const int workers = std::min<std::size_t>(max_threads(), count);
    if (workers <= 1 || count < 2) {
        if (count > 0) fn(0, count);
        return;
    }
    const std::size_t chunk = (count + workers - 1) / workers;
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers) - 1);
    for (int w = 1; w < workers; ++w) {
        const std::size_t begin = chunk * static_cast<std::size_t>(w);
        const std::size_t end = std::min(count, begin + chunk);
        if (begin >= end) break;
        threads.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    fn(0, std::min(count, chunk));
    for (auto& t : threads) t.join();
}

}  // namespace holosub
