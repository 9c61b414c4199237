#pragma once

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace uavplan {

/// Worker-count cap: PLANNER_THREADS if set, else hardware parallelism.
inline int planner_threads() {
    if (const char* env = std::getenv("PLANNER_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs body(i) for i in [0, count) across worker threads. The body must
/// write only to per-index slots; iteration order is unspecified.
template <typename Body>
void parallel_for(std::int64_t count, Body&& body) {
    const int n_threads = std::min<std::int64_t>(planner_threads(), count);
    if (n_threads <= 1) {
        for (std::int64_t i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> workers;
    workers.reserve(n_threads);
    for (int t = 0; t < n_threads; ++t) {
        workers.emplace_back([&] {
            for (std::int64_t i = next.fetch_add(1); i < count; i = next.fetch_add(1))
                body(i);
        });
    }
    for (auto& w : workers) w.join();
}

} // namespace uavplan
