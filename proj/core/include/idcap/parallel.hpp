#pragma once

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace idcap {

/// Worker cap for per-sample evaluation loops: IDCAP_THREADS when set,
/// otherwise 1. Results always land in index-addressed slots, so the
/// reduction order (and therefore every output byte) is independent of the
/// schedule.
inline std::size_t worker_count(std::size_t n) {
    std::size_t t = 1;
    if (const char* env = std::getenv("IDCAP_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 1) t = static_cast<std::size_t>(v);
    }
    return t < n ? t : (n == 0 ? 1 : n);
}

template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const std::size_t workers = worker_count(n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                fn(i);
            }
        });
    }
    for (std::thread& t : pool) t.join();
}

}  // namespace idcap
