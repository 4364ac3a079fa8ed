#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <thread>
#include <vector>

namespace kgfuse {

// Apply fn(i) for i in [0, n) across up to `workers` threads. fn must not
// throw; callers record per-item failures themselves so that item order and
// error reporting stay deterministic. workers <= 1 runs inline, preserving
// sequential issuance for deterministic mode.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (n == 0) return;
    std::size_t effective = std::min<std::size_t>(
        n, static_cast<std::size_t>(std::max(workers, 1)));
    if (effective <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(effective);
    for (std::size_t w = 0; w < effective; ++w) {
        pool.emplace_back([&] {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) break;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace kgfuse
