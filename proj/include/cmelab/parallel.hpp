#pragma once

#include <functional>
#include <thread>
#include <vector>

namespace cmelab {

/// Strided worker pool. Tasks write disjoint output slots, so results do not
/// depend on the worker count.
inline void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w]() {
            for (int i = w; i < n; i += workers) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace cmelab
