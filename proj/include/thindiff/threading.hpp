#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

namespace thindiff {

// Process-wide worker cap set by the CLI --threads flag; defaults to the
// hardware concurrency. Results never depend on this value: parallel regions
// write disjoint outputs and reduce partials in a fixed order.
namespace detail {
inline int& thread_cap() {
    static int cap = std::max(1u, std::thread::hardware_concurrency());
    return cap;
}
}  // namespace detail

inline int max_threads() { return detail::thread_cap(); }
inline void set_max_threads(int n) { detail::thread_cap() = std::max(1, n); }

// Runs fn(begin, end) over a partition of [0, n) on up to max_threads()
// workers. Falls back to a single inline call when one worker suffices.
template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn) {
    if (n <= 0) return;
    int workers = std::min<std::int64_t>(max_threads(), n);
    if (workers <= 1) {
        fn(std::int64_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::int64_t chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
        std::int64_t begin = w * chunk;
        std::int64_t end = std::min<std::int64_t>(begin + chunk, n);
        if (begin >= end) break;
        pool.emplace_back([&fn, begin, end] { fn(begin, end); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace thindiff
