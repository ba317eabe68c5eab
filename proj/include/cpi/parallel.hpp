#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace cpi {

inline std::atomic<unsigned>& thread_count_storage() {
    static std::atomic<unsigned> n{0};
    return n;
}

inline void set_thread_count(unsigned n) { thread_count_storage().store(n); }

inline unsigned thread_count() {
    unsigned n = thread_count_storage().load();
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    return n;
}

/// Runs fn(i) for i in [0, n) on contiguous static chunks. Workers write to
/// disjoint outputs only, so results do not depend on the thread count.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn) {
    const unsigned workers = std::min<std::size_t>(thread_count(), n == 0 ? 1 : n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t i0 = static_cast<std::size_t>(w) * chunk;
        const std::size_t i1 = std::min(n, i0 + chunk);
        if (i0 >= i1) break;
        pool.emplace_back([&, i0, i1]() {
            try {
                for (std::size_t i = i0; i < i1; ++i) fn(i);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace cpi
