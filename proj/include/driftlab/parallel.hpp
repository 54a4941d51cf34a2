#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace driftlab {

/// Worker count from DRIFTLAB_WORKERS, else hardware concurrency.
inline unsigned default_workers() {
    if (const char* env = std::getenv("DRIFTLAB_WORKERS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (...) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/**
 * Calls body(begin, end) on contiguous chunks of [0, n). Chunks are disjoint,
 * so bodies that write only their own range need no synchronization.
 * The first exception thrown by any chunk is rethrown. Ranges shorter than `min_parallel`
 * run inline, where thread start-up would cost more than it saves.
 */
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body, std::size_t min_parallel = 2048) {
    workers = std::max(1u, workers);
    if (workers == 1 || n < min_parallel) {
        body(std::size_t{0}, n);
        return;
    }
    const std::size_t chunks = std::min<std::size_t>(workers, n);
    std::vector<std::exception_ptr> errors(chunks);
    std::vector<std::thread> pool;
    pool.reserve(chunks);
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t lo = n * c / chunks;
        const std::size_t hi = n * (c + 1) / chunks;
        pool.emplace_back([&, c, lo, hi] {
            try {
                body(lo, hi);
            } catch (...) {
                errors[c] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace driftlab
