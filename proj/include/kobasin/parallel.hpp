#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace kobasin {

/// Data-parallel map over an index range. The range is cut into contiguous
/// bands, one per worker; each index is processed exactly once and callers
/// write only to per-index slots, so results do not depend on scheduling.
class ParallelMap {
public:
    explicit ParallelMap(unsigned threads = 1) : threads_(std::max(1u, threads)) {}

    unsigned threads() const { return threads_; }

    void for_each(std::size_t n, const std::function<void(std::size_t)>& fn) const {
        if (threads_ == 1 || n < 2 * threads_) {
            for (std::size_t i = 0; i < n; ++i) fn(i);
            return;
        }
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::jthread> workers;
        const std::size_t band = (n + threads_ - 1) / threads_;
        for (unsigned t = 0; t < threads_; ++t) {
            std::size_t lo = t * band;
            std::size_t hi = std::min(n, lo + band);
            if (lo >= hi) break;
            workers.emplace_back([&, lo, hi] {
                try {
                    for (std::size_t i = lo; i < hi; ++i) fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            });
        }
        workers.clear();
        if (failure) std::rethrow_exception(failure);
    }

private:
    unsigned threads_;
};

}  // namespace kobasin
