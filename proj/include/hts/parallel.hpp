#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace hts {

/// Runs fn(0) .. fn(count - 1) on up to `threads` workers. Tasks write their
/// results into pre-sized, index-addressed storage, so the merge order never
/// depends on scheduling. If tasks throw, the exception of the lowest failing
/// index is rethrown.
inline void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || count <= 1) {
        for (int i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<size_t>(count));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                errors[static_cast<size_t>(i)] = std::current_exception();
            }
        }
    };
    {
        std::vector<std::jthread> pool;
        const int n = std::min(threads, count);
        pool.reserve(static_cast<size_t>(n));
        for (int t = 0; t < n; ++t) {
            pool.emplace_back(worker);
        }
    }
    for (auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
}

} // namespace hts
