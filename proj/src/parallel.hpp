#ifndef DIRRHO_SRC_PARALLEL_HPP
#define DIRRHO_SRC_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace dirrho::detail {

/// Runs fn(i) for i in [0, count) across a small thread pool. Each index is
/// an independent task writing only to its own slot, so results do not depend
/// on the thread count. The first exception, if any, is rethrown.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn) {
    unsigned hw = std::thread::hardware_concurrency();
    std::size_t workers = std::min<std::size_t>(hw == 0 ? 1 : hw, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }

    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < count; i += workers) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace dirrho::detail

#endif
