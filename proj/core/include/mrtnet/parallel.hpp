#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace mrtnet {

/// Runs fn(0..count-1) across worker threads. Work items write to disjoint
/// slots keyed by index, so results are identical for any thread count.
inline void parallel_for(long count, const std::function<void(long)>& fn, int threads = 0) {
    if (count <= 0) return;
    long workers = threads > 0 ? threads : static_cast<long>(std::thread::hardware_concurrency());
    workers = std::max(1L, std::min(workers, count));
    if (workers == 1) {
        for (long k = 0; k < count; ++k) fn(k);
        return;
    }
    std::atomic<long> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const long k = next.fetch_add(1);
                if (k >= count) return;
                try {
                    fn(k);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace mrtnet
