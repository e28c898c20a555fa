#include "speckle/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace speckle {

namespace {
std::atomic<int> g_threads{1};
// Nested calls run serially inside the worker that issued them.
thread_local bool t_in_worker = false;
}

void set_num_threads(int n) { g_threads.store(std::max(1, n)); }

int num_threads() { return g_threads.load(); }

void parallel_for(int begin, int end, const std::function<void(int)>& fn) {
    const int count = end - begin;
    if (count <= 0) return;
    const int workers = t_in_worker ? 1 : std::min(num_threads(), count);
    if (workers <= 1) {
        for (int i = begin; i < end; ++i) fn(i);
        return;
    }
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) {
            const int lo = begin + static_cast<int>(static_cast<long long>(count) * t / workers);
            const int hi = begin + static_cast<int>(static_cast<long long>(count) * (t + 1) / workers);
            pool.emplace_back([lo, hi, &fn, &error = errors[static_cast<std::size_t>(t)]] {
                t_in_worker = true;
                try {
                    for (int i = lo; i < hi; ++i) fn(i);
                } catch (...) {
                    error = std::current_exception();
                }
            });
        }
    }
    // Lowest block first, so the reported error does not depend on timing.
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace speckle
