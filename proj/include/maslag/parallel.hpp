#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace maslag {

/// Worker count: MASLAG_THREADS if set to a positive integer, else the
/// hardware concurrency (at least 1).
inline int thread_count() {
    if (const char* env = std::getenv("MASLAG_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return int(std::min<long>(v, 256));
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Calls f(i) for i in [0, n) over contiguous chunks. Each index is visited
/// exactly once, so results written per index do not depend on the thread count.
/// The exception from the lowest failing chunk is rethrown after all workers join.
template <class F>
void parallel_for(int n, F&& f) {
    const int workers = std::min(thread_count(), std::max(1, n / 64));
    if (workers <= 1) {
        for (int i = 0; i < n; ++i) f(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
        const int begin = int(std::int64_t(n) * w / workers);
        const int end = int(std::int64_t(n) * (w + 1) / workers);
        pool.emplace_back([begin, end, &f, &err = errors[w]] {
            try {
                for (int i = begin; i < end; ++i) f(i);
            } catch (...) {
                err = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

} // namespace maslag
