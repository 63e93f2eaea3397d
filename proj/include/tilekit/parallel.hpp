#pragma once

#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace tilekit {

// Worker-pool size: explicit argument, else TILEKIT_THREADS, else hardware.
inline int resolve_threads(int requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("TILEKIT_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

// Runs fn(row) for every row in [0, rows). Rows are split into contiguous
// blocks, one per worker; every row writes disjoint output, so results do not
// depend on the number of threads.
inline void parallel_rows(int rows, int threads, const std::function<void(int)>& fn) {
    threads = std::max(1, std::min(threads, rows));
    if (threads == 1) {
        for (int i = 0; i < rows; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (int t = 0; t < threads; ++t) {
        int begin = static_cast<int>(static_cast<long long>(rows) * t / threads);
        int end = static_cast<int>(static_cast<long long>(rows) * (t + 1) / threads);
        pool.emplace_back([&, begin, end] {
            try {
                for (int i = begin; i < end; ++i) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (std::thread& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

} // namespace tilekit
