#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace inhomog {

inline int worker_count() {
    if (const char* env = std::getenv("INHOMOG_THREADS")) {
        int n = std::atoi(env);
        if (n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Splits [0, n) into a fixed number of chunks (independent of the thread count,
// so results merged in chunk order are reproducible) and runs them on a pool.
template <class Result, class Fn>
std::vector<Result> parallel_chunks(long n, Fn&& fn, int chunks = 64) {
    chunks = int(std::max<long>(1, std::min<long>(chunks, n)));
    std::vector<Result> out(chunks);
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto work = [&] {
        for (int c; (c = next.fetch_add(1)) < chunks;) {
            long lo = n * c / chunks, hi = n * (c + 1) / chunks;
            try {
                out[c] = fn(lo, hi);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
            }
        }
    };
    int threads = std::min(worker_count(), chunks);
    if (threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (err) std::rethrow_exception(err);
    return out;
}

}  // namespace inhomog
