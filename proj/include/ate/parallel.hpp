#ifndef ATE_PARALLEL_HPP
#define ATE_PARALLEL_HPP

#include <atomic>
#include <cstdlib>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ate {

inline int default_threads() {
    if (const char* env = std::getenv("ATE_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

// Runs fn(i) for i in [0, n). Work items must be independent; determinism is
// the caller's job (key every stochastic item by its index).
inline void parallel_for(int n, int n_threads, const std::function<void(int)>& fn) {
    if (n <= 0) return;
    if (n_threads <= 0) n_threads = default_threads();
    if (n_threads == 1 || n == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next(0);
    std::exception_ptr first_error;
    std::mutex err_mtx;
    auto worker = [&]() {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= n) break;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mtx);
                if (!first_error) first_error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    int k = std::min(n_threads, n);
    pool.reserve(k);
    for (int j = 0; j < k; ++j) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace ate

#endif
