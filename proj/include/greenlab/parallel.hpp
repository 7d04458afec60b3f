#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace greenlab {

// Process-wide worker count used by solves and MC replicas (set by --jobs).
inline std::atomic<int>& default_jobs() {
    static std::atomic<int> jobs{1};
    return jobs;
}

// Runs fn(i) for i in [0,n); results must be written to per-index slots so the
// outcome does not depend on the number of workers.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, int jobs = 0) {
    if (jobs <= 0) jobs = default_jobs().load();
    jobs = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    std::vector<std::thread> pool;
    for (int w = 0; w < jobs; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lk(err_mu);
                    if (!err) err = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

}  // namespace greenlab
