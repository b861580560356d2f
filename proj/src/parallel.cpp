#include "memsim/parallel.hpp"

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace memsim {

namespace {
std::size_t g_threads = 1;
thread_local bool g_in_worker = false;
}

void set_thread_count(std::size_t n) { g_threads = n == 0 ? 1 : n; }
std::size_t thread_count() { return g_threads; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min(g_threads, n);
    if (workers <= 1 || g_in_worker) {  // nested loops stay serial
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto work = [&] {
        g_in_worker = true;
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
    if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace memsim
