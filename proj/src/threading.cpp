#include "modrec/threading.hpp"

#include <atomic>
#include <cstdlib>
#include <exception>
#include <thread>
#include <vector>

namespace modrec {

int thread_count() {
    if (const char* env = std::getenv("MODREC_THREADS")) {
        int n = std::atoi(env);
        if (n >= 1) return n;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::int64_t begin, std::int64_t end,
                  const std::function<void(std::int64_t)>& fn) {
    const std::int64_t total = end - begin;
    if (total <= 0) return;
    const int workers = static_cast<int>(std::min<std::int64_t>(thread_count(), total));
    if (workers == 1) {
        for (std::int64_t i = begin; i < end; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{begin};
    std::exception_ptr error;
    std::atomic<bool> failed{false};
    auto body = [&]() {
        while (!failed.load(std::memory_order_relaxed)) {
            std::int64_t i = next.fetch_add(1);
            if (i >= end) break;
            try {
                fn(i);
            } catch (...) {
                if (!failed.exchange(true)) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers) - 1);
    for (int t = 1; t < workers; ++t) pool.emplace_back(body);
    body();
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace modrec
