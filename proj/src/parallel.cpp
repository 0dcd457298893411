#include "bsdelab/parallel.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace bsdelab {

void parallel_chunks(std::size_t count, int threads,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (count == 0) return;
    const std::size_t chunks = std::min(count, kParallelChunks);
    auto bounds = [&](std::size_t c) {
        const std::size_t begin = c * count / chunks;
        const std::size_t end = (c + 1) * count / chunks;
        return std::pair{begin, end};
    };
    if (threads <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) {
            auto [b, e] = bounds(c);
            fn(c, b, e);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= chunks) return;
            auto [b, e] = bounds(c);
            try {
                fn(c, b, e);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int nthreads = std::min<std::size_t>(static_cast<std::size_t>(threads), chunks);
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

} // namespace bsdelab
