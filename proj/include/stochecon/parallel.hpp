#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace stochecon::parallel {

inline int resolve_threads(int requested)
{
    if (requested > 0) {
        return requested;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs body(chunk_index, begin, end) over [0, total) split into fixed-size
/// chunks. Chunk boundaries depend only on (total, chunk_size), so any
/// per-chunk result written to slot chunk_index is independent of the worker
/// count. The first exception thrown by any chunk is rethrown on the caller.
template <class Body>
std::size_t for_each_chunk(std::uint64_t total, std::uint64_t chunk_size, int threads, Body&& body)
{
    chunk_size = std::max<std::uint64_t>(chunk_size, 1);
    const std::size_t chunks = static_cast<std::size_t>((total + chunk_size - 1) / chunk_size);
    const int workers = std::min<int>(resolve_threads(threads), static_cast<int>(std::max<std::size_t>(chunks, 1)));

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t c = next.fetch_add(1);
            if (c >= chunks) {
                return;
            }
            {
                std::lock_guard lock(failure_mutex);
                if (failure) {
                    return;
                }
            }
            const std::uint64_t begin = c * chunk_size;
            const std::uint64_t end = std::min<std::uint64_t>(total, begin + chunk_size);
            try {
                body(c, begin, end);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                return;
            }
        }
    };

    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int i = 0; i < workers; ++i) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return chunks;
}

}  // namespace stochecon::parallel
