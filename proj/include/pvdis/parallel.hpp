#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace pvdis {

/// Runs fn(begin, end, chunk_index) over contiguous chunks of [0, n).
/// Chunk boundaries depend only on (n, chunks), never on scheduling, so
/// any per-chunk accumulation combined in chunk order is reproducible.
inline void run_chunked(std::size_t n, std::size_t chunks, int threads,
                        const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    chunks = std::min(chunks, n);
    if (chunks == 0) chunks = 1;
    const std::size_t base = n / chunks;
    const std::size_t rem = n % chunks;
    std::vector<std::pair<std::size_t, std::size_t>> ranges;
    ranges.reserve(chunks);
    std::size_t begin = 0;
    for (std::size_t c = 0; c < chunks; ++c) {
        const std::size_t len = base + (c < rem ? 1 : 0);
        ranges.emplace_back(begin, begin + len);
        begin += len;
    }

    const std::size_t workers =
        std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), chunks);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chunks; ++c) fn(ranges[c].first, ranges[c].second, c);
        return;
    }

    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                // static assignment: worker w owns chunks w, w+workers, ...
                for (std::size_t c = w; c < chunks; c += workers) {
                    fn(ranges[c].first, ranges[c].second, c);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (std::thread& t : pool) t.join();
    for (const std::exception_ptr& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

} // namespace pvdis
