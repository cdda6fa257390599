#pragma once

#include <atomic>
#include <cstdint>
#include <thread>
#include <vector>

namespace jumplab {

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : int(hc);
}

// Splits [0, n) into a FIXED number of contiguous chunks (independent of the
// thread count) and processes them from a shared queue. Workers receive
// (begin, end, chunk_index); callers keep per-chunk state and merge it in
// chunk order, so results are bit-identical for any --threads value.
template <class Fn>
void parallel_chunks(std::uint64_t n, int threads, int n_chunks, Fn&& fn) {
    if (n == 0) return;
    if (n_chunks < 1) n_chunks = 1;
    if (std::uint64_t(n_chunks) > n) n_chunks = int(n);
    threads = resolve_threads(threads);

    auto chunk_bounds = [n, n_chunks](int c) {
        const std::uint64_t b = n * std::uint64_t(c) / std::uint64_t(n_chunks);
        const std::uint64_t e = n * std::uint64_t(c + 1) / std::uint64_t(n_chunks);
        return std::pair<std::uint64_t, std::uint64_t>(b, e);
    };

    if (threads <= 1) {
        for (int c = 0; c < n_chunks; ++c) {
            auto [b, e] = chunk_bounds(c);
            fn(b, e, c);
        }
        return;
    }

    std::atomic<int> next{0};
    auto worker = [&] {
        for (;;) {
            const int c = next.fetch_add(1);
            if (c >= n_chunks) return;
            auto [b, e] = chunk_bounds(c);
            fn(b, e, c);
        }
    };
    std::vector<std::thread> pool;
    const int n_workers = std::min(threads, n_chunks);
    pool.reserve(n_workers - 1);
    for (int i = 0; i + 1 < n_workers; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
}

}  // namespace jumplab
