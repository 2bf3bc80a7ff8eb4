// SPDX-License-Identifier: Apache-2.0
// Copyright (c) 2026 the emtrace authors

#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

// Deterministic data parallelism. Work items are independent and write only
// to their own index slot; the partition into contiguous blocks is a pure
// function of (n, workers), so results never depend on scheduling. Any merge
// that is order sensitive (path dedup, running statistics) happens after the
// join, in index order, on the calling thread.

namespace emtrace {

inline unsigned default_workers() {
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1u : hw;
}

template <typename F>
void parallel_for(std::size_t n, unsigned workers, F&& body) {
    if (n == 0) return;
    workers = std::max(1u, workers);
    if (workers == 1 || n == 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t blocks = std::min<std::size_t>(workers, n);
    const std::size_t chunk = (n + blocks - 1) / blocks;
    std::vector<std::thread> pool;
    pool.reserve(blocks);
    std::vector<std::exception_ptr> errors(blocks);
    for (std::size_t b = 0; b < blocks; ++b) {
        const std::size_t lo = b * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        pool.emplace_back([&body, &errors, b, lo, hi] {
            try {
                for (std::size_t i = lo; i < hi; ++i) body(i);
            } catch (...) {
                errors[b] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

}  // namespace emtrace
