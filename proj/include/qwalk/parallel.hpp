/*
 * Copyright 2026 qwalk authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

namespace qwalk {

// Items are partitioned into fixed blocks of kReduceBlock regardless of
// thread count, block partials are merged strictly in block order, and any
// block failure is reported from the lowest failing block. Together these
// make every reduction bit-identical for any --threads value.
inline constexpr std::int64_t kReduceBlock = 1024;

int resolve_threads(int requested);

template <class Partial, class MakeBlock, class Merge>
Partial ordered_block_reduce(std::int64_t n_items, int threads, Partial acc,
                             MakeBlock&& make_block, Merge&& merge) {
    if (n_items <= 0) return acc;
    const std::int64_t n_blocks = (n_items + kReduceBlock - 1) / kReduceBlock;
    auto block_range = [&](std::int64_t b) {
        const std::int64_t lo = b * kReduceBlock;
        const std::int64_t hi = std::min(n_items, lo + kReduceBlock);
        return std::pair<std::int64_t, std::int64_t>(lo, hi);
    };

    if (threads <= 1 || n_blocks == 1) {
        for (std::int64_t b = 0; b < n_blocks; ++b) {
            const auto [lo, hi] = block_range(b);
            merge(acc, make_block(lo, hi));
        }
        return acc;
    }

    // Waves bound the number of live partials; within a wave, workers pull
    // block indices from a shared counter, then partials merge in order.
    const std::int64_t wave = std::min<std::int64_t>(n_blocks, std::int64_t(threads) * 4);
    std::vector<std::optional<Partial>> slots(static_cast<std::size_t>(wave));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(wave));

    for (std::int64_t wave_lo = 0; wave_lo < n_blocks; wave_lo += wave) {
        const std::int64_t wave_hi = std::min(n_blocks, wave_lo + wave);
        std::atomic<std::int64_t> next(wave_lo);
        auto worker = [&]() {
            for (;;) {
                const std::int64_t b = next.fetch_add(1);
                if (b >= wave_hi) return;
                const auto slot = static_cast<std::size_t>(b - wave_lo);
                try {
                    const auto [lo, hi] = block_range(b);
                    slots[slot].emplace(make_block(lo, hi));
                } catch (...) {
                    errors[slot] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        const int n_workers = static_cast<int>(std::min<std::int64_t>(threads, wave_hi - wave_lo));
        pool.reserve(static_cast<std::size_t>(n_workers));
        for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
        for (std::thread& th : pool) th.join();

        for (std::int64_t b = wave_lo; b < wave_hi; ++b) {
            const auto slot = static_cast<std::size_t>(b - wave_lo);
            if (errors[slot]) std::rethrow_exception(errors[slot]);
            merge(acc, std::move(*slots[slot]));
            slots[slot].reset();
            errors[slot] = nullptr;
        }
    }
    return acc;
}

} // namespace qwalk
