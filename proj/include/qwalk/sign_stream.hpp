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

#include <cstdint>

namespace qwalk {

// Counter-based sign source. Every draw is a pure function of
// (seed, path_id, step), so any single draw is O(1) random access and the
// stream is identical regardless of evaluation order or thread count.

// 64-bit finalizer from MurmurHash3 (bijective avalanche mix).
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z ^= z >> 33;
    z *= 0xff51afd7ed558ccdULL;
    z ^= z >> 33;
    z *= 0xc4ceb9fe1a85ec53ULL;
    z ^= z >> 33;
    return z;
}

// Three chained rounds; each input is injected with a distinct odd
// multiplier so permuting (seed, path_id, step) cannot collide.
constexpr std::uint64_t counter_word(std::uint64_t seed, std::uint64_t path_id,
                                     std::uint64_t step) noexcept {
    std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
    h = mix64(h ^ (path_id * 0xbf58476d1ce4e5b9ULL + 0x94d049bb133111ebULL));
    h = mix64(h ^ (step * 0x2545f4914f6cdd1dULL + 0xd6e8feb86659fd93ULL));
    return h;
}

// Equiprobable +1 / -1 from the top bit of the counter word.
constexpr int sample_sign(std::uint64_t seed, std::uint64_t path_id, std::uint64_t step) noexcept {
    return (counter_word(seed, path_id, step) >> 63) ? 1 : -1;
}

// Uniform double in [0, 1), 53 significant bits, from the same word family.
// Callers must keep the step index disjoint from sign draws; the walk
// reserves step = n_q for the initial-condition draw.
constexpr double uniform_draw(std::uint64_t seed, std::uint64_t path_id,
                              std::uint64_t step) noexcept {
    return static_cast<double>(counter_word(seed, path_id, step) >> 11) * 0x1.0p-53;
}

} // namespace qwalk
