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

// Time grid with n_q steps on [0, 1]: t_k = k / n_q, delta_t = 1 / n_q.
// n_q is capped so every t_k and every step index is exact in a double.
struct QuantumScale {
    std::int64_t n_q = 0;
    double delta_t = 0.0;
};

inline constexpr std::int64_t kMinSteps = 2;
inline constexpr std::int64_t kMaxSteps = std::int64_t(1) << 40;

QuantumScale make_scale(std::int64_t n_q);

// grid_time(s, k) = k / n_q, valid for 0 <= k <= n_q. Computed as a single
// division so t_0 = 0 and t_{n_q} = 1 exactly.
double grid_time(const QuantumScale& scale, std::int64_t k);

// Magnitude bands, ordered. A finite value falls in exactly one band:
//   |v| <  infinitesimal_cut   -> infinitesimal
//   |v| <  appreciable_low     -> small_gap
//   |v| <= appreciable_high    -> appreciable
//   |v| <= limited_cut         -> large_gap
//   otherwise                  -> unlimited   (includes infinities)
enum class Classification {
    infinitesimal = 0,
    small_gap = 1,
    appreciable = 2,
    large_gap = 3,
    unlimited = 4,
};

inline constexpr int kClassificationCount = 5;

const char* to_string(Classification c) noexcept;

struct TolerancePolicy {
    double infinitesimal_cut = 0.0;
    double appreciable_low = 0.0;
    double appreciable_high = 0.0;
    double limited_cut = 0.0;

    // Throws invalid-value unless all cuts are finite, positive, and
    // infinitesimal_cut < appreciable_low <= appreciable_high <= limited_cut.
    void validate() const;
};

// Scale-derived default: infinitesimal_cut tracks n_q^(-1/4) but is clamped
// below appreciable_low/2 so the band ordering holds for every legal n_q.
// The appreciable band [1e-2, 1e2] and limited_cut 1e6 are engineering
// defaults chosen for unit-scale problems, not derived quantities.
TolerancePolicy default_policy(const QuantumScale& scale);

// Classification of |value| under the policy. NaN -> invalid-value.
Classification classify(double value, const TolerancePolicy& policy);

} // namespace qwalk
