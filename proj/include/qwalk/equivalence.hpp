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

#include "qwalk/scale.hpp"
#include "qwalk/walk_spec.hpp"

namespace qwalk {

// Coupled-path closeness: both specs are driven by the same sign stream and
// the same initial draws, and the sup distance between the paired paths is
// compared against a Gronwall-style bound built from the coefficient gaps
// and Lipschitz estimates:
//   bound = (eta_x0 + eta_b + eta_sigma) * exp(L_b + L_sigma^2 / 2 + 1)
// where the etas are sup gaps over the visited states and the L's are grid
// Lipschitz estimates over the visited bounding box. The pass criterion is
// on the ensemble mean of the per-path sup distance; per-path and terminal
// statistics are reported alongside.
struct EquivalenceReport {
    std::int64_t paths = 0;
    double eta_x0 = 0.0;
    double eta_b = 0.0;
    double eta_sigma = 0.0;
    double lip_b = 0.0;
    double lip_sigma = 0.0;
    double mean_sup_diff = 0.0;
    double max_sup_diff = 0.0;
    double rms_terminal_diff = 0.0;
    double bound = 0.0;
    double x_visited_lo = 0.0;
    double x_visited_hi = 0.0;
    bool pass = false;
};

EquivalenceReport coupled_distance(const WalkSpec& spec_a, QuantumScale scale_a,
                                   const WalkSpec& spec_b, QuantumScale scale_b,
                                   std::uint64_t seed, std::int64_t paths, int threads);

} // namespace qwalk
