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
#include <string>
#include <vector>

#include "qwalk/walk.hpp"

namespace qwalk {

// Past functionals used to stratify paths at the probe time. If the next
// increment depends on the past only through the present state, then within
// a narrow state bin the two strata must draw the increment from the same
// law; any detectable difference refutes that. The conditioning is by bin,
// not by exact state, so a volatility with a steep state dependence can
// leak a residual magnitude difference into the strata at coarse bin
// counts; raise state_bins when testing such specs.
enum class PastKind {
    lagged_sign,           // sign of x(t - lag * dt) - x(t); >= 0 is stratum 1
    running_max_indicator, // running max over [0, t] exceeds a threshold
};

struct PastFunctional {
    PastKind kind = PastKind::lagged_sign;
    std::int64_t lag = 1;    // lagged_sign
    double threshold = 0.0;  // running_max_indicator
};

// Parses "lagged-sign:K" / "running-max:T" (CLI syntax).
PastFunctional parse_past_functional(const std::string& text);

// One observation per path, extracted at the probe index.
struct MarkovSample {
    double x_probe = 0.0;
    bool past = false;  // stratum flag
    double dx_next = 0.0;
};

struct MarkovBinResult {
    double x_lo = 0.0;
    double x_hi = 0.0;
    std::int64_t n_stratum[2] = {0, 0};
    bool tested = false;
    double chi2_sign = 0.0;  // 2x2 Pearson statistic on the sign of dx_next
    double mw_z = 0.0;       // Mann-Whitney z on |dx_next|, tie corrected
    bool reject_sign = false;
    bool reject_magnitude = false;
};

struct MarkovReport {
    PastFunctional past;
    double t_probe = 0.0;
    std::int64_t probe_index = 0;
    double alpha = 0.0;
    double alpha_adjusted = 0.0; // alpha / (2 * tested_bins), Bonferroni
    std::int64_t paths = 0;
    std::vector<MarkovBinResult> bins;
    int tested_bins = 0;
    std::int64_t rejections = 0;
    bool unreliable = false; // no bin had both strata populated
    bool pass = false;       // tested and nothing rejected
};

// Stratified two-sample tests on per-path samples. Verdicts depend on the
// samples only through per-bin counts and ranks, so they are invariant
// under any relabeling of paths.
MarkovReport markov_test_samples(std::vector<MarkovSample> samples, PastFunctional past,
                                 double t_probe, std::int64_t probe_index, int state_bins,
                                 double alpha, std::int64_t min_stratum);

// Extracts one sample per path at probe index round(t_probe * n_q) and runs
// the stratified tests. Preconditions: 0 < t_probe < 1, the probe index
// leaves room for the functional's lag and one further step, and the
// ensemble has at least 10000 paths (fewer -> unreliable verdict).
MarkovReport markov_test(const Ensemble& ensemble, PastFunctional past, double t_probe,
                         int state_bins, double alpha);

} // namespace qwalk
