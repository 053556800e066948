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

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "qwalk/scale.hpp"
#include "qwalk/walk.hpp"

namespace qwalk {

struct ClassificationCounts {
    std::array<std::int64_t, kClassificationCount> counts{};

    void add(Classification c) noexcept { ++counts[static_cast<int>(c)]; }
    void merge(const ClassificationCounts& other) noexcept {
        for (int i = 0; i < kClassificationCount; ++i) counts[i] += other.counts[i];
    }
    std::int64_t at(Classification c) const noexcept { return counts[static_cast<int>(c)]; }
    std::int64_t total() const noexcept {
        std::int64_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }
};

// Per-step scale check: the squared realized increment per unit time,
// (dx_k)^2 / delta_t, classified under the policy. The walk construction
// makes this s(t,x)^2 up to drift and rounding terms, so it must never be
// negligible for a diffusive spec: pass requires no step in the
// infinitesimal or small-gap bands.
struct HeisenbergReport {
    ClassificationCounts counts;
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    double median_ratio = 0.0;
    bool pass = false;
};

HeisenbergReport heisenberg_check(const Path& path, const TolerancePolicy& policy);

// Ensemble aggregate of the same check (median omitted; storing every step
// of every path is not worth it).
struct EnsembleHeisenbergReport {
    std::int64_t paths = 0;
    std::int64_t failing_paths = 0;
    ClassificationCounts counts;
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    bool pass = false;
};

EnsembleHeisenbergReport heisenberg_check(const Ensemble& ensemble, const TolerancePolicy& policy);

// Dimensional variant: (dx)^2 / delta_t expressed in units of a reference
// action-per-mass ratio. The bound is one-sided; pass requires no step's
// ratio to classify infinitesimal.
struct PhysicalScaleReport {
    ClassificationCounts counts;
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    double reference = 0.0;
    bool pass = false;
};

PhysicalScaleReport physical_scale_check(const Path& path, double hbar_over_m,
                                         const TolerancePolicy& policy);

// Sign-stream statistics: exact-frequency z test plus lag autocorrelations,
// all at two-sided level alpha.
struct EquiprobabilityReport {
    std::int64_t n = 0;
    double freq_plus = 0.0;
    double freq_z = 0.0;
    std::vector<double> lag_autocorr; // lags 1..max_lag
    double z_crit = 0.0;
    double alpha = 0.0;
    bool freq_pass = false;
    bool lags_pass = false;
    bool pass = false;
};

EquiprobabilityReport equiprobability_test(std::span<const signed char> signs, double alpha,
                                           int max_lag);

// Conditional first and second moment estimates of the increments on a
// (time bin) x (state bin) grid.
struct BinningConfig {
    int state_bins = 32;
    std::int64_t time_pool = 1;        // grid steps pooled per time bin
    std::int64_t min_cell_count = 50;
    double lo_quantile = 0.01;
    double hi_quantile = 0.99;
    std::int64_t edge_sample_paths = 2048;
};

struct DecompCell {
    std::int64_t count = 0;
    double drift_hat = 0.0;
    double drift_se = 0.0;
    double vol_hat = 0.0;
    double vol_se = 0.0;
    bool reliable = false;
};

struct DecompositionReport {
    BinningConfig binning;
    std::int64_t n_q = 0;
    std::int64_t time_bins = 0;
    int state_bins = 0;
    std::vector<double> edges;      // time_bins * (state_bins + 1)
    std::vector<DecompCell> cells;  // time_bins * state_bins
    std::int64_t total_steps = 0;
    std::int64_t out_of_range_steps = 0;
    std::int64_t reliable_cells = 0;
    std::int64_t occupied_cells = 0;

    const DecompCell& cell(std::int64_t time_bin, int state_bin) const {
        return cells[static_cast<std::size_t>(time_bin * state_bins + state_bin)];
    }
    double edge(std::int64_t time_bin, int idx) const {
        return edges[static_cast<std::size_t>(time_bin * (state_bins + 1) + idx)];
    }
    // State bin for x in this time bin, or -1 when x is outside the edges.
    int locate(std::int64_t time_bin, double x) const;
    std::int64_t time_bin_of_step(std::int64_t k) const { return k / binning.time_pool; }
};

DecompositionReport estimate_decomposition(const Ensemble& ensemble, const BinningConfig& config);

// Standardized residuals eta = (dx - drift_hat * dt) / (vol_hat * sqrt(dt)),
// pooled over all steps that land in reliable cells of `report`. For the
// moment checks to be informative the report must come from an independent
// run (same spec, different seed): with same-sample estimates the pooled
// mean and second moment are 0 and 1 by construction. The per-cell mean
// test widens its null variance by n_cell * dt * (drift_se / vol_hat)^2,
// the exact variance the report's own drift error injects into a cell
// mean; without it the test would reject correct specs whenever the
// standardizing run is not much larger than the tested one.
struct ResidualMomentsReport {
    std::int64_t steps_used = 0;
    std::int64_t steps_excluded = 0;
    double mean = 0.0;
    double second_moment = 0.0;
    double mean_se = 0.0;          // 1/sqrt(n) under the unit-variance null
    double second_moment_se = 0.0; // empirical
    std::int64_t cells_tested = 0;
    std::int64_t cells_failing = 0;
    double cell_fail_fraction = 0.0;
    double cell_fail_allowance = 0.0;
    double max_path_m2_dev = 0.0; // true-coefficient variant only
    double alpha = 0.0;
    bool pass = false;
};

ResidualMomentsReport residual_moments(const Ensemble& ensemble, const DecompositionReport& report,
                                       double alpha);

// Residuals against the spec's own coefficients: eta equals the step sign
// exactly up to path rounding, so the per-path second moment must sit at 1
// to within m2_tol on every path with nonzero volatility throughout.
ResidualMomentsReport residual_moments_true(const Ensemble& ensemble, double alpha,
                                            double m2_tol = 1e-10);

// Run-level multiple-testing allowance for a family of n_checks level-alpha
// tests: the failing fraction may not exceed
// alpha * (1 + 3 * sqrt(alpha / n_checks)) * 2.
double multiple_testing_allowance(double alpha, std::int64_t n_checks);

// Per-cell comparison of the estimated coefficients against the spec's own
// b and s at the cell centers. The drift estimate is unbiased at a fixed
// state, so its tolerance is z standard errors plus a binning bias bound
// (Lipschitz constant times cell half-width); the volatility estimate
// targets sqrt(s^2 + b^2 dt), the exact one-step second moment.
struct DecompositionCheck {
    std::int64_t cells_checked = 0;
    std::int64_t drift_failures = 0;
    std::int64_t vol_failures = 0;
    double fail_fraction = 0.0;
    double allowance = 0.0;
    double z = 0.0;
    double lip_drift_x = 0.0;
    double lip_drift_t = 0.0;
    double lip_vol_x = 0.0;
    double lip_vol_t = 0.0;
    double alpha = 0.0;
    bool pass = false;
};

DecompositionCheck check_decomposition(const Ensemble& ensemble,
                                       const DecompositionReport& report, double alpha);

} // namespace qwalk
