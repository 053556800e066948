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
#include <optional>
#include <string>
#include <vector>

#include "qwalk/regularity.hpp"
#include "qwalk/scale.hpp"
#include "qwalk/walk.hpp"
#include "qwalk/walk_spec.hpp"

namespace qwalk {

// Finite surrogate for the structural conditions a walk family must meet
// to behave as a diffusion on the unit time window:
//   bounded:        sup |b|, sup |s| on the probe domain stay below the
//                   policy's limited_cut (and evaluation never fails);
//   smooth:         first and second divided differences stay below the
//                   limited_cut (shadowing a C^2 coefficient pair);
//   elliptic:       min s on the domain is at least appreciable_low;
//   moderate start: |x0| (or a high quantile of it) stays below limited_cut.
struct DiffusionChecklist {
    bool bounded_ok = false;
    double sup_drift = 0.0;
    double sup_vol = 0.0;
    bool smooth_ok = false;
    double max_diff1 = 0.0;
    double max_diff2 = 0.0;
    bool elliptic_ok = false;
    double min_vol = 0.0;
    bool x0_ok = false;
    double x0_magnitude = 0.0;
    bool overall = false;
    std::optional<std::string> eval_failure; // location when bounded fails by error
    std::vector<std::string> notes;
};

struct DomainConfig {
    Range t_range{0.0, 1.0};
    Range x_range{-3.0, 3.0};
    std::int64_t grid_n = 64;
};

DiffusionChecklist diffusion_checklist(const WalkSpec& spec, const DomainConfig& domain,
                                       const TolerancePolicy& policy);

// Closed-form Gaussian reference laws. theta = 0 is driftless diffusion;
// theta > 0 adds linear mean reversion (drift -theta * x).
struct ReferenceLaw {
    double theta = 0.0;
    double sigma0 = 1.0;

    // Terminal law at t = 1 started from point x0 (weak limit).
    double terminal_mean(double x0) const;
    double terminal_var() const;
    double terminal_cdf(double x0, double x) const;
};

// Parses "brownian:SIGMA" or "ou:THETA,SIGMA".
ReferenceLaw parse_reference_law(const std::string& text);

// Exact moments of the discrete walk with these coefficients at t = 1:
//   m_{k+1} = a m_k,   a = 1 - theta dt
//   v_{k+1} = a^2 v_k + sigma0^2 dt
//   q_{k+1} = a^4 q_k + 6 a^2 v_k sigma0^2 dt + sigma0^4 dt^2
// (q is the central fourth moment; the sign distribution enters only via
// its first four moments, all of which are 0 / 1, so this is exact).
struct DiscreteMoments {
    double mean = 0.0;
    double var = 0.0;
    double m4 = 0.0;
};
DiscreteMoments reference_discrete_moments(const ReferenceLaw& law, double x0_mean, double x0_var,
                                           QuantumScale scale);

// Kolmogorov-Smirnov distances of a sample against the reference terminal
// CDF: the raw statistic (jump corners included) and a midpoint-corrected
// variant that removes the lattice-atom floor of order 1/sqrt(n_q).
struct KsPair {
    double raw = 0.0;
    double corrected = 0.0;
};
KsPair ks_distance(std::vector<double> sample, const ReferenceLaw& law, double x0);

struct WeakConvergenceRung {
    std::int64_t n_q = 0;
    KsPair ks;
    double mean_err = 0.0; // |empirical - exact discrete|
    double var_err = 0.0;
    double m4_err = 0.0;
    double mean_se = 0.0;
    double var_se = 0.0;
    double m4_se = 0.0;
    bool moments_ok = false;
};

struct WeakConvergenceReport {
    std::vector<WeakConvergenceRung> rungs;
    double ks_tol = 0.0;
    double z = 0.0;
    bool ks_decreasing = false;   // raw KS strictly decreases along the ladder
    bool final_ks_ok = false;     // last corrected KS <= ks_tol
    bool moments_ok = false;      // every rung within z std errors
    bool pass = false;
};

struct WeakConvergenceConfig {
    std::vector<std::int64_t> nq_ladder;
    std::int64_t paths = 100000;
    std::uint64_t seed = 0;
    double ks_tol = 0.0075;
    double z = 3.0;
    int threads = 0;
    std::int64_t memory_budget_mb = 512;
};

// Simulates the spec at each ladder scale and compares the terminal sample
// against the reference law. The spec's coefficients must match the law's
// (checked numerically on a grid); the initial condition must be a point.
WeakConvergenceReport weak_convergence_test(const WalkSpec& spec, const ReferenceLaw& law,
                                            const WeakConvergenceConfig& config);

// Coarse-grained path length at resolution lambda: L(lambda) =
// lambda * E[# crossings of the lambda level grid], and the dimension
// estimate D = 1 - slope of log L against log lambda.
struct DimensionRung {
    double lambda = 0.0;
    double mean_crossings = 0.0;
    double coarse_length = 0.0;
    bool usable = false; // mean crossings >= 2
};

struct DimensionReport {
    std::vector<DimensionRung> rungs;
    int usable_rungs = 0;
    double slope = 0.0;
    double slope_stderr = 0.0;
    double dimension = 0.0;
    std::vector<std::string> notes;
};

DimensionReport fractal_dimension(const Ensemble& ensemble,
                                  const std::vector<double>& lambda_ladder);

// Parses "lo:hi:count" into a geometric ladder, count >= 2.
std::vector<double> parse_lambda_ladder(const std::string& text);

} // namespace qwalk
