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

#include <cmath>
#include <cstdint>
#include <span>

namespace qwalk {

// Neumaier compensated summation. Deterministic for a fixed add/merge order;
// merge() must be applied in a fixed block order to stay run-to-run stable.
struct NeumaierSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double v) noexcept {
        const double t = sum + v;
        if (std::abs(sum) >= std::abs(v)) {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }

    void merge(const NeumaierSum& other) noexcept {
        add(other.sum);
        comp += other.comp;
    }

    double value() const noexcept { return sum + comp; }
};

// Streaming raw power sums up to x^4 plus extrema. Central moments are
// formed once at the end; merge order must be fixed for determinism.
struct MomentAccumulator {
    std::int64_t n = 0;
    NeumaierSum s1, s2, s3, s4;
    double min_value = 0.0;
    double max_value = 0.0;

    void add(double x) noexcept;
    void merge(const MomentAccumulator& other) noexcept;

    double mean() const;
    double variance() const;        // population variance
    double central_moment4() const; // population central fourth moment
};

// Standard normal CDF and quantile, and the chi-squared quantile used by
// the contingency tests.
double normal_cdf(double x);
double normal_quantile(double p);
double chi_squared_quantile(double p, int df);

// Linear-interpolation percentile (values must be sorted ascending,
// 0 <= q <= 1). Matches the common "type 7" definition.
double percentile_sorted(std::span<const double> sorted, double q);

// Ordinary least squares y = a + b x. Returns slope, intercept, and the
// standard error of the slope (residual-based, n - 2 dof).
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

// One-pass central moments of a sample (mean, then centered sums computed
// in index order with compensated accumulation).
struct SampleMoments {
    std::int64_t n = 0;
    double mean = 0.0;
    double var = 0.0;      // population
    double m4 = 0.0;       // central
    double m8 = 0.0;       // central, used for m4 standard errors
};
SampleMoments sample_moments(std::span<const double> values);

} // namespace qwalk
