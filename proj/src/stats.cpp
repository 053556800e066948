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

#include "qwalk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "qwalk/error.hpp"

namespace qwalk {

void MomentAccumulator::add(double x) noexcept {
    if (n == 0) {
        min_value = x;
        max_value = x;
    } else {
        min_value = std::min(min_value, x);
        max_value = std::max(max_value, x);
    }
    ++n;
    const double x2 = x * x;
    s1.add(x);
    s2.add(x2);
    s3.add(x2 * x);
    s4.add(x2 * x2);
}

void MomentAccumulator::merge(const MomentAccumulator& other) noexcept {
    if (other.n == 0) return;
    if (n == 0) {
        min_value = other.min_value;
        max_value = other.max_value;
    } else {
        min_value = std::min(min_value, other.min_value);
        max_value = std::max(max_value, other.max_value);
    }
    n += other.n;
    s1.merge(other.s1);
    s2.merge(other.s2);
    s3.merge(other.s3);
    s4.merge(other.s4);
}

double MomentAccumulator::mean() const {
    if (n == 0) throw Error(errkind::invalid_value, "moments of an empty sample");
    return s1.value() / static_cast<double>(n);
}

double MomentAccumulator::variance() const {
    const double m = mean();
    const double raw2 = s2.value() / static_cast<double>(n);
    return std::max(0.0, raw2 - m * m);
}

double MomentAccumulator::central_moment4() const {
    const double m = mean();
    const double inv_n = 1.0 / static_cast<double>(n);
    const double r1 = m;
    const double r2 = s2.value() * inv_n;
    const double r3 = s3.value() * inv_n;
    const double r4 = s4.value() * inv_n;
    // E[(x - m)^4] expanded in raw moments.
    const double m4 = r4 - 4.0 * r3 * r1 + 6.0 * r2 * r1 * r1 - 3.0 * r1 * r1 * r1 * r1;
    return std::max(0.0, m4);
}

double normal_cdf(double x) {
    static const boost::math::normal_distribution<double> dist(0.0, 1.0);
    return boost::math::cdf(dist, x);
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw Error(errkind::invalid_value, "normal quantile needs p in (0, 1)");
    }
    static const boost::math::normal_distribution<double> dist(0.0, 1.0);
    return boost::math::quantile(dist, p);
}

double chi_squared_quantile(double p, int df) {
    if (!(p > 0.0 && p < 1.0) || df < 1) {
        throw Error(errkind::invalid_value, "chi-squared quantile needs p in (0, 1) and df >= 1");
    }
    const boost::math::chi_squared_distribution<double> dist(static_cast<double>(df));
    return boost::math::quantile(dist, p);
}

double percentile_sorted(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw Error(errkind::invalid_value, "percentile of an empty sample");
    if (!(q >= 0.0 && q <= 1.0)) throw Error(errkind::invalid_value, "percentile q outside [0, 1]");
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw Error(errkind::invalid_value, "line fit needs two same-length samples, n >= 2");
    }
    const auto n = static_cast<double>(x.size());
    NeumaierSum sx, sy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx.add(x[i]);
        sy.add(y[i]);
    }
    const double mx = sx.value() / n;
    const double my = sy.value() / n;
    NeumaierSum sxx, sxy;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx.add((x[i] - mx) * (x[i] - mx));
        sxy.add((x[i] - mx) * (y[i] - my));
    }
    const double den = sxx.value();
    if (den <= 0.0) throw Error(errkind::invalid_value, "line fit with degenerate abscissae");
    LineFit fit;
    fit.slope = sxy.value() / den;
    fit.intercept = my - fit.slope * mx;
    if (x.size() > 2) {
        NeumaierSum srr;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double r = y[i] - (fit.intercept + fit.slope * x[i]);
            srr.add(r * r);
        }
        fit.slope_stderr = std::sqrt(srr.value() / (n - 2.0) / den);
    }
    return fit;
}

SampleMoments sample_moments(std::span<const double> values) {
    if (values.empty()) throw Error(errkind::invalid_value, "moments of an empty sample");
    SampleMoments out;
    out.n = static_cast<std::int64_t>(values.size());
    NeumaierSum s;
    for (double v : values) s.add(v);
    out.mean = s.value() / static_cast<double>(out.n);
    NeumaierSum c2, c4, c8;
    for (double v : values) {
        const double d = v - out.mean;
        const double d2 = d * d;
        const double d4 = d2 * d2;
        c2.add(d2);
        c4.add(d4);
        c8.add(d4 * d4);
    }
    const double inv_n = 1.0 / static_cast<double>(out.n);
    out.var = c2.value() * inv_n;
    out.m4 = c4.value() * inv_n;
    out.m8 = c8.value() * inv_n;
    return out;
}

} // namespace qwalk
