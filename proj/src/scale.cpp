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

#include "qwalk/scale.hpp"

#include <cmath>
#include <string>

#include "qwalk/error.hpp"

namespace qwalk {

QuantumScale make_scale(std::int64_t n_q) {
    if (n_q < kMinSteps || n_q > kMaxSteps) {
        throw Error(errkind::invalid_scale,
                    "n_q must be in [" + std::to_string(kMinSteps) + ", " +
                        std::to_string(kMaxSteps) + "], got " + std::to_string(n_q));
    }
    return QuantumScale{n_q, 1.0 / static_cast<double>(n_q)};
}

double grid_time(const QuantumScale& scale, std::int64_t k) {
    if (k < 0 || k > scale.n_q) {
        throw Error(errkind::invalid_value,
                    "grid index " + std::to_string(k) + " outside [0, " +
                        std::to_string(scale.n_q) + "]");
    }
    return static_cast<double>(k) / static_cast<double>(scale.n_q);
}

const char* to_string(Classification c) noexcept {
    switch (c) {
    case Classification::infinitesimal: return "infinitesimal";
    case Classification::small_gap: return "small-gap";
    case Classification::appreciable: return "appreciable";
    case Classification::large_gap: return "large-gap";
    case Classification::unlimited: return "unlimited";
    }
    return "unknown";
}

void TolerancePolicy::validate() const {
    const double cuts[4] = {infinitesimal_cut, appreciable_low, appreciable_high, limited_cut};
    for (double c : cuts) {
        if (!std::isfinite(c) || c <= 0.0) {
            throw Error(errkind::invalid_value, "tolerance policy cuts must be finite and positive");
        }
    }
    if (!(infinitesimal_cut < appreciable_low && appreciable_low <= appreciable_high &&
          appreciable_high <= limited_cut)) {
        throw Error(errkind::invalid_value,
                    "tolerance policy requires infinitesimal_cut < appreciable_low <= "
                    "appreciable_high <= limited_cut");
    }
}

TolerancePolicy default_policy(const QuantumScale& scale) {
    TolerancePolicy p;
    p.appreciable_low = 1e-2;
    p.appreciable_high = 1e2;
    p.limited_cut = 1e6;
    const double scale_cut = std::pow(static_cast<double>(scale.n_q), -0.25);
    p.infinitesimal_cut = std::min(scale_cut, p.appreciable_low / 2.0);
    p.validate();
    return p;
}

Classification classify(double value, const TolerancePolicy& policy) {
    if (std::isnan(value)) {
        throw Error(errkind::invalid_value, "cannot classify NaN");
    }
    policy.validate();
    const double v = std::fabs(value);
    if (v < policy.infinitesimal_cut) return Classification::infinitesimal;
    if (v < policy.appreciable_low) return Classification::small_gap;
    if (v <= policy.appreciable_high) return Classification::appreciable;
    if (v <= policy.limited_cut) return Classification::large_gap;
    return Classification::unlimited;
}

} // namespace qwalk
