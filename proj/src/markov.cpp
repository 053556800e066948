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

#include "qwalk/markov.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "qwalk/error.hpp"
#include "qwalk/parallel.hpp"
#include "qwalk/stats.hpp"

namespace qwalk {

namespace {

constexpr std::int64_t kMinPaths = 10000;

// Pearson chi-square for a 2x2 table; 0 when any margin is empty (the
// table carries no evidence either way).
double pearson_chi2(std::int64_t a, std::int64_t b, std::int64_t c, std::int64_t d) {
    const double n = static_cast<double>(a + b + c + d);
    const double r0 = static_cast<double>(a + b);
    const double r1 = static_cast<double>(c + d);
    const double c0 = static_cast<double>(a + c);
    const double c1 = static_cast<double>(b + d);
    if (r0 == 0.0 || r1 == 0.0 || c0 == 0.0 || c1 == 0.0) return 0.0;
    const double det = static_cast<double>(a) * static_cast<double>(d) -
                       static_cast<double>(b) * static_cast<double>(c);
    return n * det * det / (r0 * r1 * c0 * c1);
}

// Realized increments carry an O(ulp(x)) residue from the post-rounding
// contract, a deterministic function of the state. Inside a state bin the
// past functional correlates with the state, so ranking that residue would
// reject the exact walk itself. Values whose consecutive sorted gap is at
// rounding scale are therefore merged into one tie group; any real
// magnitude effect sits many orders above this.
constexpr double kTieRelTol = 1e-9;

// Mann-Whitney z with average ranks and tie-corrected variance; z = 0 when
// the variance degenerates (e.g. every value tied).
double mann_whitney_z(std::vector<double>& v0, std::vector<double>& v1) {
    const std::int64_t n0 = static_cast<std::int64_t>(v0.size());
    const std::int64_t n1 = static_cast<std::int64_t>(v1.size());
    const std::int64_t n = n0 + n1;
    struct Item {
        double value;
        int group;
    };
    std::vector<Item> items;
    items.reserve(static_cast<std::size_t>(n));
    for (double v : v0) items.push_back({v, 0});
    for (double v : v1) items.push_back({v, 1});
    std::sort(items.begin(), items.end(),
              [](const Item& a, const Item& b) { return a.value < b.value; });

    double rank_sum1 = 0.0;
    double tie_term = 0.0;
    std::size_t i = 0;
    while (i < items.size()) {
        std::size_t j = i;
        while (j + 1 < items.size() &&
               items[j + 1].value - items[j].value <=
                   kTieRelTol * std::max(std::fabs(items[j].value),
                                         std::fabs(items[j + 1].value))) {
            ++j;
        }
        ++j;
        const double t = static_cast<double>(j - i);
        // Average rank of the tied run [i, j): ranks are 1-based.
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (items[k].group == 1) rank_sum1 += avg_rank;
        }
        tie_term += t * t * t - t;
        i = j;
    }
    const double nd = static_cast<double>(n);
    const double u1 = rank_sum1 - static_cast<double>(n1) * (static_cast<double>(n1) + 1.0) / 2.0;
    const double mean_u = static_cast<double>(n0) * static_cast<double>(n1) / 2.0;
    const double var_u = static_cast<double>(n0) * static_cast<double>(n1) / 12.0 *
                         ((nd + 1.0) - tie_term / (nd * (nd - 1.0)));
    if (!(var_u > 0.0)) return 0.0;
    return (u1 - mean_u) / std::sqrt(var_u);
}

} // namespace

PastFunctional parse_past_functional(const std::string& text) {
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? std::string() : text.substr(colon + 1);
    PastFunctional out;
    if (name == "lagged-sign") {
        out.kind = PastKind::lagged_sign;
        out.lag = 1;
        if (!arg.empty()) {
            try {
                out.lag = std::stoll(arg);
            } catch (...) {
                throw Error(errkind::config_error, "bad lag in past functional '" + text + "'");
            }
        }
        if (out.lag < 1) throw Error(errkind::config_error, "past functional lag must be >= 1");
        return out;
    }
    if (name == "running-max") {
        out.kind = PastKind::running_max_indicator;
        if (arg.empty()) {
            throw Error(errkind::config_error, "running-max needs a threshold, e.g. running-max:0.5");
        }
        try {
            out.threshold = std::stod(arg);
        } catch (...) {
            throw Error(errkind::config_error, "bad threshold in past functional '" + text + "'");
        }
        if (!std::isfinite(out.threshold)) {
            throw Error(errkind::config_error, "past functional threshold must be finite");
        }
        return out;
    }
    throw Error(errkind::config_error,
                "unknown past functional '" + text + "' (expected lagged-sign[:K] or running-max:T)");
}

MarkovReport markov_test_samples(std::vector<MarkovSample> samples, PastFunctional past,
                                 double t_probe, std::int64_t probe_index, int state_bins,
                                 double alpha, std::int64_t min_stratum) {
    if (state_bins < 1 || state_bins > 4096) {
        throw Error(errkind::config_error, "state_bins must be in [1, 4096]");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(errkind::config_error, "alpha must be in (0, 1)");
    }
    if (min_stratum < 2) {
        throw Error(errkind::config_error, "min_stratum must be >= 2");
    }

    MarkovReport report;
    report.past = past;
    report.t_probe = t_probe;
    report.probe_index = probe_index;
    report.alpha = alpha;
    report.paths = static_cast<std::int64_t>(samples.size());

    // Equal-width state bins over the central quantile range of the probe
    // states; samples outside the range are not tested.
    std::vector<double> xs;
    xs.reserve(samples.size());
    for (const MarkovSample& s : samples) xs.push_back(s.x_probe);
    std::sort(xs.begin(), xs.end());
    double lo = percentile_sorted(xs, 0.01);
    double hi = percentile_sorted(xs, 0.99);
    if (!(hi > lo)) {
        const double pad = std::max(1e-12, std::max(std::fabs(lo), 1.0) * 1e-12);
        lo -= pad;
        hi += pad;
    }
    const double width = (hi - lo) / static_cast<double>(state_bins);

    std::vector<std::vector<const MarkovSample*>> bin_members(
        static_cast<std::size_t>(state_bins));
    for (const MarkovSample& s : samples) {
        if (!(s.x_probe >= lo && s.x_probe <= hi)) continue;
        const int sb =
            std::min(state_bins - 1, static_cast<int>((s.x_probe - lo) / width));
        bin_members[static_cast<std::size_t>(sb)].push_back(&s);
    }

    report.bins.resize(static_cast<std::size_t>(state_bins));
    for (int sb = 0; sb < state_bins; ++sb) {
        MarkovBinResult& bin = report.bins[static_cast<std::size_t>(sb)];
        bin.x_lo = lo + width * static_cast<double>(sb);
        bin.x_hi = (sb == state_bins - 1) ? hi : lo + width * static_cast<double>(sb + 1);
        for (const MarkovSample* s : bin_members[static_cast<std::size_t>(sb)]) {
            ++bin.n_stratum[s->past ? 1 : 0];
        }
        bin.tested = bin.n_stratum[0] >= min_stratum && bin.n_stratum[1] >= min_stratum;
        if (bin.tested) ++report.tested_bins;
    }

    if (report.tested_bins == 0) {
        report.unreliable = true;
        return report;
    }
    report.alpha_adjusted = alpha / (2.0 * static_cast<double>(report.tested_bins));
    const double chi2_crit = chi_squared_quantile(1.0 - report.alpha_adjusted, 1);
    const double z_crit = normal_quantile(1.0 - report.alpha_adjusted / 2.0);

    for (int sb = 0; sb < state_bins; ++sb) {
        MarkovBinResult& bin = report.bins[static_cast<std::size_t>(sb)];
        if (!bin.tested) continue;
        std::int64_t plus[2] = {0, 0};
        std::int64_t minus[2] = {0, 0};
        std::vector<double> mag[2];
        for (const MarkovSample* s : bin_members[static_cast<std::size_t>(sb)]) {
            const int g = s->past ? 1 : 0;
            if (s->dx_next >= 0.0) {
                ++plus[g];
            } else {
                ++minus[g];
            }
            mag[g].push_back(std::fabs(s->dx_next));
        }
        bin.chi2_sign = pearson_chi2(plus[0], minus[0], plus[1], minus[1]);
        bin.reject_sign = bin.chi2_sign > chi2_crit;
        bin.mw_z = mann_whitney_z(mag[0], mag[1]);
        bin.reject_magnitude = std::fabs(bin.mw_z) > z_crit;
        report.rejections += (bin.reject_sign ? 1 : 0) + (bin.reject_magnitude ? 1 : 0);
    }
    report.pass = report.rejections == 0;
    return report;
}

MarkovReport markov_test(const Ensemble& ensemble, PastFunctional past, double t_probe,
                         int state_bins, double alpha) {
    if (!(t_probe > 0.0 && t_probe < 1.0)) {
        throw Error(errkind::config_error, "t_probe must be inside (0, 1)");
    }
    const std::int64_t n_q = ensemble.scale().n_q;
    const auto kp = static_cast<std::int64_t>(std::llround(t_probe * static_cast<double>(n_q)));
    if (kp < 1 || kp >= n_q) {
        throw Error(errkind::config_error, "probe index must leave room for a next increment");
    }
    if (past.kind == PastKind::lagged_sign && past.lag > kp) {
        throw Error(errkind::config_error, "lagged-sign lag reaches before time 0 at the probe");
    }

    if (ensemble.paths() < kMinPaths) {
        MarkovReport report;
        report.past = past;
        report.t_probe = t_probe;
        report.probe_index = kp;
        report.alpha = alpha;
        report.paths = ensemble.paths();
        report.unreliable = true;
        return report;
    }

    std::vector<MarkovSample> samples(static_cast<std::size_t>(ensemble.paths()));
    MarkovSample* const out = samples.data();
    const std::int64_t lag_index = past.kind == PastKind::lagged_sign ? kp - past.lag : 0;

    auto make_block = [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t pid = lo; pid < hi; ++pid) {
            double x_lag = 0.0;
            double running_max = 0.0;
            bool have_max = false;
            MarkovSample s;
            ensemble.visit_path(pid, [&](const StepPoint& p) {
                if (!have_max) {
                    running_max = p.x; // x at k = 0, i.e. x0
                    have_max = true;
                } else if (p.x > running_max) {
                    running_max = p.x;
                }
                if (p.k == lag_index) x_lag = p.x;
                if (p.k == kp) {
                    s.x_probe = p.x;
                    s.dx_next = p.dx;
                    s.past = past.kind == PastKind::lagged_sign
                                 ? (x_lag - p.x) >= 0.0
                                 : running_max > past.threshold;
                }
            });
            out[pid] = s;
        }
        return 0;
    };
    auto merge = [](int&, int&&) {};
    ordered_block_reduce<int>(ensemble.paths(), ensemble.threads(), 0, make_block, merge);

    return markov_test_samples(std::move(samples), past, t_probe, kp, state_bins, alpha, 50);
}

} // namespace qwalk
