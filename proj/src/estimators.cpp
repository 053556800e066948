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

#include "qwalk/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "qwalk/error.hpp"
#include "qwalk/parallel.hpp"
#include "qwalk/regularity.hpp"
#include "qwalk/stats.hpp"

namespace qwalk {

namespace {

struct RatioStats {
    ClassificationCounts counts;
    double min_ratio = 0.0;
    double max_ratio = 0.0;
    bool any = false;

    void add(double ratio, Classification c) {
        counts.add(c);
        if (!any) {
            min_ratio = ratio;
            max_ratio = ratio;
            any = true;
        } else {
            min_ratio = std::min(min_ratio, ratio);
            max_ratio = std::max(max_ratio, ratio);
        }
    }
    void merge(const RatioStats& o) {
        counts.merge(o.counts);
        if (!o.any) return;
        if (!any) {
            *this = o;
        } else {
            min_ratio = std::min(min_ratio, o.min_ratio);
            max_ratio = std::max(max_ratio, o.max_ratio);
        }
    }
};

bool heisenberg_pass(const ClassificationCounts& counts) {
    return counts.at(Classification::infinitesimal) == 0 &&
           counts.at(Classification::small_gap) == 0;
}

} // namespace

HeisenbergReport heisenberg_check(const Path& path, const TolerancePolicy& policy) {
    policy.validate();
    if (path.values.size() < 2) {
        throw Error(errkind::invalid_value, "path must have at least one step");
    }
    const double dt = path.scale.delta_t;
    RatioStats stats;
    std::vector<double> ratios;
    ratios.reserve(path.values.size() - 1);
    for (std::size_t k = 0; k + 1 < path.values.size(); ++k) {
        const double d = path.values[k + 1] - path.values[k];
        const double ratio = d * d / dt;
        ratios.push_back(ratio);
        stats.add(ratio, classify(ratio, policy));
    }
    HeisenbergReport out;
    out.counts = stats.counts;
    out.min_ratio = stats.min_ratio;
    out.max_ratio = stats.max_ratio;
    const auto mid = ratios.begin() + static_cast<std::ptrdiff_t>(ratios.size() / 2);
    std::nth_element(ratios.begin(), mid, ratios.end());
    out.median_ratio = *mid;
    out.pass = heisenberg_pass(out.counts);
    return out;
}

EnsembleHeisenbergReport heisenberg_check(const Ensemble& ensemble,
                                          const TolerancePolicy& policy) {
    policy.validate();
    const double dt = ensemble.scale().delta_t;

    struct Partial {
        RatioStats stats;
        std::int64_t failing_paths = 0;
    };
    auto make_block = [&](std::int64_t lo, std::int64_t hi) {
        Partial part;
        for (std::int64_t pid = lo; pid < hi; ++pid) {
            ClassificationCounts path_counts;
            ensemble.visit_path(pid, [&](const StepPoint& p) {
                const double ratio = p.dx * p.dx / dt;
                const Classification c = classify(ratio, policy);
                path_counts.add(c);
                part.stats.add(ratio, c);
            });
            if (!heisenberg_pass(path_counts)) ++part.failing_paths;
        }
        return part;
    };
    auto merge = [](Partial& acc, Partial&& p) {
        acc.stats.merge(p.stats);
        acc.failing_paths += p.failing_paths;
    };
    const Partial total = ordered_block_reduce<Partial>(ensemble.paths(), ensemble.threads(),
                                                        Partial{}, make_block, merge);
    EnsembleHeisenbergReport out;
    out.paths = ensemble.paths();
    out.failing_paths = total.failing_paths;
    out.counts = total.stats.counts;
    out.min_ratio = total.stats.min_ratio;
    out.max_ratio = total.stats.max_ratio;
    out.pass = total.failing_paths == 0;
    return out;
}

PhysicalScaleReport physical_scale_check(const Path& path, double hbar_over_m,
                                         const TolerancePolicy& policy) {
    policy.validate();
    if (!(hbar_over_m > 0.0) || !std::isfinite(hbar_over_m)) {
        throw Error(errkind::config_error, "reference ratio must be positive and finite");
    }
    if (path.values.size() < 2) {
        throw Error(errkind::invalid_value, "path must have at least one step");
    }
    const double dt = path.scale.delta_t;
    RatioStats stats;
    for (std::size_t k = 0; k + 1 < path.values.size(); ++k) {
        const double d = path.values[k + 1] - path.values[k];
        const double ratio = d * d / dt / hbar_over_m;
        stats.add(ratio, classify(ratio, policy));
    }
    PhysicalScaleReport out;
    out.counts = stats.counts;
    out.min_ratio = stats.min_ratio;
    out.max_ratio = stats.max_ratio;
    out.reference = hbar_over_m;
    out.pass = out.counts.at(Classification::infinitesimal) == 0;
    return out;
}

EquiprobabilityReport equiprobability_test(std::span<const signed char> signs, double alpha,
                                           int max_lag) {
    const auto n = static_cast<std::int64_t>(signs.size());
    if (n < 1000) {
        throw Error(errkind::config_error, "equiprobability test needs at least 1000 signs");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(errkind::config_error, "alpha must be in (0, 1)");
    }
    if (max_lag < 1 || max_lag >= n) {
        throw Error(errkind::config_error, "max_lag must be in [1, n)");
    }
    for (signed char s : signs) {
        if (s != 1 && s != -1) {
            throw Error(errkind::invalid_value, "signs must be +1 or -1");
        }
    }

    EquiprobabilityReport out;
    out.n = n;
    out.alpha = alpha;
    out.z_crit = normal_quantile(1.0 - alpha / 2.0);

    std::int64_t plus = 0;
    for (signed char s : signs) plus += (s > 0);
    out.freq_plus = static_cast<double>(plus) / static_cast<double>(n);
    out.freq_z = (2.0 * static_cast<double>(plus) - static_cast<double>(n)) /
                 std::sqrt(static_cast<double>(n));
    out.freq_pass = std::fabs(out.freq_z) <= out.z_crit;

    // Uncentered products: under the null E[s_i s_{i+k}] = 0 with unit
    // variance, so r_k * sqrt(n - k) is an asymptotic z value.
    out.lags_pass = true;
    for (int k = 1; k <= max_lag; ++k) {
        std::int64_t acc = 0;
        for (std::int64_t i = 0; i + k < n; ++i) {
            acc += static_cast<int>(signs[static_cast<std::size_t>(i)]) *
                   static_cast<int>(signs[static_cast<std::size_t>(i + k)]);
        }
        const double r = static_cast<double>(acc) / static_cast<double>(n - k);
        out.lag_autocorr.push_back(r);
        if (std::fabs(r) * std::sqrt(static_cast<double>(n - k)) > out.z_crit) {
            out.lags_pass = false;
        }
    }
    out.pass = out.freq_pass && out.lags_pass;
    return out;
}

int DecompositionReport::locate(std::int64_t time_bin, double x) const {
    const double lo = edge(time_bin, 0);
    const double hi = edge(time_bin, state_bins);
    if (!(x >= lo && x <= hi)) return -1;
    const double w = (hi - lo) / static_cast<double>(state_bins);
    const int idx = static_cast<int>((x - lo) / w);
    return std::min(idx, state_bins - 1);
}

DecompositionReport estimate_decomposition(const Ensemble& ensemble, const BinningConfig& config) {
    if (ensemble.paths() < 100) {
        throw Error(errkind::config_error, "decomposition needs at least 100 paths");
    }
    if (config.state_bins < 1 || config.state_bins > 4096) {
        throw Error(errkind::config_error, "state_bins must be in [1, 4096]");
    }
    if (config.time_pool < 1 || config.time_pool > ensemble.scale().n_q) {
        throw Error(errkind::config_error, "time_pool must be in [1, n_q]");
    }
    if (!(config.lo_quantile >= 0.0 && config.lo_quantile < config.hi_quantile &&
          config.hi_quantile <= 1.0)) {
        throw Error(errkind::config_error, "need 0 <= lo_quantile < hi_quantile <= 1");
    }
    if (config.min_cell_count < 2) {
        throw Error(errkind::config_error, "min_cell_count must be >= 2");
    }
    if (config.edge_sample_paths < 2) {
        throw Error(errkind::config_error, "edge_sample_paths must be >= 2");
    }

    const std::int64_t n_q = ensemble.scale().n_q;
    const double dt = ensemble.scale().delta_t;
    const int B = config.state_bins;
    const std::int64_t time_bins = (n_q + config.time_pool - 1) / config.time_pool;

    DecompositionReport report;
    report.binning = config;
    report.n_q = n_q;
    report.time_bins = time_bins;
    report.state_bins = B;
    report.edges.resize(static_cast<std::size_t>(time_bins * (B + 1)));
    report.cells.resize(static_cast<std::size_t>(time_bins * B));

    // Edge pass: bin-start states of a deterministic path subsample. The
    // sample is capped so the matrix stays within a fixed memory envelope.
    const std::int64_t matrix_cap = std::int64_t(1) << 25; // doubles
    std::int64_t n_sample = std::min(ensemble.paths(), config.edge_sample_paths);
    n_sample = std::min(n_sample, std::max<std::int64_t>(64, matrix_cap / time_bins));
    n_sample = std::min(n_sample, ensemble.paths());
    std::vector<double> samples(static_cast<std::size_t>(time_bins * n_sample));
    for (std::int64_t i = 0; i < n_sample; ++i) {
        ensemble.visit_path(i, [&](const StepPoint& p) {
            if (p.k % config.time_pool == 0) {
                const std::int64_t tb = p.k / config.time_pool;
                samples[static_cast<std::size_t>(tb * n_sample + i)] = p.x;
            }
        });
    }
    std::vector<double> column(static_cast<std::size_t>(n_sample));
    for (std::int64_t tb = 0; tb < time_bins; ++tb) {
        const double* col = samples.data() + tb * n_sample;
        std::copy(col, col + n_sample, column.begin());
        std::sort(column.begin(), column.end());
        double lo = percentile_sorted(column, config.lo_quantile);
        double hi = percentile_sorted(column, config.hi_quantile);
        if (!(hi > lo)) {
            const double pad = std::max(1e-12, std::max(std::fabs(lo), 1.0) * 1e-12);
            lo -= pad;
            hi += pad;
        }
        for (int i = 0; i <= B; ++i) {
            report.edges[static_cast<std::size_t>(tb * (B + 1) + i)] =
                (i == B) ? hi
                         : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(B);
        }
    }

    // Main pass: per-cell counts and increment sums over every path.
    struct CellAcc {
        std::int64_t n = 0;
        double sdx = 0.0;
        double sdx2 = 0.0;
    };
    struct Partial {
        std::vector<CellAcc> cells;
        std::int64_t out_of_range = 0;
    };
    auto make_block = [&](std::int64_t lo_path, std::int64_t hi_path) {
        Partial part;
        part.cells.resize(static_cast<std::size_t>(time_bins * B));
        for (std::int64_t pid = lo_path; pid < hi_path; ++pid) {
            ensemble.visit_path(pid, [&](const StepPoint& p) {
                const std::int64_t tb = p.k / config.time_pool;
                const int sb = report.locate(tb, p.x);
                if (sb < 0) {
                    ++part.out_of_range;
                    return;
                }
                CellAcc& cell = part.cells[static_cast<std::size_t>(tb * B + sb)];
                ++cell.n;
                cell.sdx += p.dx;
                cell.sdx2 += p.dx * p.dx;
            });
        }
        return part;
    };
    auto merge = [](Partial& acc, Partial&& p) {
        if (acc.cells.empty()) {
            acc = std::move(p);
            return;
        }
        acc.out_of_range += p.out_of_range;
        for (std::size_t i = 0; i < acc.cells.size(); ++i) {
            acc.cells[i].n += p.cells[i].n;
            acc.cells[i].sdx += p.cells[i].sdx;
            acc.cells[i].sdx2 += p.cells[i].sdx2;
        }
    };
    Partial total = ordered_block_reduce<Partial>(ensemble.paths(), ensemble.threads(), Partial{},
                                                  make_block, merge);

    report.total_steps = ensemble.paths() * n_q;
    report.out_of_range_steps = total.out_of_range;
    for (std::size_t i = 0; i < report.cells.size(); ++i) {
        const CellAcc& acc = total.cells[i];
        DecompCell& cell = report.cells[i];
        cell.count = acc.n;
        if (acc.n == 0) continue;
        ++report.occupied_cells;
        const double nd = static_cast<double>(acc.n);
        const double mean = acc.sdx / nd;
        const double var = std::max(0.0, acc.sdx2 / nd - mean * mean);
        cell.drift_hat = mean / dt;
        cell.vol_hat = std::sqrt(var / dt);
        cell.drift_se = cell.vol_hat / std::sqrt(nd * dt);
        cell.vol_se = acc.n >= 2 ? cell.vol_hat / std::sqrt(2.0 * nd) : 0.0;
        cell.reliable = acc.n >= config.min_cell_count;
        if (cell.reliable) ++report.reliable_cells;
    }
    return report;
}

namespace {

struct ResidualPartial {
    NeumaierSum s1, s2, s4;
    std::int64_t used = 0;
    std::int64_t excluded = 0;
    std::vector<std::int64_t> cell_n;
    std::vector<double> cell_sum;
    double max_path_m2_dev = 0.0;

    void merge(ResidualPartial&& p) {
        s1.merge(p.s1);
        s2.merge(p.s2);
        s4.merge(p.s4);
        used += p.used;
        excluded += p.excluded;
        if (cell_n.empty()) {
            cell_n = std::move(p.cell_n);
            cell_sum = std::move(p.cell_sum);
        } else {
            for (std::size_t i = 0; i < cell_n.size(); ++i) {
                cell_n[i] += p.cell_n[i];
                cell_sum[i] += p.cell_sum[i];
            }
        }
        max_path_m2_dev = std::max(max_path_m2_dev, p.max_path_m2_dev);
    }
};

ResidualMomentsReport finalize_residuals(const ResidualPartial& total, double alpha,
                                         std::int64_t min_cell_count, double z_for_pass,
                                         double mean_band, double m2_band, double m2_tol,
                                         bool true_variant,
                                         const std::vector<double>& cell_var = {}) {
    ResidualMomentsReport out;
    out.alpha = alpha;
    out.steps_used = total.used;
    out.steps_excluded = total.excluded;
    if (total.used == 0) {
        throw Error(errkind::config_error, "no usable steps for residual moments");
    }
    const double n = static_cast<double>(total.used);
    out.mean = total.s1.value() / n;
    out.second_moment = total.s2.value() / n;
    out.mean_se = 1.0 / std::sqrt(n);
    const double m4 = total.s4.value() / n;
    out.second_moment_se =
        std::sqrt(std::max(0.0, m4 - out.second_moment * out.second_moment) / n);

    const double z_cell = normal_quantile(1.0 - alpha / 2.0);
    for (std::size_t i = 0; i < total.cell_n.size(); ++i) {
        if (total.cell_n[i] < min_cell_count) continue;
        ++out.cells_tested;
        const double nc = static_cast<double>(total.cell_n[i]);
        // Under the null the cell sum of eta has variance n_c times the
        // standardization-noise factor supplied by the caller (1 when the
        // coefficients are exact).
        const double var = cell_var.empty() ? 1.0 : cell_var[i];
        if (std::fabs(total.cell_sum[i]) / std::sqrt(nc * var) > z_cell) ++out.cells_failing;
    }
    if (out.cells_tested > 0) {
        out.cell_fail_fraction =
            static_cast<double>(out.cells_failing) / static_cast<double>(out.cells_tested);
        out.cell_fail_allowance = multiple_testing_allowance(alpha, out.cells_tested);
    }
    out.max_path_m2_dev = total.max_path_m2_dev;

    if (true_variant) {
        out.pass = std::fabs(out.mean) <= z_for_pass * out.mean_se && out.max_path_m2_dev <= m2_tol;
    } else {
        const bool cells_ok =
            out.cells_tested == 0 || out.cell_fail_fraction <= out.cell_fail_allowance;
        out.pass = std::fabs(out.mean) <= mean_band && std::fabs(out.second_moment - 1.0) <= m2_band &&
                   cells_ok;
    }
    return out;
}

} // namespace

ResidualMomentsReport residual_moments(const Ensemble& ensemble, const DecompositionReport& report,
                                       double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(errkind::config_error, "alpha must be in (0, 1)");
    }
    if (report.n_q != ensemble.scale().n_q) {
        throw Error(errkind::config_error, "decomposition report n_q does not match ensemble");
    }
    const double dt = ensemble.scale().delta_t;
    const double sqrt_dt = std::sqrt(dt);
    const int B = report.state_bins;

    auto make_block = [&](std::int64_t lo, std::int64_t hi) {
        ResidualPartial part;
        part.cell_n.resize(report.cells.size());
        part.cell_sum.resize(report.cells.size());
        for (std::int64_t pid = lo; pid < hi; ++pid) {
            ensemble.visit_path(pid, [&](const StepPoint& p) {
                const std::int64_t tb = p.k / report.binning.time_pool;
                const int sb = report.locate(tb, p.x);
                if (sb < 0) {
                    ++part.excluded;
                    return;
                }
                const DecompCell& cell = report.cell(tb, sb);
                if (!cell.reliable || !(cell.vol_hat > 0.0)) {
                    ++part.excluded;
                    return;
                }
                const double eta = (p.dx - cell.drift_hat * dt) / (cell.vol_hat * sqrt_dt);
                const double eta2 = eta * eta;
                part.s1.add(eta);
                part.s2.add(eta2);
                part.s4.add(eta2 * eta2);
                ++part.used;
                const auto idx = static_cast<std::size_t>(tb * B + sb);
                ++part.cell_n[idx];
                part.cell_sum[idx] += eta;
            });
        }
        return part;
    };
    auto merge = [](ResidualPartial& acc, ResidualPartial&& p) { acc.merge(std::move(p)); };
    const ResidualPartial total = ordered_block_reduce<ResidualPartial>(
        ensemble.paths(), ensemble.threads(), ResidualPartial{}, make_block, merge);

    // A cell mean inherits the report's drift error: each eta is shifted by
    // (b - drift_hat) * sqrt(dt) / vol_hat, so the cell sum over n_c steps
    // carries extra variance n_c * dt * (drift_se / vol_hat)^2.
    std::vector<double> cell_var(total.cell_n.size(), 1.0);
    for (std::size_t i = 0; i < cell_var.size(); ++i) {
        const std::int64_t tb = static_cast<std::int64_t>(i) / B;
        const int sb = static_cast<int>(static_cast<std::int64_t>(i) % B);
        const DecompCell& cell = report.cell(tb, sb);
        if (cell.reliable && cell.vol_hat > 0.0) {
            const double rel = cell.drift_se / cell.vol_hat;
            cell_var[i] = 1.0 + static_cast<double>(total.cell_n[i]) * dt * rel * rel;
        }
    }

    return finalize_residuals(total, alpha, report.binning.min_cell_count, 3.0, 0.01, 0.02, 0.0,
                              false, cell_var);
}

ResidualMomentsReport residual_moments_true(const Ensemble& ensemble, double alpha, double m2_tol) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(errkind::config_error, "alpha must be in (0, 1)");
    }
    const double dt = ensemble.scale().delta_t;
    const double sqrt_dt = std::sqrt(dt);

    auto make_block = [&](std::int64_t lo, std::int64_t hi) {
        ResidualPartial part;
        for (std::int64_t pid = lo; pid < hi; ++pid) {
            double path_s2 = 0.0;
            std::int64_t path_n = 0;
            bool path_complete = true;
            ensemble.visit_path(pid, [&](const StepPoint& p) {
                if (p.vol == 0.0) {
                    ++part.excluded;
                    path_complete = false;
                    return;
                }
                const double eta = (p.dx - p.drift * dt) / (p.vol * sqrt_dt);
                const double eta2 = eta * eta;
                part.s1.add(eta);
                part.s2.add(eta2);
                part.s4.add(eta2 * eta2);
                ++part.used;
                path_s2 += eta2;
                ++path_n;
            });
            if (path_complete && path_n > 0) {
                const double dev = std::fabs(path_s2 / static_cast<double>(path_n) - 1.0);
                part.max_path_m2_dev = std::max(part.max_path_m2_dev, dev);
            }
        }
        return part;
    };
    auto merge = [](ResidualPartial& acc, ResidualPartial&& p) { acc.merge(std::move(p)); };
    const ResidualPartial total = ordered_block_reduce<ResidualPartial>(
        ensemble.paths(), ensemble.threads(), ResidualPartial{}, make_block, merge);

    return finalize_residuals(total, alpha, std::int64_t(1) << 62, 3.0, 0.0, 0.0, m2_tol, true);
}

double multiple_testing_allowance(double alpha, std::int64_t n_checks) {
    if (!(alpha > 0.0 && alpha < 1.0) || n_checks < 1) {
        throw Error(errkind::invalid_value, "allowance needs alpha in (0, 1) and n_checks >= 1");
    }
    return alpha * (1.0 + 3.0 * std::sqrt(alpha / static_cast<double>(n_checks))) * 2.0;
}

DecompositionCheck check_decomposition(const Ensemble& ensemble,
                                       const DecompositionReport& report, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw Error(errkind::config_error, "alpha must be in (0, 1)");
    }
    if (report.n_q != ensemble.scale().n_q) {
        throw Error(errkind::config_error, "decomposition report n_q does not match ensemble");
    }
    DecompositionCheck out;
    out.alpha = alpha;
    out.z = normal_quantile(1.0 - alpha / 2.0);

    // Lipschitz estimates over the union of all bin ranges.
    double x_lo = 0.0, x_hi = 0.0;
    bool any = false;
    for (std::int64_t tb = 0; tb < report.time_bins; ++tb) {
        const double lo = report.edge(tb, 0);
        const double hi = report.edge(tb, report.state_bins);
        if (!any) {
            x_lo = lo;
            x_hi = hi;
            any = true;
        } else {
            x_lo = std::min(x_lo, lo);
            x_hi = std::max(x_hi, hi);
        }
    }
    const WalkSpec& spec = ensemble.spec();
    const Range t_range{0.0, 1.0};
    const Range x_range{x_lo, x_hi};
    const RegularityReport reg_b =
        regularity_probe(spec.drift, spec.params, t_range, x_range, 128);
    const RegularityReport reg_s =
        regularity_probe(spec.volatility, spec.params, t_range, x_range, 128);
    out.lip_drift_x = reg_b.lip_x;
    out.lip_drift_t = reg_b.lip_t;
    out.lip_vol_x = reg_s.lip_x;
    out.lip_vol_t = reg_s.lip_t;

    const CompiledExpr drift = compile_expr(spec.drift, spec.params);
    const CompiledExpr vol = compile_expr(spec.volatility, spec.params);
    const double dt = ensemble.scale().delta_t;
    const double n_d = static_cast<double>(report.n_q);

    for (std::int64_t tb = 0; tb < report.time_bins; ++tb) {
        const std::int64_t k_lo = tb * report.binning.time_pool;
        const std::int64_t k_hi = std::min(report.n_q, k_lo + report.binning.time_pool);
        const double t_c = (static_cast<double>(k_lo) + static_cast<double>(k_hi - 1)) / 2.0 / n_d;
        const double t_spread = static_cast<double>(k_hi - 1 - k_lo) / n_d;
        for (int sb = 0; sb < report.state_bins; ++sb) {
            const DecompCell& cell = report.cell(tb, sb);
            if (!cell.reliable) continue;
            const double lo = report.edge(tb, sb);
            const double hi = report.edge(tb, sb + 1);
            const double x_c = (lo + hi) / 2.0;
            const double hw = (hi - lo) / 2.0;
            double b_c, s_c;
            try {
                b_c = drift.eval(t_c, x_c);
                s_c = vol.eval(t_c, x_c);
            } catch (const Error& e) {
                throw Error(errkind::config_error,
                            std::string("coefficient evaluation failed at a cell center: ") +
                                e.what());
            }
            const double vol_target = std::sqrt(s_c * s_c + b_c * b_c * dt);
            const double bias_b = out.lip_drift_x * hw + out.lip_drift_t * t_spread / 2.0;
            const double bias_s = out.lip_vol_x * hw + out.lip_vol_t * t_spread / 2.0;
            ++out.cells_checked;
            if (std::fabs(cell.drift_hat - b_c) > out.z * cell.drift_se + bias_b) {
                ++out.drift_failures;
            }
            if (std::fabs(cell.vol_hat - vol_target) > out.z * cell.vol_se + bias_s) {
                ++out.vol_failures;
            }
        }
    }
    if (out.cells_checked == 0) {
        throw Error(errkind::config_error, "no reliable cells to check");
    }
    out.fail_fraction = static_cast<double>(out.drift_failures + out.vol_failures) /
                        static_cast<double>(2 * out.cells_checked);
    out.allowance = multiple_testing_allowance(alpha, 2 * out.cells_checked);
    out.pass = out.fail_fraction <= out.allowance;
    return out;
}

} // namespace qwalk
