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

#include "qwalk/equivalence.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "qwalk/error.hpp"
#include "qwalk/parallel.hpp"
#include "qwalk/regularity.hpp"
#include "qwalk/stats.hpp"
#include "qwalk/walk.hpp"

namespace qwalk {

EquivalenceReport coupled_distance(const WalkSpec& spec_a, QuantumScale scale_a,
                                   const WalkSpec& spec_b, QuantumScale scale_b,
                                   std::uint64_t seed, std::int64_t paths, int threads) {
    if (scale_a.n_q != scale_b.n_q) {
        throw Error(errkind::config_error, "coupled walks need identical scales (n_q mismatch)");
    }
    if (paths < 1) {
        throw Error(errkind::config_error, "coupled distance needs paths >= 1");
    }
    if (spec_a.running_max_vol || spec_b.running_max_vol) {
        throw Error(errkind::config_error,
                    "coupled distance requires state-dependent coefficients "
                    "(history-switched volatility is not supported)");
    }
    const QuantumScale scale = scale_a;
    const CompiledWalk walk_a(spec_a, scale);
    const CompiledWalk walk_b(spec_b, scale);
    const CompiledExpr drift_a = compile_expr(spec_a.drift, spec_a.params);
    const CompiledExpr vol_a = compile_expr(spec_a.volatility, spec_a.params);
    const CompiledExpr drift_b = compile_expr(spec_b.drift, spec_b.params);
    const CompiledExpr vol_b = compile_expr(spec_b.volatility, spec_b.params);
    const int n_threads = resolve_threads(threads);

    struct Partial {
        NeumaierSum sup_sum;
        NeumaierSum terminal_sq;
        double max_sup = 0.0;
        double eta_x0 = 0.0;
        double eta_b = 0.0;
        double eta_sigma = 0.0;
        double x_lo = 0.0;
        double x_hi = 0.0;
        bool any = false;

        void see_state(double x) {
            if (!any) {
                x_lo = x;
                x_hi = x;
                any = true;
            } else {
                x_lo = std::min(x_lo, x);
                x_hi = std::max(x_hi, x);
            }
        }
    };

    auto gap_at = [&](double t, double x, std::int64_t pid, std::int64_t k, Partial& part) {
        try {
            part.eta_b = std::max(part.eta_b, std::fabs(drift_a.eval(t, x) - drift_b.eval(t, x)));
            part.eta_sigma =
                std::max(part.eta_sigma, std::fabs(vol_a.eval(t, x) - vol_b.eval(t, x)));
        } catch (const Error& e) {
            throw SimulationError(pid, k, t, x, e.kind(),
                                  std::string("coefficient gap evaluation failed: ") + e.what());
        }
    };

    auto make_block = [&](std::int64_t lo, std::int64_t hi) {
        Partial part;
        std::vector<double> buffer(static_cast<std::size_t>(scale.n_q) + 1);
        for (std::int64_t pid = lo; pid < hi; ++pid) {
            buffer[0] = walk_a.draw_x0(seed, pid);
            walk_a.run(seed, pid, [&](const StepPoint& p) {
                buffer[static_cast<std::size_t>(p.k) + 1] = p.x_next;
                part.see_state(p.x);
                gap_at(p.t, p.x, pid, p.k, part);
            });
            part.see_state(buffer[static_cast<std::size_t>(scale.n_q)]);

            const double x0_b = walk_b.draw_x0(seed, pid);
            part.eta_x0 = std::max(part.eta_x0, std::fabs(buffer[0] - x0_b));
            double sup = std::fabs(buffer[0] - x0_b);
            double terminal_b = x0_b;
            walk_b.run(seed, pid, [&](const StepPoint& p) {
                part.see_state(p.x);
                gap_at(p.t, p.x, pid, p.k, part);
                const double diff =
                    std::fabs(p.x_next - buffer[static_cast<std::size_t>(p.k) + 1]);
                if (diff > sup) sup = diff;
                terminal_b = p.x_next;
            });
            part.see_state(terminal_b);

            part.sup_sum.add(sup);
            part.max_sup = std::max(part.max_sup, sup);
            const double td = terminal_b - buffer[static_cast<std::size_t>(scale.n_q)];
            part.terminal_sq.add(td * td);
        }
        return part;
    };
    auto merge = [](Partial& acc, Partial&& p) {
        acc.sup_sum.merge(p.sup_sum);
        acc.terminal_sq.merge(p.terminal_sq);
        acc.max_sup = std::max(acc.max_sup, p.max_sup);
        acc.eta_x0 = std::max(acc.eta_x0, p.eta_x0);
        acc.eta_b = std::max(acc.eta_b, p.eta_b);
        acc.eta_sigma = std::max(acc.eta_sigma, p.eta_sigma);
        if (p.any) {
            if (!acc.any) {
                acc.x_lo = p.x_lo;
                acc.x_hi = p.x_hi;
                acc.any = true;
            } else {
                acc.x_lo = std::min(acc.x_lo, p.x_lo);
                acc.x_hi = std::max(acc.x_hi, p.x_hi);
            }
        }
    };
    const Partial total =
        ordered_block_reduce<Partial>(paths, n_threads, Partial{}, make_block, merge);

    EquivalenceReport report;
    report.paths = paths;
    report.eta_x0 = total.eta_x0;
    report.eta_b = total.eta_b;
    report.eta_sigma = total.eta_sigma;
    report.mean_sup_diff = total.sup_sum.value() / static_cast<double>(paths);
    report.max_sup_diff = total.max_sup;
    report.rms_terminal_diff =
        std::sqrt(std::max(0.0, total.terminal_sq.value() / static_cast<double>(paths)));
    report.x_visited_lo = total.x_lo;
    report.x_visited_hi = total.x_hi;

    // Lipschitz estimates over the visited box, padded a little so the
    // divided differences see a neighborhood of the extreme states.
    const double pad = 0.01 * (total.x_hi - total.x_lo) + 1e-9;
    const Range t_range{0.0, 1.0};
    const Range x_range{total.x_lo - pad, total.x_hi + pad};
    const std::int64_t grid_n = 128;
    report.lip_b = std::max(regularity_probe(spec_a.drift, spec_a.params, t_range, x_range, grid_n).lip_x,
                            regularity_probe(spec_b.drift, spec_b.params, t_range, x_range, grid_n).lip_x);
    report.lip_sigma =
        std::max(regularity_probe(spec_a.volatility, spec_a.params, t_range, x_range, grid_n).lip_x,
                 regularity_probe(spec_b.volatility, spec_b.params, t_range, x_range, grid_n).lip_x);

    report.bound = (report.eta_x0 + report.eta_b + report.eta_sigma) *
                   std::exp(report.lip_b + report.lip_sigma * report.lip_sigma / 2.0 + 1.0);
    report.pass = report.mean_sup_diff <= report.bound;
    return report;
}

} // namespace qwalk
