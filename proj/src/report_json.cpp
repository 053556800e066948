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

#include "qwalk/report_json.hpp"

namespace qwalk {

using nlohmann::json;

json report_json(const TolerancePolicy& policy) {
    return json{
        {"infinitesimal_cut", policy.infinitesimal_cut},
        {"appreciable_low", policy.appreciable_low},
        {"appreciable_high", policy.appreciable_high},
        {"limited_cut", policy.limited_cut},
    };
}

json report_json(const ClassificationCounts& counts) {
    json out = json::object();
    for (int i = 0; i < kClassificationCount; ++i) {
        out[to_string(static_cast<Classification>(i))] = counts.counts[static_cast<size_t>(i)];
    }
    return out;
}

json report_json(const HeisenbergReport& report) {
    return json{
        {"counts", report_json(report.counts)},
        {"min_ratio", report.min_ratio},
        {"max_ratio", report.max_ratio},
        {"median_ratio", report.median_ratio},
        {"pass", report.pass},
    };
}

json report_json(const EnsembleHeisenbergReport& report) {
    return json{
        {"paths", report.paths},
        {"failing_paths", report.failing_paths},
        {"counts", report_json(report.counts)},
        {"min_ratio", report.min_ratio},
        {"max_ratio", report.max_ratio},
        {"pass", report.pass},
    };
}

json report_json(const PhysicalScaleReport& report) {
    return json{
        {"counts", report_json(report.counts)},
        {"min_ratio", report.min_ratio},
        {"max_ratio", report.max_ratio},
        {"reference", report.reference},
        {"pass", report.pass},
    };
}

json report_json(const EquiprobabilityReport& report) {
    return json{
        {"n", report.n},
        {"freq_plus", report.freq_plus},
        {"freq_z", report.freq_z},
        {"lag_autocorr", report.lag_autocorr},
        {"z_crit", report.z_crit},
        {"alpha", report.alpha},
        {"freq_pass", report.freq_pass},
        {"lags_pass", report.lags_pass},
        {"pass", report.pass},
    };
}

json report_json(const DecompositionReport& report) {
    json out{
        {"n_q", report.n_q},
        {"time_bins", report.time_bins},
        {"state_bins", report.state_bins},
        {"time_pool", report.binning.time_pool},
        {"min_cell_count", report.binning.min_cell_count},
        {"total_steps", report.total_steps},
        {"out_of_range_steps", report.out_of_range_steps},
        {"occupied_cells", report.occupied_cells},
        {"reliable_cells", report.reliable_cells},
    };
    const std::int64_t n_cells = report.time_bins * report.state_bins;
    if (n_cells > 4096) {
        out["cells_omitted"] = true;
        return out;
    }
    json cells = json::array();
    for (std::int64_t tb = 0; tb < report.time_bins; ++tb) {
        for (int sb = 0; sb < report.state_bins; ++sb) {
            const DecompCell& c = report.cell(tb, sb);
            cells.push_back(json{
                {"time_bin", tb},
                {"state_bin", sb},
                {"x_lo", report.edge(tb, sb)},
                {"x_hi", report.edge(tb, sb + 1)},
                {"count", c.count},
                {"drift_hat", c.drift_hat},
                {"drift_se", c.drift_se},
                {"vol_hat", c.vol_hat},
                {"vol_se", c.vol_se},
                {"reliable", c.reliable},
            });
        }
    }
    out["cells"] = std::move(cells);
    return out;
}

json report_json(const DecompositionCheck& check) {
    return json{
        {"cells_checked", check.cells_checked},
        {"drift_failures", check.drift_failures},
        {"vol_failures", check.vol_failures},
        {"fail_fraction", check.fail_fraction},
        {"allowance", check.allowance},
        {"z", check.z},
        {"lip_drift_x", check.lip_drift_x},
        {"lip_drift_t", check.lip_drift_t},
        {"lip_vol_x", check.lip_vol_x},
        {"lip_vol_t", check.lip_vol_t},
        {"alpha", check.alpha},
        {"pass", check.pass},
    };
}

json report_json(const ResidualMomentsReport& report) {
    return json{
        {"steps_used", report.steps_used},
        {"steps_excluded", report.steps_excluded},
        {"mean", report.mean},
        {"second_moment", report.second_moment},
        {"mean_se", report.mean_se},
        {"second_moment_se", report.second_moment_se},
        {"cells_tested", report.cells_tested},
        {"cells_failing", report.cells_failing},
        {"cell_fail_fraction", report.cell_fail_fraction},
        {"cell_fail_allowance", report.cell_fail_allowance},
        {"max_path_m2_dev", report.max_path_m2_dev},
        {"alpha", report.alpha},
        {"pass", report.pass},
    };
}

namespace {

json past_json(const PastFunctional& past) {
    json out = json::object();
    if (past.kind == PastKind::lagged_sign) {
        out["kind"] = "lagged-sign";
        out["lag"] = past.lag;
    } else {
        out["kind"] = "running-max";
        out["threshold"] = past.threshold;
    }
    return out;
}

} // namespace

json report_json(const MarkovReport& report) {
    json bins = json::array();
    for (const MarkovBinResult& b : report.bins) {
        bins.push_back(json{
            {"x_lo", b.x_lo},
            {"x_hi", b.x_hi},
            {"n_stratum0", b.n_stratum[0]},
            {"n_stratum1", b.n_stratum[1]},
            {"tested", b.tested},
            {"chi2_sign", b.chi2_sign},
            {"mw_z", b.mw_z},
            {"reject_sign", b.reject_sign},
            {"reject_magnitude", b.reject_magnitude},
        });
    }
    return json{
        {"past", past_json(report.past)},
        {"t_probe", report.t_probe},
        {"probe_index", report.probe_index},
        {"alpha", report.alpha},
        {"alpha_adjusted", report.alpha_adjusted},
        {"paths", report.paths},
        {"bins", std::move(bins)},
        {"tested_bins", report.tested_bins},
        {"rejections", report.rejections},
        {"unreliable", report.unreliable},
        {"pass", report.pass},
    };
}

json report_json(const EquivalenceReport& report) {
    return json{
        {"paths", report.paths},
        {"eta_x0", report.eta_x0},
        {"eta_b", report.eta_b},
        {"eta_sigma", report.eta_sigma},
        {"lip_b", report.lip_b},
        {"lip_sigma", report.lip_sigma},
        {"mean_sup_diff", report.mean_sup_diff},
        {"max_sup_diff", report.max_sup_diff},
        {"rms_terminal_diff", report.rms_terminal_diff},
        {"bound", report.bound},
        {"x_visited_lo", report.x_visited_lo},
        {"x_visited_hi", report.x_visited_hi},
        {"pass", report.pass},
    };
}

json report_json(const DiffusionChecklist& checklist) {
    json out{
        {"bounded_ok", checklist.bounded_ok},
        {"sup_drift", checklist.sup_drift},
        {"sup_vol", checklist.sup_vol},
        {"smooth_ok", checklist.smooth_ok},
        {"max_diff1", checklist.max_diff1},
        {"max_diff2", checklist.max_diff2},
        {"elliptic_ok", checklist.elliptic_ok},
        {"min_vol", checklist.min_vol},
        {"x0_ok", checklist.x0_ok},
        {"x0_magnitude", checklist.x0_magnitude},
        {"overall", checklist.overall},
        {"notes", checklist.notes},
    };
    if (checklist.eval_failure) out["eval_failure"] = *checklist.eval_failure;
    return out;
}

json report_json(const WeakConvergenceReport& report) {
    json rungs = json::array();
    for (const WeakConvergenceRung& r : report.rungs) {
        rungs.push_back(json{
            {"n_q", r.n_q},
            {"ks_raw", r.ks.raw},
            {"ks_corrected", r.ks.corrected},
            {"mean_err", r.mean_err},
            {"var_err", r.var_err},
            {"m4_err", r.m4_err},
            {"mean_se", r.mean_se},
            {"var_se", r.var_se},
            {"m4_se", r.m4_se},
            {"moments_ok", r.moments_ok},
        });
    }
    return json{
        {"rungs", std::move(rungs)},
        {"ks_tol", report.ks_tol},
        {"z", report.z},
        {"ks_decreasing", report.ks_decreasing},
        {"final_ks_ok", report.final_ks_ok},
        {"moments_ok", report.moments_ok},
        {"pass", report.pass},
    };
}

json report_json(const DimensionReport& report) {
    json rungs = json::array();
    for (const DimensionRung& r : report.rungs) {
        rungs.push_back(json{
            {"lambda", r.lambda},
            {"mean_crossings", r.mean_crossings},
            {"coarse_length", r.coarse_length},
            {"usable", r.usable},
        });
    }
    return json{
        {"rungs", std::move(rungs)},
        {"usable_rungs", report.usable_rungs},
        {"slope", report.slope},
        {"slope_stderr", report.slope_stderr},
        {"dimension", report.dimension},
        {"notes", report.notes},
    };
}

json summary_json(const EnsembleSummary& summary, std::uint64_t seed, std::int64_t n_q) {
    return json{
        {"seed", seed},
        {"n_q", n_q},
        {"P", summary.paths},
        {"terminal",
         json{
             {"mean", summary.terminal_mean},
             {"var", summary.terminal_var},
             {"m4", summary.terminal_m4},
         }},
        {"qv",
         json{
             {"mean", summary.qv_mean},
             {"var", summary.qv_var},
         }},
    };
}

} // namespace qwalk
