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

#include "qwalk/diffusion.hpp"

#include <algorithm>
#include <cmath>

#include "qwalk/error.hpp"
#include "qwalk/format.hpp"
#include "qwalk/parallel.hpp"
#include "qwalk/stats.hpp"

namespace qwalk {

namespace {

const char* kGridSurrogateNote =
    "boundedness, smoothness, and ellipticity are grid surrogates on the probe domain, "
    "not proofs over the whole state space";
const char* kNecessityNote =
    "the checklist is a sufficiency screen; failing it does not by itself prove "
    "non-diffusive behavior";

} // namespace

DiffusionChecklist diffusion_checklist(const WalkSpec& spec, const DomainConfig& domain,
                                       const TolerancePolicy& policy) {
    policy.validate();
    if (domain.grid_n < 3 || domain.grid_n > 4096) {
        throw Error(errkind::config_error, "checklist grid_n must be in [3, 4096]");
    }
    for (const Range& r : {domain.t_range, domain.x_range}) {
        if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !(r.lo < r.hi)) {
            throw Error(errkind::config_error, "checklist ranges must be finite with lo < hi");
        }
    }

    DiffusionChecklist out;
    out.notes.push_back(kGridSurrogateNote);
    out.notes.push_back(kNecessityNote);

    const CompiledExpr drift = compile_expr(spec.drift, spec.params);
    const CompiledExpr vol = compile_expr(spec.volatility, spec.params);
    const auto n = static_cast<std::size_t>(domain.grid_n);
    const double t_step = (domain.t_range.hi - domain.t_range.lo) / static_cast<double>(n - 1);
    const double x_step = (domain.x_range.hi - domain.x_range.lo) / static_cast<double>(n - 1);

    bool first = true;
    std::vector<double> prev_b(n), prev_s(n), row_b(n), row_s(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = domain.t_range.lo + t_step * static_cast<double>(i);
        for (std::size_t j = 0; j < n; ++j) {
            const double x = domain.x_range.lo + x_step * static_cast<double>(j);
            double b, s;
            try {
                b = drift.eval(t, x);
                s = vol.eval(t, x);
            } catch (const Error& e) {
                out.eval_failure = std::string(e.what()) + " at t=" + format_double(t) +
                                   ", x=" + format_double(x);
                out.bounded_ok = false;
                out.overall = false;
                return out;
            }
            row_b[j] = b;
            row_s[j] = s;
            out.sup_drift = std::max(out.sup_drift, std::fabs(b));
            out.sup_vol = std::max(out.sup_vol, std::fabs(s));
            if (first && j == 0) {
                out.min_vol = s;
            } else {
                out.min_vol = std::min(out.min_vol, s);
            }
            if (j > 0) {
                out.max_diff1 = std::max(out.max_diff1, std::fabs(row_b[j] - row_b[j - 1]) / x_step);
                out.max_diff1 = std::max(out.max_diff1, std::fabs(row_s[j] - row_s[j - 1]) / x_step);
            }
            if (j > 1) {
                const double d2b = (row_b[j] - 2.0 * row_b[j - 1] + row_b[j - 2]) / (x_step * x_step);
                const double d2s = (row_s[j] - 2.0 * row_s[j - 1] + row_s[j - 2]) / (x_step * x_step);
                out.max_diff2 = std::max(out.max_diff2, std::fabs(d2b));
                out.max_diff2 = std::max(out.max_diff2, std::fabs(d2s));
            }
            if (!first) {
                out.max_diff1 = std::max(out.max_diff1, std::fabs(row_b[j] - prev_b[j]) / t_step);
                out.max_diff1 = std::max(out.max_diff1, std::fabs(row_s[j] - prev_s[j]) / t_step);
            }
        }
        std::swap(prev_b, row_b);
        std::swap(prev_s, row_s);
        first = false;
    }

    out.bounded_ok = out.sup_drift <= policy.limited_cut && out.sup_vol <= policy.limited_cut;
    out.smooth_ok = out.max_diff1 <= policy.limited_cut && out.max_diff2 <= policy.limited_cut;
    out.elliptic_ok = out.min_vol >= policy.appreciable_low;

    if (const auto* u = std::get_if<X0Uniform>(&spec.x0)) {
        out.x0_magnitude = std::max(std::fabs(u->lo), std::fabs(u->hi));
    } else {
        out.x0_magnitude = std::fabs(std::get<X0Point>(spec.x0).value);
    }
    out.x0_ok = out.x0_magnitude <= policy.limited_cut;

    out.overall = out.bounded_ok && out.smooth_ok && out.elliptic_ok && out.x0_ok;
    return out;
}

double ReferenceLaw::terminal_mean(double x0) const {
    return theta == 0.0 ? x0 : x0 * std::exp(-theta);
}

double ReferenceLaw::terminal_var() const {
    if (theta == 0.0) return sigma0 * sigma0;
    return sigma0 * sigma0 * (1.0 - std::exp(-2.0 * theta)) / (2.0 * theta);
}

double ReferenceLaw::terminal_cdf(double x0, double x) const {
    const double sd = std::sqrt(terminal_var());
    return normal_cdf((x - terminal_mean(x0)) / sd);
}

ReferenceLaw parse_reference_law(const std::string& text) {
    const auto colon = text.find(':');
    const std::string name = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? std::string() : text.substr(colon + 1);
    ReferenceLaw law;
    try {
        if (name == "brownian") {
            law.theta = 0.0;
            law.sigma0 = args.empty() ? 1.0 : std::stod(args);
        } else if (name == "ou") {
            const auto comma = args.find(',');
            if (comma == std::string::npos) {
                throw Error(errkind::config_error, "ou reference needs ou:THETA,SIGMA");
            }
            law.theta = std::stod(args.substr(0, comma));
            law.sigma0 = std::stod(args.substr(comma + 1));
        } else {
            throw Error(errkind::config_error,
                        "unknown reference law '" + text + "' (expected brownian:S or ou:T,S)");
        }
    } catch (const Error&) {
        throw;
    } catch (...) {
        throw Error(errkind::config_error, "malformed reference law '" + text + "'");
    }
    if (!(law.sigma0 > 0.0) || !std::isfinite(law.sigma0) || law.theta < 0.0 ||
        !std::isfinite(law.theta)) {
        throw Error(errkind::config_error, "reference law needs sigma > 0 and theta >= 0");
    }
    return law;
}

DiscreteMoments reference_discrete_moments(const ReferenceLaw& law, double x0_mean, double x0_var,
                                           QuantumScale scale) {
    const double dt = scale.delta_t;
    const double a = 1.0 - law.theta * dt;
    const double s2dt = law.sigma0 * law.sigma0 * dt;
    DiscreteMoments m;
    m.mean = x0_mean;
    m.var = x0_var;
    // Central fourth moment of a uniform start is 1.8 var^2; a point start
    // has both zero.
    m.m4 = x0_var == 0.0 ? 0.0 : 1.8 * x0_var * x0_var;
    for (std::int64_t k = 0; k < scale.n_q; ++k) {
        const double v = m.var;
        m.m4 = a * a * a * a * m.m4 + 6.0 * a * a * v * s2dt + s2dt * s2dt;
        m.var = a * a * v + s2dt;
        m.mean = a * m.mean;
    }
    return m;
}

KsPair ks_distance(std::vector<double> sample, const ReferenceLaw& law, double x0) {
    if (sample.size() < 2) {
        throw Error(errkind::invalid_value, "KS distance needs at least 2 points");
    }
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    KsPair out;
    std::size_t i = 0;
    while (i < sample.size()) {
        std::size_t j = i;
        while (j < sample.size() && sample[j] == sample[i]) ++j;
        const double F = law.terminal_cdf(x0, sample[i]);
        const double lo = static_cast<double>(i) / n;
        const double hi = static_cast<double>(j) / n;
        const double mid = (static_cast<double>(i) + static_cast<double>(j)) / (2.0 * n);
        out.raw = std::max(out.raw, std::max(std::fabs(lo - F), std::fabs(hi - F)));
        out.corrected = std::max(out.corrected, std::fabs(mid - F));
        i = j;
    }
    return out;
}

namespace {

// The reference law's own coefficients, used to confirm the spec belongs to
// the law's family before comparing distributions.
void check_family(const WalkSpec& spec, const ReferenceLaw& law, double x0) {
    const CompiledExpr drift = compile_expr(spec.drift, spec.params);
    const CompiledExpr vol = compile_expr(spec.volatility, spec.params);
    const double spread = 4.0 * law.sigma0 + 1.0;
    for (int i = 0; i <= 32; ++i) {
        const double t = static_cast<double>(i) / 32.0;
        for (int j = 0; j <= 32; ++j) {
            const double x = x0 - spread + 2.0 * spread * static_cast<double>(j) / 32.0;
            const double b_ref = -law.theta * x;
            const double s_ref = law.sigma0;
            double b, s;
            try {
                b = drift.eval(t, x);
                s = vol.eval(t, x);
            } catch (const Error& e) {
                throw Error(errkind::config_error,
                            std::string("spec coefficients failed to evaluate on the reference "
                                        "domain: ") +
                                e.what());
            }
            const double tol_b = 1e-9 * (1.0 + std::fabs(b_ref));
            const double tol_s = 1e-9 * (1.0 + std::fabs(s_ref));
            if (std::fabs(b - b_ref) > tol_b || std::fabs(s - s_ref) > tol_s) {
                throw Error(errkind::config_error,
                            "spec coefficients do not match the reference law family");
            }
        }
    }
}

} // namespace

WeakConvergenceReport weak_convergence_test(const WalkSpec& spec, const ReferenceLaw& law,
                                            const WeakConvergenceConfig& config) {
    if (config.nq_ladder.size() < 2) {
        throw Error(errkind::config_error, "weak convergence needs at least 2 ladder scales");
    }
    for (std::size_t i = 0; i + 1 < config.nq_ladder.size(); ++i) {
        if (config.nq_ladder[i] >= config.nq_ladder[i + 1]) {
            throw Error(errkind::config_error, "nq ladder must be strictly increasing");
        }
    }
    if (config.paths < 1000) {
        throw Error(errkind::config_error, "weak convergence needs at least 1000 paths");
    }
    const auto* point = std::get_if<X0Point>(&spec.x0);
    if (point == nullptr) {
        throw Error(errkind::config_error, "weak convergence needs a point initial condition");
    }
    const double x0 = point->value;
    check_family(spec, law, x0);

    WeakConvergenceReport report;
    report.ks_tol = config.ks_tol;
    report.z = config.z;

    for (std::int64_t n_q : config.nq_ladder) {
        const QuantumScale scale = make_scale(n_q);
        EnsembleOptions opt;
        opt.threads = config.threads;
        opt.memory_budget_mb = config.memory_budget_mb;
        opt.force_stream = true; // terminal values are all we need
        const Ensemble ens = simulate_ensemble(spec, scale, config.seed, config.paths, opt);

        WeakConvergenceRung rung;
        rung.n_q = n_q;
        rung.ks = ks_distance(ens.terminal_values(), law, x0);

        const SampleMoments emp = sample_moments(ens.terminal_values());
        const DiscreteMoments exact = reference_discrete_moments(law, x0, 0.0, scale);
        const double p = static_cast<double>(config.paths);
        rung.mean_err = std::fabs(emp.mean - exact.mean);
        rung.var_err = std::fabs(emp.var - exact.var);
        rung.m4_err = std::fabs(emp.m4 - exact.m4);
        rung.mean_se = std::sqrt(emp.var / p);
        rung.var_se = std::sqrt(std::max(0.0, emp.m4 - emp.var * emp.var) / p);
        rung.m4_se = std::sqrt(std::max(0.0, emp.m8 - emp.m4 * emp.m4) / p);
        rung.moments_ok = rung.mean_err <= config.z * rung.mean_se + 1e-12 &&
                          rung.var_err <= config.z * rung.var_se + 1e-12 &&
                          rung.m4_err <= config.z * rung.m4_se + 1e-12;
        report.rungs.push_back(rung);
    }

    report.ks_decreasing = true;
    for (std::size_t i = 0; i + 1 < report.rungs.size(); ++i) {
        if (!(report.rungs[i + 1].ks.raw < report.rungs[i].ks.raw)) report.ks_decreasing = false;
    }
    report.final_ks_ok = report.rungs.back().ks.corrected <= config.ks_tol;
    report.moments_ok = true;
    for (const WeakConvergenceRung& r : report.rungs) {
        report.moments_ok = report.moments_ok && r.moments_ok;
    }
    report.pass = report.ks_decreasing && report.final_ks_ok && report.moments_ok;
    return report;
}

DimensionReport fractal_dimension(const Ensemble& ensemble,
                                  const std::vector<double>& lambda_ladder) {
    if (lambda_ladder.size() < 4) {
        throw Error(errkind::config_error, "dimension estimate needs at least 4 lambda rungs");
    }
    for (std::size_t i = 0; i < lambda_ladder.size(); ++i) {
        if (!(lambda_ladder[i] > 0.0) || !std::isfinite(lambda_ladder[i])) {
            throw Error(errkind::config_error, "lambda rungs must be positive and finite");
        }
        if (i > 0 && !(lambda_ladder[i] > lambda_ladder[i - 1])) {
            throw Error(errkind::config_error, "lambda ladder must be strictly increasing");
        }
    }
    const double lam_lo = lambda_ladder.front();
    const double lam_hi = lambda_ladder.back();
    if (lam_hi / lam_lo < 16.0) {
        throw Error(errkind::config_error, "lambda ladder must span at least a factor of 16");
    }
    // Resolution floor: below ~4 typical step sizes the coarse path sees
    // individual steps, not the walk's scaling regime.
    const double sigma_typ = std::sqrt(std::max(0.0, ensemble.summary().qv_mean));
    const double floor_lambda = 4.0 * sigma_typ * std::sqrt(ensemble.scale().delta_t);
    if (sigma_typ > 0.0 && lam_lo < floor_lambda) {
        throw Error(errkind::config_error,
                    "smallest lambda " + format_double(lam_lo) +
                        " is below the step resolution floor " + format_double(floor_lambda));
    }

    const auto n_rungs = lambda_ladder.size();
    struct Partial {
        std::vector<std::int64_t> crossings;
    };
    auto make_block = [&](std::int64_t lo, std::int64_t hi) {
        Partial part;
        part.crossings.assign(n_rungs, 0);
        std::vector<double> level(n_rungs);
        for (std::int64_t pid = lo; pid < hi; ++pid) {
            const double x0 = ensemble.compiled().draw_x0(ensemble.seed(), pid);
            for (std::size_t r = 0; r < n_rungs; ++r) {
                level[r] = lambda_ladder[r] * std::round(x0 / lambda_ladder[r]);
            }
            ensemble.visit_path(pid, [&](const StepPoint& p) {
                const double x = p.x_next;
                for (std::size_t r = 0; r < n_rungs; ++r) {
                    const double lam = lambda_ladder[r];
                    // Excursions of a full lambda from the last crossed
                    // level; the slack absorbs accumulated rounding without
                    // admitting chatter.
                    const double eps = 1e-6 * lam;
                    double v = level[r];
                    while (x >= v + lam - eps) {
                        v += lam;
                        ++part.crossings[r];
                    }
                    while (x <= v - lam + eps) {
                        v -= lam;
                        ++part.crossings[r];
                    }
                    level[r] = v;
                }
            });
        }
        return part;
    };
    auto merge = [](Partial& acc, Partial&& p) {
        if (acc.crossings.empty()) {
            acc.crossings = std::move(p.crossings);
            return;
        }
        for (std::size_t i = 0; i < acc.crossings.size(); ++i) acc.crossings[i] += p.crossings[i];
    };
    const Partial total = ordered_block_reduce<Partial>(ensemble.paths(), ensemble.threads(),
                                                        Partial{}, make_block, merge);

    DimensionReport report;
    std::vector<double> log_lam, log_len;
    for (std::size_t r = 0; r < n_rungs; ++r) {
        DimensionRung rung;
        rung.lambda = lambda_ladder[r];
        rung.mean_crossings =
            static_cast<double>(total.crossings[r]) / static_cast<double>(ensemble.paths());
        rung.coarse_length = rung.lambda * rung.mean_crossings;
        rung.usable = rung.mean_crossings >= 2.0;
        if (rung.usable) {
            ++report.usable_rungs;
            log_lam.push_back(std::log(rung.lambda));
            log_len.push_back(std::log(rung.coarse_length));
        } else {
            report.notes.push_back("rung lambda=" + format_double(rung.lambda) +
                                   " dropped: fewer than 2 mean crossings");
        }
        report.rungs.push_back(rung);
    }
    if (report.usable_rungs < 4) {
        throw Error(errkind::config_error,
                    "fewer than 4 usable lambda rungs; enlarge the ladder or the ensemble");
    }
    const LineFit fit = fit_line(log_lam, log_len);
    report.slope = fit.slope;
    report.slope_stderr = fit.slope_stderr;
    report.dimension = 1.0 - fit.slope;
    report.notes.push_back("dimension is read from scales above the step resolution; the "
                           "smallest usable lambda bounds the regime probed");
    return report;
}

std::vector<double> parse_lambda_ladder(const std::string& text) {
    const auto c1 = text.find(':');
    const auto c2 = c1 == std::string::npos ? std::string::npos : text.find(':', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos) {
        throw Error(errkind::config_error, "lambda ladder must be lo:hi:count");
    }
    double lo, hi;
    long long count;
    try {
        lo = std::stod(text.substr(0, c1));
        hi = std::stod(text.substr(c1 + 1, c2 - c1 - 1));
        count = std::stoll(text.substr(c2 + 1));
    } catch (...) {
        throw Error(errkind::config_error, "malformed lambda ladder '" + text + "'");
    }
    if (!(lo > 0.0) || !(hi > lo) || count < 2 || count > 64) {
        throw Error(errkind::config_error, "lambda ladder needs 0 < lo < hi and count in [2, 64]");
    }
    std::vector<double> ladder;
    ladder.reserve(static_cast<std::size_t>(count));
    const double ratio = hi / lo;
    for (long long i = 0; i < count; ++i) {
        if (i == 0) {
            ladder.push_back(lo);
        } else if (i == count - 1) {
            ladder.push_back(hi);
        } else {
            ladder.push_back(lo * std::pow(ratio, static_cast<double>(i) /
                                                      static_cast<double>(count - 1)));
        }
    }
    return ladder;
}

} // namespace qwalk
