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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "qwalk/error.hpp"
#include "qwalk/estimators.hpp"
#include "qwalk/walk.hpp"
#include "qwalk/walk_spec.hpp"

using namespace qwalk;

namespace {

WalkSpec parse_spec(const std::string& drift, const std::string& vol, double x0 = 0.0) {
    WalkSpec spec;
    spec.drift = parse_expr(drift);
    spec.volatility = parse_expr(vol);
    spec.x0 = X0Point{x0};
    spec.validate();
    return spec;
}

} // namespace

TEST_CASE("classification counts add and merge") {
    ClassificationCounts a;
    a.add(Classification::appreciable);
    a.add(Classification::appreciable);
    a.add(Classification::infinitesimal);
    ClassificationCounts b;
    b.add(Classification::unlimited);
    a.merge(b);
    CHECK(a.at(Classification::appreciable) == 2);
    CHECK(a.at(Classification::infinitesimal) == 1);
    CHECK(a.at(Classification::unlimited) == 1);
    CHECK(a.total() == 4);
}

TEST_CASE("unit volatility walk sits exactly on the appreciable ratio") {
    const WalkSpec spec = parse_spec("0", "1");
    const QuantumScale scale = make_scale(256);
    const TolerancePolicy policy = default_policy(scale);
    const Path p = simulate_path(spec, scale, 1, 0);
    const HeisenbergReport r = heisenberg_check(p, policy);
    CHECK(r.pass);
    CHECK(r.min_ratio == 1.0);
    CHECK(r.max_ratio == 1.0);
    CHECK(r.median_ratio == 1.0);
    CHECK(r.counts.at(Classification::appreciable) == 256);
    CHECK(r.counts.total() == 256);
}

TEST_CASE("zero volatility fails the scale check on every step") {
    const WalkSpec spec = parse_spec("1", "0");
    // n_q = 1024 puts the ratio (dx)^2/dt = dt = 2^-10 under the default
    // infinitesimal cut (clamped at appreciable_low / 2 = 0.005).
    const QuantumScale scale = make_scale(1024);
    const TolerancePolicy policy = default_policy(scale);
    const HeisenbergReport r = heisenberg_check(simulate_path(spec, scale, 1, 0), policy);
    CHECK(!r.pass);
    CHECK(r.counts.at(Classification::infinitesimal) == 1024);

    const EnsembleHeisenbergReport er =
        heisenberg_check(simulate_ensemble(spec, scale, 1, 40, {}), policy);
    CHECK(!er.pass);
    CHECK(er.failing_paths == 40);
    CHECK(er.paths == 40);
}

TEST_CASE("a volatility that decays into the gap band is flagged") {
    // sigma = sqrt(abs(1 - 2t)): the squared ratio sweeps through every band
    // below 1, so some steps classify under the cut.
    const WalkSpec spec = parse_spec("0", "sqrt(abs(1 - 2*t))");
    const QuantumScale scale = make_scale(1024);
    const TolerancePolicy policy = default_policy(scale);
    const HeisenbergReport r = heisenberg_check(simulate_path(spec, scale, 3, 0), policy);
    CHECK(!r.pass);
    CHECK(r.counts.at(Classification::infinitesimal) > 0);
    CHECK(r.counts.at(Classification::appreciable) > 0);
}

TEST_CASE("physical scale variant compares against the reference ratio") {
    const WalkSpec spec = parse_spec("0", "1");
    const QuantumScale scale = make_scale(256);
    const TolerancePolicy policy = default_policy(scale);
    const Path p = simulate_path(spec, scale, 1, 0);

    const PhysicalScaleReport ok = physical_scale_check(p, 1.0, policy);
    CHECK(ok.pass);
    CHECK(ok.reference == 1.0);
    CHECK(ok.min_ratio == 1.0);

    // A huge reference action per mass makes the walk look infinitesimal.
    const PhysicalScaleReport bad = physical_scale_check(p, 1e9, policy);
    CHECK(!bad.pass);
    CHECK(bad.counts.at(Classification::infinitesimal) == 256);

    // The bound is one-sided: a tiny reference only inflates the ratio.
    const PhysicalScaleReport large = physical_scale_check(p, 1e-9, policy);
    CHECK(large.pass);
    CHECK(large.counts.at(Classification::unlimited) == 256);
}

TEST_CASE("equiprobability accepts the stream and rejects constructed bias") {
    std::vector<signed char> alternating(10000);
    for (std::size_t i = 0; i < alternating.size(); ++i) {
        alternating[i] = static_cast<signed char>(i % 2 == 0 ? 1 : -1);
    }
    const EquiprobabilityReport alt = equiprobability_test(alternating, 0.001, 4);
    CHECK(alt.freq_pass);         // exactly half plus
    CHECK(alt.freq_z == 0.0);
    CHECK(!alt.lags_pass);        // lag-1 correlation is -1
    CHECK(!alt.pass);
    CHECK(alt.lag_autocorr[0] == doctest::Approx(-1.0).epsilon(1e-9));

    std::vector<signed char> constant(10000, 1);
    const EquiprobabilityReport con = equiprobability_test(constant, 0.001, 4);
    CHECK(!con.freq_pass);
    CHECK(con.freq_z == doctest::Approx(100.0).epsilon(1e-12)); // sqrt(n)

    CHECK_THROWS_AS(equiprobability_test(std::vector<signed char>(10, 1), 0.01, 2), Error);
    std::vector<signed char> bad(2000, 1);
    bad[5] = 0;
    CHECK_THROWS_AS(equiprobability_test(bad, 0.01, 2), Error);
}

TEST_CASE("decomposition recovers constant coefficients inside error bounds") {
    const WalkSpec spec = parse_spec("1", "0.5");
    const QuantumScale scale = make_scale(200);
    const Ensemble ens = simulate_ensemble(spec, scale, 2024, 2000, {});

    BinningConfig binning;
    binning.state_bins = 8;
    binning.time_pool = 20;
    const DecompositionReport rep = estimate_decomposition(ens, binning);
    CHECK(rep.time_bins == 10);
    CHECK(rep.state_bins == 8);
    CHECK(rep.reliable_cells > 40);

    // Exact per-cell targets: drift 1, second moment sqrt(0.25 + (1)^2 dt).
    const double vol_target = std::sqrt(0.25 + scale.delta_t);
    std::int64_t cells = 0, drift_in3 = 0, vol_in3 = 0;
    for (std::int64_t tb = 0; tb < rep.time_bins; ++tb) {
        for (int sb = 0; sb < rep.state_bins; ++sb) {
            const DecompCell& c = rep.cell(tb, sb);
            if (!c.reliable) continue;
            ++cells;
            if (std::fabs(c.drift_hat - 1.0) <= 3.0 * c.drift_se) ++drift_in3;
            if (std::fabs(c.vol_hat - vol_target) <= 3.0 * c.vol_se) ++vol_in3;
            CHECK(std::fabs(c.drift_hat - 1.0) <= 6.0 * c.drift_se);
            CHECK(std::fabs(c.vol_hat - vol_target) <= 6.0 * c.vol_se);
        }
    }
    // Constant coefficients have no binning bias; ~99.7% per bound.
    CHECK(drift_in3 >= cells * 9 / 10);
    CHECK(vol_in3 >= cells * 9 / 10);

    const DecompositionCheck check = check_decomposition(ens, rep, 0.01);
    CHECK(check.pass);
    CHECK(check.cells_checked == cells);
    CHECK(check.lip_drift_x == 0.0);
    CHECK(check.lip_vol_t == 0.0);
}

TEST_CASE("decomposition check fails against a wrong drift") {
    const QuantumScale scale = make_scale(200);
    const Ensemble good = simulate_ensemble(parse_spec("1", "0.5"), scale, 2024, 2000, {});
    BinningConfig binning;
    binning.state_bins = 8;
    binning.time_pool = 20;
    const DecompositionReport rep = estimate_decomposition(good, binning);

    // Same scale, opposite drift: nearly every drift cell must fail.
    const Ensemble wrong = simulate_ensemble(parse_spec("-1", "0.5"), scale, 2024, 2000, {});
    const DecompositionCheck check = check_decomposition(wrong, rep, 0.01);
    CHECK(!check.pass);
    CHECK(check.drift_failures > check.cells_checked * 9 / 10);
}

TEST_CASE("decomposition preconditions") {
    const WalkSpec spec = parse_spec("0", "1");
    const Ensemble tiny = simulate_ensemble(spec, make_scale(16), 1, 50, {});
    CHECK_THROWS_AS(estimate_decomposition(tiny, {}), Error);

    const Ensemble ens = simulate_ensemble(spec, make_scale(64), 1, 200, {});
    const DecompositionReport rep = estimate_decomposition(ens, {});
    const Ensemble other_scale = simulate_ensemble(spec, make_scale(32), 1, 200, {});
    CHECK_THROWS_AS(check_decomposition(other_scale, rep, 0.01), Error);
}

TEST_CASE("locate maps states to bins with closed outer edges") {
    const WalkSpec spec = parse_spec("0", "1");
    const Ensemble ens = simulate_ensemble(spec, make_scale(64), 5, 500, {});
    BinningConfig binning;
    binning.state_bins = 4;
    binning.time_pool = 16;
    const DecompositionReport rep = estimate_decomposition(ens, binning);
    const double lo = rep.edge(0, 0);
    const double hi = rep.edge(0, 4);
    CHECK(rep.locate(0, lo) == 0);
    CHECK(rep.locate(0, hi) == 3);           // top edge closes the last bin
    CHECK(rep.locate(0, std::nextafter(lo, -1e300)) == -1);
    CHECK(rep.locate(0, std::nextafter(hi, 1e300)) == -1);
    // An interior edge lands in one of its two adjacent bins, never outside.
    const double mid = rep.edge(0, 2);
    const int at_mid = rep.locate(0, mid);
    CHECK(at_mid >= 1);
    CHECK(at_mid <= 2);
}

TEST_CASE("residuals against true coefficients are the signs themselves") {
    const WalkSpec spec = parse_spec("-x", "0.5", 0.2);
    const Ensemble ens = simulate_ensemble(spec, make_scale(100), 31, 500, {});
    const ResidualMomentsReport r = residual_moments_true(ens, 0.01);
    CHECK(r.pass);
    CHECK(r.steps_used == 500 * 100);
    CHECK(r.steps_excluded == 0);
    CHECK(r.max_path_m2_dev <= 1e-10);
    CHECK(std::fabs(r.mean) <= 3.0 * r.mean_se);
    CHECK(r.second_moment == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("zero-volatility steps leave no usable residuals") {
    const WalkSpec spec = parse_spec("1", "0");
    const Ensemble ens = simulate_ensemble(spec, make_scale(50), 1, 120, {});
    try {
        residual_moments_true(ens, 0.01);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.kind()) == errkind::config_error);
    }

    // A volatility that vanishes on half the time axis excludes exactly
    // those steps and keeps the rest usable. On the dyadic grid the sum
    // abs(t - 0.5) + (t - 0.5) is exactly 0 for t <= 0.5.
    const WalkSpec gated = parse_spec("0", "abs(t - 0.5) + (t - 0.5)");
    const Ensemble mixed = simulate_ensemble(gated, make_scale(64), 1, 120, {});
    const ResidualMomentsReport r = residual_moments_true(mixed, 0.01);
    CHECK(r.steps_excluded == 120 * 33); // steps k/64 <= 0.5: k = 0..32
    CHECK(r.steps_used == 120 * 31);
    CHECK(r.max_path_m2_dev <= 1e-10);
}

TEST_CASE("same-run residual moments are identities, not evidence") {
    // Standardizing each cell by its own sample mean and sd forces the
    // pooled mean to 0 and second moment to 1; the header documents that an
    // informative run needs an independent report.
    const WalkSpec spec = parse_spec("0", "1");
    const QuantumScale scale = make_scale(128);
    const Ensemble ens = simulate_ensemble(spec, scale, 77, 1000, {});
    BinningConfig binning;
    binning.state_bins = 8;
    binning.time_pool = 16;
    const DecompositionReport rep = estimate_decomposition(ens, binning);
    const ResidualMomentsReport same = residual_moments(ens, rep, 0.01);
    CHECK(std::fabs(same.mean) <= 1e-12);
    CHECK(std::fabs(same.second_moment - 1.0) <= 1e-10);

    // An independent run at the same scale is a real test and passes here.
    const Ensemble fresh = simulate_ensemble(spec, scale, 78, 1000, {});
    const ResidualMomentsReport indep = residual_moments(fresh, rep, 0.01);
    CHECK(indep.pass);
    CHECK(indep.cells_tested > 0);
}

TEST_CASE("multiple testing allowance follows the documented formula") {
    const double got = multiple_testing_allowance(0.01, 100);
    CHECK(got == doctest::Approx(0.01 * (1.0 + 3.0 * 0.01) * 2.0).epsilon(1e-12));
    CHECK_THROWS_AS(multiple_testing_allowance(0.0, 10), Error);
    CHECK_THROWS_AS(multiple_testing_allowance(0.5, 0), Error);
}
