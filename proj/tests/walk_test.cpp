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
#include <sstream>
#include <string>
#include <vector>

#include "qwalk/error.hpp"
#include "qwalk/format.hpp"
#include "qwalk/sign_stream.hpp"
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

TEST_CASE("pure drift walk is the explicit Euler scheme, exact on dyadic grids") {
    // dt = 2^-k and all partial sums are dyadic, so no step rounds.
    const WalkSpec spec = parse_spec("1", "0");
    for (std::int64_t n : {256, 1024}) {
        const Path p = simulate_path(spec, make_scale(n), 7, 0);
        CHECK(p.values.back() == 1.0);
        CHECK(p.values[static_cast<std::size_t>(n / 2)] == 0.5);
    }
    // Non-dyadic dt accumulates one rounding per step, nothing more.
    const Path p = simulate_path(spec, make_scale(100), 7, 0);
    CHECK(p.values.back() == doctest::Approx(1.0).epsilon(1e-13));
}

TEST_CASE("quadratic variation of the unit walk is exactly one") {
    const WalkSpec spec = parse_spec("0", "1");
    for (std::int64_t n : {std::int64_t(1) << 8, std::int64_t(1) << 12}) {
        for (std::uint64_t seed : {0uLL, 1uLL, 42uLL}) {
            const Path p = simulate_path(spec, make_scale(n), seed, 3);
            // sqrt(dt) is a power of two here, so every step is exact.
            CHECK(quadratic_variation(p.values) == 1.0);
        }
    }
}

TEST_CASE("quadratic_variation sums squared increments") {
    CHECK(quadratic_variation({0.0, 1.0, 3.0}) == 5.0);
    CHECK(quadratic_variation({1.0, 1.0}) == 0.0);
    CHECK_THROWS_AS(quadratic_variation({2.0}), Error);
    CHECK_THROWS_AS(quadratic_variation({}), Error);
}

TEST_CASE("terminal value is sqrt(dt) times the sign sum, signs from the stream") {
    const WalkSpec spec = parse_spec("0", "1");
    const std::int64_t n = 256;
    const std::uint64_t seed = 99;
    const Path p = simulate_path(spec, make_scale(n), seed, 5);
    std::int64_t sum = 0;
    for (std::int64_t k = 0; k < n; ++k) {
        sum += sample_sign(seed, 5, static_cast<std::uint64_t>(k));
    }
    CHECK(p.values.back() == static_cast<double>(sum) * 0.0625); // sqrt(1/256)
}

TEST_CASE("scaling the volatility by two scales every path value by exactly two") {
    const WalkSpec one = parse_spec("0", "1");
    const WalkSpec two = parse_spec("0", "2");
    const Path p1 = simulate_path(one, make_scale(512), 11, 2);
    const Path p2 = simulate_path(two, make_scale(512), 11, 2);
    REQUIRE(p1.values.size() == p2.values.size());
    for (std::size_t k = 0; k < p1.values.size(); ++k) {
        CHECK(p2.values[k] == 2.0 * p1.values[k]);
    }
}

TEST_CASE("drift-only linear walk converges to e at first order") {
    const WalkSpec spec = parse_spec("x", "0", 1.0);
    auto terminal = [&](std::int64_t n) {
        return simulate_path(spec, make_scale(n), 0, 0).values.back();
    };
    const double e = std::exp(1.0);
    const double err_n = std::fabs(terminal(256) - e);
    const double err_2n = std::fabs(terminal(512) - e);
    CHECK(err_n / err_2n > 1.7);
    CHECK(err_n / err_2n < 2.3);
}

TEST_CASE("realized increments are the difference of consecutive stored values") {
    const WalkSpec spec = parse_spec("-x", "0.5", 0.25);
    const QuantumScale scale = make_scale(100);
    const Path p = simulate_path(spec, scale, 17, 4);

    CompiledWalk walk(spec, scale);
    std::size_t k = 0;
    walk.run(17, 4, [&](const StepPoint& s) {
        CHECK(s.x == p.values[k]);
        CHECK(s.x_next == p.values[k + 1]);
        CHECK(s.dx == p.values[k + 1] - p.values[k]);
        CHECK(s.t == grid_time(scale, static_cast<std::int64_t>(k)));
        ++k;
    });
    CHECK(k == 100);
}

TEST_CASE("uniform initial conditions draw from the reserved substream") {
    WalkSpec spec = parse_spec("0", "1");
    spec.x0 = X0Uniform{-2.0, -1.0};
    const QuantumScale scale = make_scale(64);

    const Path a = simulate_path(spec, scale, 3, 9);
    const Path b = simulate_path(spec, scale, 3, 9);
    CHECK(a.values[0] == b.values[0]);
    CHECK(a.values[0] >= -2.0);
    CHECK(a.values[0] < -1.0);

    // x0 must match the documented closed form of the reserved draw.
    const double u = uniform_draw(3, 9, 64);
    CHECK(a.values[0] == -2.0 + u * 1.0);

    // Different path ids draw different starting points.
    const Path c = simulate_path(spec, scale, 3, 10);
    CHECK(c.values[0] != a.values[0]);
}

TEST_CASE("running max volatility switch doubles increments after the crossing") {
    WalkSpec plain = parse_spec("0", "1");
    WalkSpec switched = parse_spec("0", "1");
    switched.running_max_vol = RunningMaxVol{-1.0, 2.0};
    switched.validate();

    // Threshold below x0: the switch is on from the first step, so the
    // whole path equals the sigma = 2 path bit for bit.
    const WalkSpec doubled = parse_spec("0", "2");
    const Path a = simulate_path(switched, make_scale(256), 5, 1);
    const Path b = simulate_path(doubled, make_scale(256), 5, 1);
    CHECK(a.values == b.values);

    // High threshold: never crossed, identical to the plain walk.
    switched.running_max_vol = RunningMaxVol{1e9, 2.0};
    const Path c = simulate_path(switched, make_scale(256), 5, 1);
    const Path d = simulate_path(plain, make_scale(256), 5, 1);
    CHECK(c.values == d.values);
}

TEST_CASE("evaluation failures surface as simulation errors with coordinates") {
    // sqrt goes negative at t > 0.5; every path fails at the same step.
    const WalkSpec spec = parse_spec("0", "sqrt(0.5 - t)");
    const QuantumScale scale = make_scale(64);
    try {
        simulate_path(spec, scale, 1, 23);
        FAIL("expected a simulation error");
    } catch (const SimulationError& e) {
        CHECK(std::string(e.kind()) == errkind::simulation_error);
        CHECK(e.cause_kind() == errkind::sqrt_of_negative);
        CHECK(e.path_id() == 23);
        CHECK(e.step() == 33); // first k with k/64 > 0.5
    }

    // Ensembles rethrow the failure of the lowest failing path id.
    try {
        simulate_ensemble(spec, scale, 1, 10, {});
        FAIL("expected a simulation error");
    } catch (const SimulationError& e) {
        CHECK(e.path_id() == 0);
    }
}

TEST_CASE("non-finite states are reported as simulation errors") {
    const WalkSpec spec = parse_spec("exp(x)", "0", 1.0);
    try {
        simulate_path(spec, make_scale(16), 0, 0);
        FAIL("expected a simulation error");
    } catch (const SimulationError& e) {
        CHECK((e.cause_kind() == errkind::non_finite_result));
    }
}

TEST_CASE("ensembles are identical for any thread count and either storage mode") {
    const WalkSpec spec = parse_spec("-x", "0.5", 0.1);
    const QuantumScale scale = make_scale(128);

    EnsembleOptions opt1;
    opt1.threads = 1;
    const Ensemble e1 = simulate_ensemble(spec, scale, 21, 300, opt1);

    EnsembleOptions opt4;
    opt4.threads = 4;
    const Ensemble e4 = simulate_ensemble(spec, scale, 21, 300, opt4);

    CHECK(e1.summary().terminal_mean == e4.summary().terminal_mean);
    CHECK(e1.summary().terminal_var == e4.summary().terminal_var);
    CHECK(e1.summary().terminal_m4 == e4.summary().terminal_m4);
    CHECK(e1.summary().qv_mean == e4.summary().qv_mean);
    CHECK(e1.summary().qv_var == e4.summary().qv_var);
    CHECK(e1.terminal_values() == e4.terminal_values());
    CHECK(e1.quadratic_variations() == e4.quadratic_variations());

    EnsembleOptions streamed = opt4;
    streamed.force_stream = true;
    const Ensemble es = simulate_ensemble(spec, scale, 21, 300, streamed);
    CHECK(!es.materialized());
    CHECK(es.terminal_values() == e1.terminal_values());
    CHECK(es.quadratic_variations() == e1.quadratic_variations());
}

TEST_CASE("visit_path replays exactly what was stored") {
    const WalkSpec spec = parse_spec("-x", "1", 0.5);
    const Ensemble e = simulate_ensemble(spec, make_scale(64), 8, 10, {});
    REQUIRE(e.materialized());
    for (std::int64_t pid : {std::int64_t(0), std::int64_t(7)}) {
        const double* stored = e.path_values(pid);
        std::size_t k = 0;
        e.visit_path(pid, [&](const StepPoint& s) {
            CHECK(s.x == stored[k]);
            CHECK(s.x_next == stored[k + 1]);
            ++k;
        });
        CHECK(k == 64);
    }
}

TEST_CASE("memory budget controls materialization") {
    const WalkSpec spec = parse_spec("0", "1");
    EnsembleOptions tiny;
    tiny.memory_budget_mb = 1; // 200 * 1025 points need ~1.6 MiB
    const Ensemble e = simulate_ensemble(spec, make_scale(1024), 1, 200, tiny);
    CHECK(!e.materialized());
    try {
        e.path_values(0);
        FAIL("expected an error");
    } catch (const Error& err) {
        CHECK(std::string(err.kind()) == errkind::invalid_value);
    }
    // Summaries are still collected while streaming.
    CHECK(e.summary().paths == 200);
    CHECK(e.summary().qv_mean == 1.0);
}

TEST_CASE("csv dump format is stable and re-derivable from the stream") {
    const WalkSpec spec = parse_spec("0", "1");
    const QuantumScale scale = make_scale(4);
    const std::uint64_t seed = 6;
    const Ensemble e = simulate_ensemble(spec, scale, seed, 2, {});
    std::ostringstream got;
    write_paths_csv(got, e);

    std::ostringstream want;
    want << "t,x,path_id\n";
    for (std::int64_t pid = 0; pid < 2; ++pid) {
        double x = 0.0;
        want << "0,0," << pid << "\n";
        for (std::int64_t k = 0; k < 4; ++k) {
            const double dx_raw =
                0.5 * static_cast<double>(sample_sign(seed, static_cast<std::uint64_t>(pid),
                                                      static_cast<std::uint64_t>(k)));
            x = x + dx_raw;
            want << format_double(static_cast<double>(k + 1) / 4.0) << "," << format_double(x)
                 << "," << pid << "\n";
        }
    }
    CHECK(got.str() == want.str());
}

TEST_CASE("ensemble paths count must be positive") {
    const WalkSpec spec = parse_spec("0", "1");
    CHECK_THROWS_AS(simulate_ensemble(spec, make_scale(8), 0, 0, {}), Error);
}
