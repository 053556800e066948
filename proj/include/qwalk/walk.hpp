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

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "qwalk/error.hpp"
#include "qwalk/expr.hpp"
#include "qwalk/scale.hpp"
#include "qwalk/sign_stream.hpp"
#include "qwalk/walk_spec.hpp"

namespace qwalk {

// One realized step. `dx` is the increment actually taken by the stored
// path, i.e. x_next - x after rounding, so visitors on a live run and
// re-reads of a materialized path see bit-identical values.
struct StepPoint {
    std::int64_t k = 0;
    double t = 0.0;
    double x = 0.0;
    double drift = 0.0;   // b(t, x)
    double vol = 0.0;     // effective volatility after any history switch
    int sign = 0;         // +1 / -1
    double dx = 0.0;
    double x_next = 0.0;
};

class SimulationError : public Error {
public:
    SimulationError(std::int64_t path_id, std::int64_t step, double t, double x,
                    const std::string& kind, const std::string& detail)
        : Error(errkind::simulation_error,
                detail + " (" + kind + ") at path " + std::to_string(path_id) + ", step " +
                    std::to_string(step),
                "path=" + std::to_string(path_id) + ",step=" + std::to_string(step) + ",t=" +
                    format_at(t) + ",x=" + format_at(x)),
          path_id_(path_id), step_(step), cause_kind_(kind) {}

    std::int64_t path_id() const noexcept { return path_id_; }
    std::int64_t step() const noexcept { return step_; }
    const std::string& cause_kind() const noexcept { return cause_kind_; }

private:
    static std::string format_at(double v);
    std::int64_t path_id_;
    std::int64_t step_;
    std::string cause_kind_;
};

// A walk spec bound to a scale: expressions compiled, step constants
// precomputed. Immutable and shareable across threads.
class CompiledWalk {
public:
    CompiledWalk(const WalkSpec& spec, QuantumScale scale)
        : scale_(scale), sqrt_dt_(std::sqrt(scale.delta_t)),
          drift_(compile_expr(spec.drift, spec.params)),
          vol_(compile_expr(spec.volatility, spec.params)), x0_(spec.x0) {
        spec.validate();
        if (spec.running_max_vol) {
            has_switch_ = true;
            switch_threshold_ = spec.running_max_vol->threshold;
            switch_factor_ = spec.running_max_vol->factor;
        }
    }

    const QuantumScale& scale() const noexcept { return scale_; }

    // Initial condition; the uniform variant burns the reserved counter
    // index n_q so it never collides with the per-step sign draws.
    double draw_x0(std::uint64_t seed, std::int64_t path_id) const {
        if (const auto* u = std::get_if<X0Uniform>(&x0_)) {
            const double unit =
                uniform_draw(seed, static_cast<std::uint64_t>(path_id),
                             static_cast<std::uint64_t>(scale_.n_q));
            return u->lo + unit * (u->hi - u->lo);
        }
        return std::get<X0Point>(x0_).value;
    }

    // Runs one path, invoking visit(const StepPoint&) per step; returns the
    // terminal value. Deterministic in (seed, path_id) alone.
    template <class Visitor>
    double run(std::uint64_t seed, std::int64_t path_id, Visitor&& visit) const {
        const std::int64_t n = scale_.n_q;
        const double dt = scale_.delta_t;
        const double n_d = static_cast<double>(n);
        const auto pid = static_cast<std::uint64_t>(path_id);

        double x = draw_x0(seed, path_id);
        double running_max = x;
        StepPoint p;
        for (std::int64_t k = 0; k < n; ++k) {
            // k / n, not k * (1/n): the division is correctly rounded, so
            // grid times here match grid_time() bit for bit.
            const double t = static_cast<double>(k) / n_d;
            double b, s;
            try {
                b = drift_.eval(t, x);
                s = vol_.eval(t, x);
            } catch (const Error& e) {
                throw SimulationError(path_id, k, t, x, e.kind(), e.what());
            }
            if (has_switch_ && running_max > switch_threshold_) s *= switch_factor_;
            const int sign = sample_sign(seed, pid, static_cast<std::uint64_t>(k));
            const double x_next = x + (b * dt + s * static_cast<double>(sign) * sqrt_dt_);
            if (!std::isfinite(x_next)) {
                throw SimulationError(path_id, k, t, x, errkind::non_finite_result,
                                      "path value became non-finite");
            }
            p.k = k;
            p.t = t;
            p.x = x;
            p.drift = b;
            p.vol = s;
            p.sign = sign;
            p.dx = x_next - x;
            p.x_next = x_next;
            visit(p);
            x = x_next;
            if (x > running_max) running_max = x;
        }
        return x;
    }

private:
    QuantumScale scale_;
    double sqrt_dt_;
    CompiledExpr drift_;
    CompiledExpr vol_;
    X0 x0_;
    bool has_switch_ = false;
    double switch_threshold_ = 0.0;
    double switch_factor_ = 1.0;
};

struct Path {
    QuantumScale scale;
    std::uint64_t seed = 0;
    std::int64_t path_id = 0;
    std::vector<double> values; // n_q + 1 points, values[k] = x(t_k)
};

Path simulate_path(const WalkSpec& spec, QuantumScale scale, std::uint64_t seed,
                   std::int64_t path_id);

// Sum of squared realized increments. Plain left-to-right accumulation;
// identical for streamed and materialized paths by the StepPoint contract.
double quadratic_variation(const std::vector<double>& values);

struct EnsembleSummary {
    std::int64_t paths = 0;
    double terminal_mean = 0.0;
    double terminal_var = 0.0;
    double terminal_m4 = 0.0;
    double qv_mean = 0.0;
    double qv_var = 0.0;
};

struct EnsembleOptions {
    int threads = 0;                  // 0: resolve from env / hardware
    std::int64_t memory_budget_mb = 512;
    bool force_stream = false;        // test hook: never materialize
};

// A simulated family of paths. Terminal values and quadratic variations are
// always collected per path; full paths are kept only when they fit the
// memory budget. Streamed consumers re-run paths on demand; by the
// determinism contract both views agree bit for bit.
class Ensemble {
public:
    Ensemble(WalkSpec spec, QuantumScale scale, std::uint64_t seed, std::int64_t paths,
             EnsembleOptions options);

    const WalkSpec& spec() const noexcept { return spec_; }
    const QuantumScale& scale() const noexcept { return scale_; }
    std::uint64_t seed() const noexcept { return seed_; }
    std::int64_t paths() const noexcept { return paths_; }
    int threads() const noexcept { return threads_; }
    bool materialized() const noexcept { return materialized_; }
    const EnsembleSummary& summary() const noexcept { return summary_; }
    const std::vector<double>& terminal_values() const noexcept { return terminal_; }
    const std::vector<double>& quadratic_variations() const noexcept { return qv_; }
    const CompiledWalk& compiled() const noexcept { return walk_; }

    // values[k] for one stored path; requires materialized().
    const double* path_values(std::int64_t path_id) const;

    // Visits every step of one path by deterministic re-simulation; agrees
    // bit for bit with any stored values (the replay is the same pure
    // function of (seed, path_id) that produced them).
    template <class Visitor>
    void visit_path(std::int64_t path_id, Visitor&& visit) const {
        walk_.run(seed_, path_id, visit);
    }

private:
    WalkSpec spec_;
    QuantumScale scale_;
    std::uint64_t seed_;
    std::int64_t paths_;
    int threads_;
    CompiledWalk walk_;
    bool materialized_ = false;
    std::vector<double> storage_;   // paths * (n_q + 1) when materialized
    std::vector<double> terminal_;
    std::vector<double> qv_;
    EnsembleSummary summary_;
};

Ensemble simulate_ensemble(const WalkSpec& spec, QuantumScale scale, std::uint64_t seed,
                           std::int64_t paths, EnsembleOptions options = {});

// CSV dump, header "t,x,path_id", path-major then time-minor, shortest
// round-trip numbers.
void write_paths_csv(std::ostream& out, const Ensemble& ensemble);

} // namespace qwalk
