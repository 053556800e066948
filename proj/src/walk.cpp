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

#include "qwalk/walk.hpp"

#include <cstdlib>
#include <thread>

#include "qwalk/format.hpp"
#include "qwalk/parallel.hpp"
#include "qwalk/stats.hpp"

namespace qwalk {

std::string SimulationError::format_at(double v) { return format_double(v); }

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("QWALK_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

Path simulate_path(const WalkSpec& spec, QuantumScale scale, std::uint64_t seed,
                   std::int64_t path_id) {
    if (path_id < 0) throw Error(errkind::invalid_value, "path_id must be >= 0");
    const CompiledWalk walk(spec, scale);
    Path path;
    path.scale = scale;
    path.seed = seed;
    path.path_id = path_id;
    path.values.reserve(static_cast<std::size_t>(scale.n_q) + 1);
    path.values.push_back(walk.draw_x0(seed, path_id));
    walk.run(seed, path_id, [&](const StepPoint& p) { path.values.push_back(p.x_next); });
    return path;
}

double quadratic_variation(const std::vector<double>& values) {
    if (values.size() < 2) throw Error(errkind::invalid_value, "quadratic variation needs >= 2 points");
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < values.size(); ++k) {
        const double d = values[k + 1] - values[k];
        acc += d * d;
    }
    return acc;
}

namespace {

struct BlockMoments {
    MomentAccumulator terminal;
    MomentAccumulator qv;
};

} // namespace

Ensemble::Ensemble(WalkSpec spec, QuantumScale scale, std::uint64_t seed, std::int64_t paths,
                   EnsembleOptions options)
    : spec_(std::move(spec)), scale_(scale), seed_(seed), paths_(paths),
      threads_(resolve_threads(options.threads)), walk_(spec_, scale) {
    if (paths_ < 1) throw Error(errkind::invalid_value, "ensemble needs paths >= 1");
    if (options.memory_budget_mb < 1) {
        throw Error(errkind::invalid_value, "memory budget must be >= 1 MB");
    }

    const std::int64_t points_per_path = scale_.n_q + 1;
    const std::int64_t budget_bytes = options.memory_budget_mb * (std::int64_t(1) << 20);
    const std::int64_t need_bytes = paths_ * points_per_path * std::int64_t(8);
    materialized_ = !options.force_stream && need_bytes <= budget_bytes;

    terminal_.resize(static_cast<std::size_t>(paths_));
    qv_.resize(static_cast<std::size_t>(paths_));
    if (materialized_) {
        storage_.resize(static_cast<std::size_t>(paths_ * points_per_path));
    }

    double* const storage = storage_.data();
    double* const terminal = terminal_.data();
    double* const qv = qv_.data();

    // Per-path scalars go straight into disjoint slots; only the moment
    // accumulators flow through the ordered reduction.
    auto make_block = [&](std::int64_t lo, std::int64_t hi) {
        BlockMoments block;
        for (std::int64_t pid = lo; pid < hi; ++pid) {
            double qv_acc = 0.0;
            double last = 0.0;
            if (materialized_) {
                double* const row = storage + pid * points_per_path;
                row[0] = walk_.draw_x0(seed_, pid);
                last = walk_.run(seed_, pid, [&](const StepPoint& p) {
                    row[p.k + 1] = p.x_next;
                    qv_acc += p.dx * p.dx;
                });
            } else {
                last = walk_.run(seed_, pid, [&](const StepPoint& p) { qv_acc += p.dx * p.dx; });
            }
            terminal[pid] = last;
            qv[pid] = qv_acc;
            block.terminal.add(last);
            block.qv.add(qv_acc);
        }
        return block;
    };
    auto merge = [](BlockMoments& acc, BlockMoments&& part) {
        acc.terminal.merge(part.terminal);
        acc.qv.merge(part.qv);
    };
    const BlockMoments total =
        ordered_block_reduce<BlockMoments>(paths_, threads_, BlockMoments{}, make_block, merge);

    summary_.paths = paths_;
    summary_.terminal_mean = total.terminal.mean();
    summary_.terminal_var = total.terminal.variance();
    summary_.terminal_m4 = total.terminal.central_moment4();
    summary_.qv_mean = total.qv.mean();
    summary_.qv_var = total.qv.variance();
}

const double* Ensemble::path_values(std::int64_t path_id) const {
    if (!materialized_) {
        throw Error(errkind::invalid_value, "ensemble paths are not materialized");
    }
    if (path_id < 0 || path_id >= paths_) {
        throw Error(errkind::invalid_value, "path_id outside ensemble");
    }
    return storage_.data() + path_id * (scale_.n_q + 1);
}

Ensemble simulate_ensemble(const WalkSpec& spec, QuantumScale scale, std::uint64_t seed,
                           std::int64_t paths, EnsembleOptions options) {
    return Ensemble(spec, scale, seed, paths, options);
}

void write_paths_csv(std::ostream& out, const Ensemble& ensemble) {
    out << "t,x,path_id\n";
    const std::int64_t n = ensemble.scale().n_q;
    const double n_d = static_cast<double>(n);
    std::string line;
    for (std::int64_t pid = 0; pid < ensemble.paths(); ++pid) {
        auto emit = [&](std::int64_t k, double x) {
            line.clear();
            line += format_double(static_cast<double>(k) / n_d);
            line += ',';
            line += format_double(x);
            line += ',';
            line += std::to_string(pid);
            line += '\n';
            out << line;
        };
        if (ensemble.materialized()) {
            const double* v = ensemble.path_values(pid);
            for (std::int64_t k = 0; k <= n; ++k) emit(k, v[k]);
        } else {
            emit(0, ensemble.compiled().draw_x0(ensemble.seed(), pid));
            ensemble.visit_path(pid, [&](const StepPoint& p) { emit(p.k + 1, p.x_next); });
        }
    }
}

} // namespace qwalk
