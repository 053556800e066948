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

#include "qwalk/cli.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "qwalk/diffusion.hpp"
#include "qwalk/equivalence.hpp"
#include "qwalk/error.hpp"
#include "qwalk/estimators.hpp"
#include "qwalk/format.hpp"
#include "qwalk/manifest.hpp"
#include "qwalk/markov.hpp"
#include "qwalk/parallel.hpp"
#include "qwalk/report_json.hpp"
#include "qwalk/scale.hpp"
#include "qwalk/sign_stream.hpp"
#include "qwalk/walk.hpp"
#include "qwalk/walk_spec.hpp"

namespace qwalk {

namespace {

using nlohmann::json;

void print_error_json(const std::string& kind, const std::string& detail, const std::string& at) {
    json err{{"kind", kind}, {"detail", detail}};
    if (!at.empty()) err["at"] = at;
    std::cerr << err.dump() << "\n";
}

// Tolerance policy layering: scale defaults, then the spec's own policy,
// then individual CLI overrides. Validated after layering.
struct PolicyFlags {
    std::optional<double> infinitesimal_cut;
    std::optional<double> appreciable_low;
    std::optional<double> appreciable_high;
    std::optional<double> limited_cut;
};

void add_policy_flags(CLI::App* cmd, PolicyFlags& flags) {
    cmd->add_option("--infinitesimal-cut", flags.infinitesimal_cut,
                    "Override the infinitesimal band cut");
    cmd->add_option("--appreciable-low", flags.appreciable_low,
                    "Override the appreciable band lower edge");
    cmd->add_option("--appreciable-high", flags.appreciable_high,
                    "Override the appreciable band upper edge");
    cmd->add_option("--limited-cut", flags.limited_cut, "Override the limited band cut");
}

TolerancePolicy resolve_policy(const QuantumScale& scale, const WalkSpec& spec,
                               const PolicyFlags& flags) {
    TolerancePolicy policy =
        spec.tolerance_policy ? *spec.tolerance_policy : default_policy(scale);
    if (flags.infinitesimal_cut) policy.infinitesimal_cut = *flags.infinitesimal_cut;
    if (flags.appreciable_low) policy.appreciable_low = *flags.appreciable_low;
    if (flags.appreciable_high) policy.appreciable_high = *flags.appreciable_high;
    if (flags.limited_cut) policy.limited_cut = *flags.limited_cut;
    policy.validate();
    return policy;
}

struct OutputSink {
    std::vector<std::string> command;
    std::optional<std::string> out_dir;
    std::chrono::steady_clock::time_point started = std::chrono::steady_clock::now();

    void write(const std::string& name, const std::string& content) const {
        namespace fs = std::filesystem;
        std::error_code ec;
        fs::create_directories(*out_dir, ec);
        if (ec) {
            throw Error(errkind::io_error, "cannot create output directory: " + ec.message(),
                        *out_dir);
        }
        atomic_write_file((fs::path(*out_dir) / name).string(), content);
    }

    // Emits the report to stdout and, when an output directory was given,
    // writes report.json (or a caller-chosen name) plus manifest.json.
    void emit(const json& report, RunManifest manifest,
              const std::string& report_name = "report.json") const {
        const std::string text = report.dump(2) + "\n";
        std::cout << text;
        if (!out_dir) return;
        write(report_name, text);
        manifest.command = command;
        manifest.duration_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        write("manifest.json", manifest_to_json(manifest).dump(2) + "\n");
    }
};

struct SpecArgs {
    std::string spec_path;
    std::int64_t n_q = 0;
    std::int64_t paths = 0;
    std::uint64_t seed = 0;
    int threads = 0;
    std::int64_t memory_budget_mb = 512;
};

void add_spec_args(CLI::App* cmd, SpecArgs& args, std::int64_t default_nq,
                   std::int64_t default_paths) {
    cmd->add_option("--spec", args.spec_path, "Walk spec JSON file")->required();
    args.n_q = default_nq;
    args.paths = default_paths;
    cmd->add_option("--nq", args.n_q, "Grid steps per unit time")->capture_default_str();
    cmd->add_option("--paths", args.paths, "Number of paths")->capture_default_str();
    cmd->add_option("--seed", args.seed, "Ensemble seed")->capture_default_str();
    cmd->add_option("--threads", args.threads,
                    "Worker threads (0: QWALK_THREADS env, then hardware)");
    cmd->add_option("--memory-budget", args.memory_budget_mb,
                    "Path storage budget in MiB before streaming")
        ->capture_default_str();
}

struct LoadedRun {
    WalkSpec spec;
    QuantumScale scale;
    std::string spec_hash;
};

LoadedRun load_run(const SpecArgs& args) {
    LoadedRun run{load_spec_file(args.spec_path), make_scale(args.n_q), {}};
    run.spec_hash = spec_hash_hex(spec_to_json(run.spec));
    return run;
}

RunManifest make_manifest(const SpecArgs& args, const LoadedRun& run) {
    RunManifest m;
    m.spec_hash = run.spec_hash;
    m.seed = args.seed;
    m.n_q = run.scale.n_q;
    m.paths = args.paths;
    m.threads = resolve_threads(args.threads);
    return m;
}

Ensemble make_ensemble(const SpecArgs& args, const LoadedRun& run) {
    EnsembleOptions options;
    options.threads = args.threads;
    options.memory_budget_mb = args.memory_budget_mb;
    return simulate_ensemble(run.spec, run.scale, args.seed, args.paths, options);
}

double parse_double_or(const std::string& text, const char* what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) throw std::invalid_argument(text);
        return v;
    } catch (const std::exception&) {
        throw Error(errkind::config_error, std::string("cannot parse ") + what + ": " + text);
    }
}

Range parse_range_arg(const std::string& text, const char* what) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        throw Error(errkind::config_error,
                    std::string(what) + " must be lo:hi, got: " + text);
    }
    Range r{parse_double_or(text.substr(0, colon), what),
            parse_double_or(text.substr(colon + 1), what)};
    if (!(r.lo < r.hi)) {
        throw Error(errkind::config_error, std::string(what) + " needs lo < hi, got: " + text);
    }
    return r;
}

std::vector<std::int64_t> parse_nq_ladder(const std::string& text) {
    std::vector<std::int64_t> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t comma = std::min(text.find(',', pos), text.size());
        const std::string part = text.substr(pos, comma - pos);
        try {
            std::size_t used = 0;
            out.push_back(std::stoll(part, &used));
            if (used != part.size()) throw std::invalid_argument(part);
        } catch (const std::exception&) {
            throw Error(errkind::config_error, "cannot parse --nq-ladder entry: " + part);
        }
        pos = comma + 1;
        if (comma == text.size()) break;
    }
    return out;
}

int cmd_simulate(const SpecArgs& args, const OutputSink& sink) {
    const LoadedRun run = load_run(args);
    const Ensemble ensemble = make_ensemble(args, run);

    std::ostringstream csv;
    write_paths_csv(csv, ensemble);
    sink.write("paths.csv", csv.str());
    sink.write("summary.json",
               summary_json(ensemble.summary(), args.seed, run.scale.n_q).dump(2) + "\n");

    RunManifest manifest = make_manifest(args, run);
    manifest.command = sink.command;
    manifest.duration_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - sink.started).count();
    sink.write("manifest.json", manifest_to_json(manifest).dump(2) + "\n");
    return kExitPass;
}

int cmd_verify_heisenberg(const SpecArgs& args, const PolicyFlags& flags,
                          const std::optional<double>& hbar_over_m, const OutputSink& sink) {
    const LoadedRun run = load_run(args);
    const TolerancePolicy policy = resolve_policy(run.scale, run.spec, flags);
    const Ensemble ensemble = make_ensemble(args, run);
    const EnsembleHeisenbergReport report = heisenberg_check(ensemble, policy);

    json out{{"policy", report_json(policy)}, {"heisenberg", report_json(report)}};
    bool pass = report.pass;
    if (hbar_over_m) {
        const Path path = simulate_path(run.spec, run.scale, args.seed, 0);
        const PhysicalScaleReport phys = physical_scale_check(path, *hbar_over_m, policy);
        out["physical_scale"] = report_json(phys);
        pass = pass && phys.pass;
    }
    out["pass"] = pass;
    sink.emit(out, make_manifest(args, run));
    return pass ? kExitPass : kExitFail;
}

int cmd_verify_equiprobability(std::uint64_t seed, std::int64_t draws, int lags, double alpha,
                               const OutputSink& sink) {
    if (draws < 1000) {
        throw Error(errkind::config_error, "--draws must be at least 1000");
    }
    std::vector<signed char> signs;
    signs.reserve(static_cast<std::size_t>(draws));
    for (std::int64_t k = 0; k < draws; ++k) {
        signs.push_back(static_cast<signed char>(
            sample_sign(seed, 0, static_cast<std::uint64_t>(k))));
    }
    const EquiprobabilityReport report = equiprobability_test(signs, alpha, lags);

    RunManifest manifest;
    manifest.seed = seed;
    manifest.paths = 1;
    manifest.n_q = draws;
    manifest.threads = 1;
    sink.emit(report_json(report), manifest);
    return report.pass ? kExitPass : kExitFail;
}

int cmd_verify_decomposition(const SpecArgs& args, const BinningConfig& binning, double alpha,
                             const OutputSink& sink) {
    const LoadedRun run = load_run(args);
    const Ensemble ensemble = make_ensemble(args, run);
    const DecompositionReport report = estimate_decomposition(ensemble, binning);
    const DecompositionCheck check = check_decomposition(ensemble, report, alpha);

    json out{{"decomposition", report_json(report)},
             {"check", report_json(check)},
             {"pass", check.pass}};
    sink.emit(out, make_manifest(args, run));
    return check.pass ? kExitPass : kExitFail;
}

int cmd_verify_markov(const SpecArgs& args, const std::string& past_text, double t_probe,
                      int state_bins, double alpha, const OutputSink& sink) {
    const PastFunctional past = parse_past_functional(past_text);
    const LoadedRun run = load_run(args);
    const Ensemble ensemble = make_ensemble(args, run);
    const MarkovReport report = markov_test(ensemble, past, t_probe, state_bins, alpha);

    sink.emit(report_json(report), make_manifest(args, run));
    if (report.unreliable) return kExitUnreliable;
    return report.pass ? kExitPass : kExitFail;
}

int cmd_verify_diffusion(const SpecArgs& args, const PolicyFlags& flags, const std::string& ref,
                         const std::string& nq_ladder, double ks_tol, double z,
                         const std::string& t_range, const std::string& x_range,
                         std::int64_t grid_n, const OutputSink& sink) {
    const LoadedRun run = load_run(args);
    const ReferenceLaw law = parse_reference_law(ref);

    DomainConfig domain;
    domain.t_range = parse_range_arg(t_range, "--t-range");
    domain.x_range = parse_range_arg(x_range, "--x-range");
    domain.grid_n = grid_n;
    const TolerancePolicy policy = resolve_policy(run.scale, run.spec, flags);
    const DiffusionChecklist checklist = diffusion_checklist(run.spec, domain, policy);

    WeakConvergenceConfig config;
    config.nq_ladder = parse_nq_ladder(nq_ladder);
    config.paths = args.paths;
    config.seed = args.seed;
    config.ks_tol = ks_tol;
    config.z = z;
    config.threads = args.threads;
    config.memory_budget_mb = args.memory_budget_mb;
    const WeakConvergenceReport weak = weak_convergence_test(run.spec, law, config);

    const bool pass = checklist.overall && weak.pass;
    json out{{"checklist", report_json(checklist)},
             {"weak_convergence", report_json(weak)},
             {"pass", pass}};
    RunManifest manifest = make_manifest(args, run);
    manifest.n_q = config.nq_ladder.empty() ? 0 : config.nq_ladder.back();
    sink.emit(out, manifest);
    return pass ? kExitPass : kExitFail;
}

int cmd_dimension(const SpecArgs& args, const std::string& lambda_text, const OutputSink& sink) {
    const LoadedRun run = load_run(args);
    const std::vector<double> ladder = parse_lambda_ladder(lambda_text);
    const Ensemble ensemble = make_ensemble(args, run);
    const DimensionReport report = fractal_dimension(ensemble, ladder);

    if (sink.out_dir) {
        std::ostringstream csv;
        csv << "lambda,coarse_length\n";
        for (const DimensionRung& rung : report.rungs) {
            csv << format_double(rung.lambda) << "," << format_double(rung.coarse_length) << "\n";
        }
        sink.write("curve.csv", csv.str());
    }
    sink.emit(report_json(report), make_manifest(args, run));
    return kExitPass;
}

int cmd_equivalence(const std::string& spec_a_path, const std::string& spec_b_path,
                    std::int64_t n_q, std::optional<std::int64_t> nq_a,
                    std::optional<std::int64_t> nq_b, std::uint64_t seed, std::int64_t paths,
                    int threads, const OutputSink& sink) {
    const WalkSpec spec_a = load_spec_file(spec_a_path);
    const WalkSpec spec_b = load_spec_file(spec_b_path);
    const QuantumScale scale_a = make_scale(nq_a.value_or(n_q));
    const QuantumScale scale_b = make_scale(nq_b.value_or(n_q));
    const EquivalenceReport report =
        coupled_distance(spec_a, scale_a, spec_b, scale_b, seed, paths, threads);

    RunManifest manifest;
    manifest.spec_hash = spec_hash_hex(spec_to_json(spec_a));
    manifest.spec_hash_b = spec_hash_hex(spec_to_json(spec_b));
    manifest.seed = seed;
    manifest.n_q = scale_a.n_q;
    manifest.paths = paths;
    manifest.threads = resolve_threads(threads);
    sink.emit(report_json(report), manifest);
    return report.pass ? kExitPass : kExitFail;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Infinitesimal random walk simulator and verifier"};
    app.require_subcommand(1);

    auto sink = std::make_shared<OutputSink>();
    sink->command.assign(argv, argv + argc);
    std::optional<std::string> out_dir;

    std::function<int()> action;

    // simulate
    {
        auto args = std::make_shared<SpecArgs>();
        CLI::App* cmd = app.add_subcommand("simulate", "Simulate an ensemble and write artifacts");
        add_spec_args(cmd, *args, 1024, 100);
        cmd->add_option("--out", out_dir, "Output directory")->required();
        cmd->callback([&action, args, sink] {
            action = [args, sink] { return cmd_simulate(*args, *sink); };
        });
    }

    CLI::App* verify = app.add_subcommand("verify", "Run a statistical verification");
    verify->require_subcommand(1);

    // verify heisenberg
    {
        auto args = std::make_shared<SpecArgs>();
        auto flags = std::make_shared<PolicyFlags>();
        auto hbar_over_m = std::make_shared<std::optional<double>>();
        CLI::App* cmd = verify->add_subcommand(
            "heisenberg", "Check that squared increments per unit time are never negligible");
        add_spec_args(cmd, *args, 4096, 100);
        add_policy_flags(cmd, *flags);
        cmd->add_option("--hbar-over-m", *hbar_over_m,
                        "Also check the ratio against a reference action per mass");
        cmd->add_option("--out", out_dir, "Output directory for report + manifest");
        cmd->callback([&action, args, flags, hbar_over_m, sink] {
            action = [args, flags, hbar_over_m, sink] {
                return cmd_verify_heisenberg(*args, *flags, *hbar_over_m, *sink);
            };
        });
    }

    // verify equiprobability
    {
        auto seed = std::make_shared<std::uint64_t>(0);
        auto draws = std::make_shared<std::int64_t>(1000000);
        auto lags = std::make_shared<int>(8);
        auto alpha = std::make_shared<double>(0.001);
        CLI::App* cmd = verify->add_subcommand("equiprobability",
                                               "Test the sign stream for bias and correlation");
        cmd->add_option("--seed", *seed, "Stream seed")->capture_default_str();
        cmd->add_option("--draws", *draws, "Number of signs to draw")->capture_default_str();
        cmd->add_option("--lags", *lags, "Autocorrelation lags to test")->capture_default_str();
        cmd->add_option("--alpha", *alpha, "Two-sided test level")->capture_default_str();
        cmd->add_option("--out", out_dir, "Output directory for report + manifest");
        cmd->callback([&action, seed, draws, lags, alpha, sink] {
            action = [seed, draws, lags, alpha, sink] {
                return cmd_verify_equiprobability(*seed, *draws, *lags, *alpha, *sink);
            };
        });
    }

    // verify decomposition
    {
        auto args = std::make_shared<SpecArgs>();
        auto binning = std::make_shared<BinningConfig>();
        auto alpha = std::make_shared<double>(0.01);
        CLI::App* cmd = verify->add_subcommand(
            "decomposition", "Recover drift and volatility from binned increments");
        add_spec_args(cmd, *args, 1000, 100000);
        cmd->add_option("--state-bins", binning->state_bins, "State bins per time bin")
            ->capture_default_str();
        cmd->add_option("--time-pool", binning->time_pool, "Grid steps pooled per time bin")
            ->capture_default_str();
        cmd->add_option("--min-cell", binning->min_cell_count, "Reliable cell count threshold")
            ->capture_default_str();
        cmd->add_option("--alpha", *alpha, "Per-cell test level")->capture_default_str();
        cmd->add_option("--out", out_dir, "Output directory for report + manifest");
        cmd->callback([&action, args, binning, alpha, sink] {
            action = [args, binning, alpha, sink] {
                return cmd_verify_decomposition(*args, *binning, *alpha, *sink);
            };
        });
    }

    // verify markov
    {
        auto args = std::make_shared<SpecArgs>();
        auto t_probe = std::make_shared<double>(0.5);
        auto past = std::make_shared<std::string>();
        auto state_bins = std::make_shared<int>(8);
        auto alpha = std::make_shared<double>(0.01);
        CLI::App* cmd = verify->add_subcommand(
            "markov", "Test the next increment for dependence on a past functional");
        add_spec_args(cmd, *args, 4096, 100000);
        cmd->add_option("--t", *t_probe, "Probe time in (0, 1)")->capture_default_str();
        cmd->add_option("--past", *past, "Past functional: lagged-sign:K or running-max:T")
            ->required();
        cmd->add_option("--state-bins", *state_bins, "Present-state strata")
            ->capture_default_str();
        cmd->add_option("--alpha", *alpha, "Family test level")->capture_default_str();
        cmd->add_option("--out", out_dir, "Output directory for report + manifest");
        cmd->callback([&action, args, t_probe, past, state_bins, alpha, sink] {
            action = [args, t_probe, past, state_bins, alpha, sink] {
                return cmd_verify_markov(*args, *past, *t_probe, *state_bins, *alpha, *sink);
            };
        });
    }

    // verify diffusion
    {
        auto args = std::make_shared<SpecArgs>();
        auto flags = std::make_shared<PolicyFlags>();
        auto ref = std::make_shared<std::string>();
        auto nq_ladder = std::make_shared<std::string>("256,1024,4096");
        auto ks_tol = std::make_shared<double>(0.0075);
        auto z = std::make_shared<double>(3.0);
        auto t_range = std::make_shared<std::string>("0:1");
        auto x_range = std::make_shared<std::string>("-3:3");
        auto grid_n = std::make_shared<std::int64_t>(64);
        CLI::App* cmd = verify->add_subcommand(
            "diffusion", "Coefficient checklist plus weak convergence to a reference law");
        add_spec_args(cmd, *args, 4096, 100000);
        add_policy_flags(cmd, *flags);
        cmd->add_option("--ref", *ref, "Reference law: brownian:SIGMA or ou:THETA:SIGMA")
            ->required();
        cmd->add_option("--nq-ladder", *nq_ladder, "Comma-separated increasing grid sizes")
            ->capture_default_str();
        cmd->add_option("--ks-tol", *ks_tol, "Final KS distance tolerance")
            ->capture_default_str();
        cmd->add_option("--z", *z, "Moment error budget in standard errors")
            ->capture_default_str();
        cmd->add_option("--t-range", *t_range, "Checklist time box lo:hi")->capture_default_str();
        cmd->add_option("--x-range", *x_range, "Checklist state box lo:hi")
            ->capture_default_str();
        cmd->add_option("--grid-n", *grid_n, "Checklist grid points per axis")
            ->capture_default_str();
        cmd->add_option("--out", out_dir, "Output directory for report + manifest");
        cmd->callback([&action, args, flags, ref, nq_ladder, ks_tol, z, t_range, x_range, grid_n,
                       sink] {
            action = [args, flags, ref, nq_ladder, ks_tol, z, t_range, x_range, grid_n, sink] {
                return cmd_verify_diffusion(*args, *flags, *ref, *nq_ladder, *ks_tol, *z, *t_range,
                                            *x_range, *grid_n, *sink);
            };
        });
    }

    // dimension
    {
        auto args = std::make_shared<SpecArgs>();
        auto lambda = std::make_shared<std::string>();
        CLI::App* cmd = app.add_subcommand(
            "dimension", "Estimate the coarse-grained dimension of sample paths");
        add_spec_args(cmd, *args, 1048576, 32);
        cmd->add_option("--lambda", *lambda, "Resolution ladder lo:hi:count (geometric)")
            ->required();
        cmd->add_option("--out", out_dir, "Output directory for report, curve CSV, manifest");
        cmd->callback([&action, args, lambda, sink] {
            action = [args, lambda, sink] { return cmd_dimension(*args, *lambda, *sink); };
        });
    }

    // equivalence
    {
        auto spec_a = std::make_shared<std::string>();
        auto spec_b = std::make_shared<std::string>();
        auto n_q = std::make_shared<std::int64_t>(4096);
        auto nq_a = std::make_shared<std::optional<std::int64_t>>();
        auto nq_b = std::make_shared<std::optional<std::int64_t>>();
        auto seed = std::make_shared<std::uint64_t>(0);
        auto paths = std::make_shared<std::int64_t>(1000);
        auto threads = std::make_shared<int>(0);
        CLI::App* cmd = app.add_subcommand(
            "equivalence", "Couple two specs on the same signs and bound their distance");
        cmd->add_option("--spec-a", *spec_a, "First walk spec JSON file")->required();
        cmd->add_option("--spec-b", *spec_b, "Second walk spec JSON file")->required();
        cmd->add_option("--nq", *n_q, "Grid steps for both runs")->capture_default_str();
        cmd->add_option("--nq-a", *nq_a, "Grid steps for the first run only");
        cmd->add_option("--nq-b", *nq_b, "Grid steps for the second run only");
        cmd->add_option("--seed", *seed, "Coupled ensemble seed")->capture_default_str();
        cmd->add_option("--paths", *paths, "Number of coupled paths")->capture_default_str();
        cmd->add_option("--threads", *threads,
                        "Worker threads (0: QWALK_THREADS env, then hardware)");
        cmd->add_option("--out", out_dir, "Output directory for report + manifest");
        cmd->callback([&action, spec_a, spec_b, n_q, nq_a, nq_b, seed, paths, threads, sink] {
            action = [spec_a, spec_b, n_q, nq_a, nq_b, seed, paths, threads, sink] {
                return cmd_equivalence(*spec_a, *spec_b, *n_q, *nq_a, *nq_b, *seed, *paths,
                                       *threads, *sink);
            };
        });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        print_error_json(errkind::config_error, e.what(), "");
        return kExitError;
    }

    sink->out_dir = out_dir;
    try {
        return action();
    } catch (const Error& e) {
        print_error_json(e.kind(), e.what(), e.at());
        return kExitError;
    } catch (const std::exception& e) {
        print_error_json(errkind::internal_error, e.what(), "");
        return kExitError;
    }
}

} // namespace qwalk
