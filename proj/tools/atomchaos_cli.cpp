// Copyright 2026 The atomchaos Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Batch driver: atomchaos simulate|sweep|lyapunov|analytic|cloud
//                 --config <file> --out <dir> [--seed N] [--threads N]

#include <chrono>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "atomchaos.hpp"

namespace fs = std::filesystem;
using namespace atomchaos;

namespace {

struct CommonOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;
    bool hamiltonian = false;
};

class Stopwatch {
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

RunConfig load(const CommonOptions& opt)
{
    RunConfig cfg = parse_config_file(opt.config_path);
    if (opt.seed) {
        cfg.ensemble.seed = *opt.seed;
    }
    fs::create_directories(opt.out_dir);
    return cfg;
}

fs::path out_file(const CommonOptions& opt, const RunConfig& cfg, const std::string& suffix)
{
    return fs::path(opt.out_dir) / (cfg.output.prefix + "_" + suffix);
}

void save(RunManifest& manifest, const fs::path& path, const std::string& content)
{
    manifest.add_file(path, write_file(path, content));
}

void note_constants(RunManifest& manifest, const RunConfig& cfg)
{
    const double mismatch = cfg.constants.consistency_mismatch(cfg.params);
    if (mismatch > cfg.consistency_tolerance) {
        manifest.add_diagnostic("physical constants imply gamma=" + format_double(cfg.constants.implied_gamma())
                                + ", omega_r=" + format_double(cfg.constants.implied_omega_r())
                                + "; SI conversions use the constants as given");
    }
}

int cmd_simulate(const CommonOptions& opt)
{
    Stopwatch clock;
    RunConfig cfg = load(opt);
    if (opt.hamiltonian) {
        cfg.params.gamma = 0.0;
    }
    RunManifest manifest("simulate", cfg);
    note_constants(manifest, cfg);
    const auto& e = cfg.ensemble;
    RngStream rng(e.seed, stream_index(StreamPurpose::Trajectory, 0, 0));
    const AtomState start = draw_initial_state(e, rng);
    const PropagationOptions popt{cfg.step, e.sample_interval, e.jumps_enabled && cfg.params.gamma > 0.0};
    const TrajectoryRecord rec = propagate_with_jumps(start, cfg.params, e.tau_max, rng, popt);

    CsvTable traj({"tau", "x", "p", "u", "v", "z", "H", "bloch_norm", "recoil_sum", "jumps"});
    for (const auto& s : rec.samples) {
        const AtomState a{s.x, s.p, s.u, s.v, s.z, s.tau};
        traj.add_row({s.tau, s.x, s.p, s.u, s.v, s.z, energy(a, cfg.params), std::sqrt(a.bloch_norm2()),
                      s.recoil_sum, static_cast<double>(s.jumps)});
    }
    CsvTable jumps({"tau", "recoil"});
    for (const auto& j : rec.jumps) {
        jumps.add_row({j.tau, j.recoil});
    }
    save(manifest, out_file(opt, cfg, "trajectory.csv"), traj.str());
    save(manifest, out_file(opt, cfg, "jumps.csv"), jumps.str());
    manifest.set("trajectory", {{"failed", rec.failed}, {"failure", rec.failure}, {"ballistic", rec.ballistic()},
                                {"jumps", rec.jumps.size()}});
    manifest.set_timing("total", clock.seconds());
    manifest.write(out_file(opt, cfg, "manifest.json"));
    std::cout << "simulate: " << rec.samples.size() << " samples, " << rec.jumps.size() << " jumps\n";
    return rec.failed ? 1 : 0;
}

int cmd_sweep(const CommonOptions& opt)
{
    Stopwatch clock;
    const RunConfig cfg = load(opt);
    RunManifest manifest("sweep", cfg);
    note_constants(manifest, cfg);
    const unsigned threads = resolve_threads(opt.threads);
    const SweepSpec spec = cfg.sweep_spec();
    const SweepResult res = sweep_momentum(spec, cfg.params, threads, [&](std::size_t b, const SweepRow& r) {
        std::cerr << "bin " << b << " p=" << r.p << " Lambda=" << r.Lambda << " D=" << r.D_measured << " +- "
                  << r.D_stderr << " [" << flags_to_string(r.flags) << "]\n";
    });
    save(manifest, out_file(opt, cfg, "sweep.csv"), sweep_csv(res.rows));
    const PlotFiles plots = plot_data(res.rows);
    save(manifest, out_file(opt, cfg, "plot_diffusion.dat"), plots.diffusion);
    save(manifest, out_file(opt, cfg, "plot_lambda.dat"), plots.chaos);
    std::size_t failed = 0;
    for (const auto& r : res.rows) {
        manifest.add_bin({{"p", r.p},
                          {"n_chaotic", r.n_chaotic},
                          {"n_regular", r.n_regular},
                          {"n_traj", r.n_traj},
                          {"nonballistic", r.nonballistic},
                          {"friction", r.friction},
                          {"window", {r.tau_a, r.tau_b}},
                          {"flags", flags_to_string(r.flags)},
                          {"diagnostic", r.diagnostic}});
        if (!r.measured()) {
            ++failed;
        }
    }
    for (const auto& d : res.diagnostics) {
        manifest.add_diagnostic(d);
    }
    manifest.set("chaos", {{"noise_floor", res.noise_floor}, {"threshold", res.threshold}});
    manifest.set_timing("total", clock.seconds());
    manifest.write(out_file(opt, cfg, "manifest.json"));
    std::cout << "sweep: " << res.rows.size() << " bins, " << failed << " without estimate\n";
    return failed == res.rows.size() ? 1 : 0;
}

int cmd_lyapunov(const CommonOptions& opt)
{
    Stopwatch clock;
    const RunConfig cfg = load(opt);
    RunManifest manifest("lyapunov", cfg);
    const unsigned threads = resolve_threads(opt.threads);
    const auto grid = cfg.sweep.momenta();
    const SimParams ham = cfg.params.hamiltonian();
    const auto& lc = cfg.chaos.lyapunov;
    double floor = 0.0;
    double threshold = 0.0;
    if (cfg.chaos.threshold) {
        threshold = *cfg.chaos.threshold;
    } else {
        const std::vector<double> ref = {grid.front(), grid[grid.size() / 2], grid.back()};
        floor = calibrate_noise_floor(cfg.params, ref, cfg.chaos.noise_floor_runs, lc, cfg.ensemble.seed, threads);
        threshold = chaos_threshold(lc.tau_max, floor);
    }
    CsvTable per({"p", "trajectory", "x0", "p0", "lambda", "chaotic"});
    CsvTable stats({"p", "Lambda", "n_chaotic", "n_regular", "threshold"});
    for (std::size_t b = 0; b < grid.size(); ++b) {
        const auto starts = chaos_ensemble(grid[b], cfg.chaos.per_bin, cfg.chaos.jitter, cfg.ensemble.seed, b);
        const auto results = lyapunov_ensemble(starts, ham, lc, threads);
        const ChaosStats cs = tally_chaos(results, threshold);
        for (std::size_t i = 0; i < results.size(); ++i) {
            per.add_row({grid[b], static_cast<double>(i), starts[i].x, starts[i].p, cs.lambdas[i],
                         classify_chaotic(results[i], threshold) ? 1.0 : 0.0});
        }
        stats.add_row({grid[b], cs.Lambda, static_cast<double>(cs.n_chaotic), static_cast<double>(cs.n_regular),
                       threshold});
        std::cerr << "p=" << grid[b] << " Lambda=" << cs.Lambda << "\n";
    }
    save(manifest, out_file(opt, cfg, "lyapunov.csv"), per.str());
    save(manifest, out_file(opt, cfg, "chaos.csv"), stats.str());
    manifest.set("chaos", {{"noise_floor", floor}, {"threshold", threshold}});
    manifest.set_timing("total", clock.seconds());
    manifest.write(out_file(opt, cfg, "manifest.json"));
    return 0;
}

int cmd_analytic(const CommonOptions& opt)
{
    const RunConfig cfg = load(opt);
    RunManifest manifest("analytic", cfg);
    const auto& q = cfg.params;
    if (!(q.gamma > 0.0)) {
        throw Error("analytic: params.gamma must be > 0");
    }
    CsvTable t({"p", "D_ch", "D_reg", "D_reg_oscillatory", "D_blend_half", "mean_crossings", "u_kick"});
    for (double p : cfg.sweep.momenta()) {
        t.add_row({p, d_chaotic(q, p), d_regular(q, p), d_regular(q, p, RegularForm::Oscillatory),
                   d_blended(q, p, 0.5), mean_crossings(q, p), u_kick_amplitude(q, p)});
    }
    save(manifest, out_file(opt, cfg, "analytic.csv"), t.str());
    manifest.write(out_file(opt, cfg, "manifest.json"));
    return 0;
}

int cmd_cloud(const CommonOptions& opt)
{
    Stopwatch clock;
    const RunConfig cfg = load(opt);
    RunManifest manifest("cloud", cfg);
    note_constants(manifest, cfg);
    const unsigned threads = resolve_threads(opt.threads);
    const EnsembleRun run = run_ensemble(cfg.ensemble, cfg.params, threads);
    const CloudStats c = cloud_observables(run, cfg.constants, cfg.window);
    const double sx0 = c.var_x.empty() ? 0.0 : c.var_x.front();
    const double sp0 = c.var_p.empty() ? 0.0 : c.var_p.front();
    CsvTable t({"tau", "mean_p", "var_p", "mean_x", "var_x", "var_x_law", "L_m", "T_K", "in_window"});
    for (std::size_t k = 0; k < c.tau.size(); ++k) {
        const double tau = c.tau[k] - c.tau.front();
        const bool in_window = c.window.valid && k <= c.window.last;
        t.add_row({c.tau[k], c.mean_p[k], c.var_p[k], c.mean_x[k], c.var_x[k],
                   cloud_variance(sx0, sp0, std::max(0.0, c.D_p), cfg.params, tau), c.size[k], c.temperature[k],
                   in_window ? 1.0 : 0.0});
    }
    save(manifest, out_file(opt, cfg, "cloud.csv"), t.str());
    manifest.set("cloud", {{"D_p", c.D_p},
                           {"friction", c.friction},
                           {"friction_stderr", c.friction_stderr},
                           {"heating_rate_K_per_s", c.heating_rate},
                           {"window", {c.window.tau_a, c.window.tau_b}},
                           {"failed", run.n_failed},
                           {"nonballistic", run.n_nonballistic},
                           {"unreliable", run.unreliable}});
    for (const auto& d : run.diagnostics) {
        manifest.add_diagnostic(d);
    }
    manifest.set_timing("total", clock.seconds());
    manifest.write(out_file(opt, cfg, "manifest.json"));
    std::cout << "cloud: D_p=" << c.D_p << " F=" << c.friction << " dT/dt=" << c.heating_rate << " K/s\n";
    return run.records.size() == run.n_failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Monte Carlo transport of two-level atoms in a rigid optical lattice"};
    app.require_subcommand(1);
    CommonOptions opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out_dir, "output directory")->required();
        sub->add_option("--seed", opt.seed, "master seed (overrides ensemble.seed)");
        sub->add_option("--threads", opt.threads, "worker threads (default: $ATOMCHAOS_THREADS or all cores)");
    };
    auto* simulate = app.add_subcommand("simulate", "single trajectory with its emission log");
    add_common(simulate);
    simulate->add_flag("--hamiltonian", opt.hamiltonian, "set gamma = 0 (no emissions)");
    auto* sweep = app.add_subcommand("sweep", "chaos probability and measured diffusion per momentum bin");
    add_common(sweep);
    auto* lyap = app.add_subcommand("lyapunov", "per-trajectory Lyapunov exponents and chaos probability");
    add_common(lyap);
    auto* analytic = app.add_subcommand("analytic", "tabulate the analytic diffusion laws on the sweep grid");
    add_common(analytic);
    auto* cloud = app.add_subcommand("cloud", "cloud moments, size, temperature and heating rate");
    add_common(cloud);

    CLI11_PARSE(app, argc, argv);
    try {
        if (simulate->parsed()) {
            return cmd_simulate(opt);
        }
        if (sweep->parsed()) {
            return cmd_sweep(opt);
        }
        if (lyap->parsed()) {
            return cmd_lyapunov(opt);
        }
        if (analytic->parsed()) {
            return cmd_analytic(opt);
        }
        if (cloud->parsed()) {
            return cmd_cloud(opt);
        }
    } catch (const std::exception& e) {
        std::cerr << "atomchaos: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
