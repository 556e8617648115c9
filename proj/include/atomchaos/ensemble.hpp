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

#pragma once

// Monte Carlo ensembles of emitting atoms and the transport quantities
// measured on them: momentum diffusion, friction, cloud moments and the
// momentum sweep that pairs measured diffusion with chaos probability.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "atomchaos/analytic.hpp"
#include "atomchaos/jumps.hpp"
#include "atomchaos/lyapunov.hpp"
#include "atomchaos/parallel.hpp"
#include "atomchaos/stats.hpp"

namespace atomchaos {

enum class PositionLaw { UniformPhase, Gaussian };

struct EnsembleSpec {
    std::size_t n_traj = 200;
    double p0_mean = 1000.0;
    double p0_sigma = 0.0;
    // When > 0, p0 = p0_mean * exp(U(-w, w)) instead of the Gaussian law.
    double p0_log_halfwidth = 0.0;
    // Moments of p - p0 and x - x0 - omega_r p0 tau per trajectory, so an
    // initial momentum spread does not enter sigma_p or sigma_x.
    bool centered = false;
    PositionLaw x0_law = PositionLaw::UniformPhase;
    double x0_mean = 0.0;
    double x0_sigma = 0.0;
    double tau_max = 3e4;
    double sample_interval = 100.0;
    double step = kDefaultStep;
    bool jumps_enabled = true;
    std::uint64_t seed = 1;
    std::uint64_t group = 0;  // stream group, e.g. the sweep bin index

    void validate() const
    {
        if (n_traj < 2) {
            throw Error("ensemble.n_traj must be >= 2");
        }
        if (!(p0_sigma >= 0.0) || !(x0_sigma >= 0.0) || !(p0_log_halfwidth >= 0.0)) {
            throw Error("ensemble: p0_sigma and x0_sigma must be >= 0");
        }
        if (!(tau_max > 0.0)) {
            throw Error("ensemble.tau_max must be > 0");
        }
        if (!(step > 0.0) || !(sample_interval >= step) || !(sample_interval <= tau_max)) {
            throw Error("ensemble: need 0 < step <= sample_interval <= tau_max");
        }
    }
};

struct EnsembleRun {
    EnsembleSpec spec;
    SimParams params;
    std::vector<TrajectoryRecord> records;
    std::size_t n_failed = 0;
    std::size_t n_nonballistic = 0;
    bool unreliable = false;
    std::vector<std::string> diagnostics;

    // Trajectory enters statistics: finished and never reversed direction.
    [[nodiscard]] bool usable(std::size_t i) const { return !records[i].failed && records[i].ballistic(); }

    [[nodiscard]] std::vector<std::size_t> usable_indices() const
    {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (usable(i)) {
                out.push_back(i);
            }
        }
        return out;
    }
};

// Initial state of trajectory i; drawn from the trajectory's own stream.
inline AtomState draw_initial_state(const EnsembleSpec& spec, RngStream& rng)
{
    const double x0 = spec.x0_law == PositionLaw::UniformPhase
        ? spec.x0_mean + rng.uniform(0.0, 2.0 * std::numbers::pi)
        : (spec.x0_sigma > 0.0 ? rng.normal(spec.x0_mean, spec.x0_sigma) : spec.x0_mean);
    double p0 = spec.p0_mean;
    if (spec.p0_log_halfwidth > 0.0) {
        p0 *= std::exp(rng.uniform(-spec.p0_log_halfwidth, spec.p0_log_halfwidth));
    } else if (spec.p0_sigma > 0.0) {
        p0 = rng.normal(spec.p0_mean, spec.p0_sigma);
    }
    return AtomState::ground(x0, p0);
}

// Runs spec.n_traj independent trajectories. Trajectory i owns the stream
// (seed, group, i), so the records do not depend on the worker count.
// An ensemble with more than 10% failed or non-ballistic members is unreliable.
inline EnsembleRun run_ensemble(const EnsembleSpec& spec, const SimParams& params, unsigned threads = 1)
{
    spec.validate();
    params.validate();
    EnsembleRun run;
    run.spec = spec;
    run.params = params;
    run.records.resize(spec.n_traj);
    const PropagationOptions options{spec.step, spec.sample_interval, spec.jumps_enabled};
    parallel_for(spec.n_traj, threads, [&](std::size_t i) {
        RngStream rng(spec.seed, stream_index(StreamPurpose::Trajectory, spec.group, i));
        const AtomState start = draw_initial_state(spec, rng);
        run.records[i] = propagate_with_jumps(start, params, spec.tau_max, rng, options);
    });
    for (std::size_t i = 0; i < run.records.size(); ++i) {
        const auto& r = run.records[i];
        if (r.failed) {
            ++run.n_failed;
            run.diagnostics.push_back("trajectory " + std::to_string(i) + " failed: " + r.failure);
        } else if (!r.ballistic()) {
            ++run.n_nonballistic;
        }
    }
    const std::size_t bad = run.n_failed + run.n_nonballistic;
    run.unreliable = 10 * bad > spec.n_traj;
    if (run.unreliable) {
        run.diagnostics.push_back("ensemble unreliable: " + std::to_string(bad) + " of "
                                  + std::to_string(spec.n_traj) + " trajectories failed or reversed");
    }
    return run;
}

// ---------------------------------------------------------------------------
// Moments

// How sigma_p^2(tau) is estimated from the ensemble.
enum class VarianceEstimator {
    // Sample variance of p.
    Plain,
    // Sample variance of p with the variance of the summed recoils replaced
    // by its conditional expectation <p_j^2> * <N> given the emission counts.
    // Same expectation as Plain, much lower noise when the recoil floor
    // dominates the diffusion.
    RecoilConditioned,
};

// Ensemble moments at each sample time.
struct MomentSeries {
    std::vector<double> tau;
    std::vector<double> mean_p;
    std::vector<double> var_p;
    std::vector<double> mean_x;
    std::vector<double> var_x;
    std::size_t n = 0;
};

namespace detail {

// Raw sums over a set of trajectories at one sample time, with p and x
// shifted by nominal values to avoid cancellation.
struct SampleSums {
    double n = 0.0;
    double p = 0.0;
    double pp = 0.0;
    double x = 0.0;
    double xx = 0.0;
    double jumps = 0.0;
    double r = 0.0;
    double g = 0.0;
    double gg = 0.0;
    double rg = 0.0;

    SampleSums& operator+=(const SampleSums& o)
    {
        n += o.n;
        p += o.p;
        pp += o.pp;
        x += o.x;
        xx += o.xx;
        jumps += o.jumps;
        r += o.r;
        g += o.g;
        gg += o.gg;
        rg += o.rg;
        return *this;
    }

    SampleSums& operator-=(const SampleSums& o)
    {
        n -= o.n;
        p -= o.p;
        pp -= o.pp;
        x -= o.x;
        xx -= o.xx;
        jumps -= o.jumps;
        r -= o.r;
        g -= o.g;
        gg -= o.gg;
        rg -= o.rg;
        return *this;
    }
};

// Per-group sums: sums[g][k] for group g and sample k. Trajectory j of the
// usable list goes to group j % groups; summation runs in list order.
struct GroupedSums {
    std::vector<std::vector<SampleSums>> groups;
    std::vector<double> tau;
    double p_ref = 0.0;
    double x_ref = 0.0;
    double x_slope = 0.0;
};

inline GroupedSums group_sums(const EnsembleRun& run, std::size_t n_groups)
{
    GroupedSums out;
    const auto idx = run.usable_indices();
    if (idx.empty()) {
        return out;
    }
    std::size_t n_samples = run.records[idx.front()].samples.size();
    for (std::size_t i : idx) {
        n_samples = std::min(n_samples, run.records[i].samples.size());
    }
    out.groups.assign(std::max<std::size_t>(1, n_groups), std::vector<SampleSums>(n_samples));
    out.p_ref = run.spec.p0_mean;
    out.x_ref = run.spec.x0_mean;
    out.x_slope = run.params.omega_r * run.spec.p0_mean;
    const double tau0 = run.records[idx.front()].samples.front().tau;
    for (std::size_t k = 0; k < n_samples; ++k) {
        out.tau.push_back(run.records[idx.front()].samples[k].tau);
    }
    for (std::size_t j = 0; j < idx.size(); ++j) {
        auto& g = out.groups[j % out.groups.size()];
        const auto& rec = run.records[idx[j]];
        const auto& samples = rec.samples;
        const bool own = run.spec.centered;
        const double p_base = own ? rec.initial.p : out.p_ref;
        const double x_base = own ? rec.initial.x : out.x_ref;
        const double x_rate = own ? run.params.omega_r * rec.initial.p : out.x_slope;
        for (std::size_t k = 0; k < n_samples; ++k) {
            const auto& sm = samples[k];
            const double dp = sm.p - p_base;
            const double dx = sm.x - x_base - x_rate * (sm.tau - tau0);
            const double gpart = dp - sm.recoil_sum;
            SampleSums& acc = g[k];
            acc.n += 1.0;
            acc.p += dp;
            acc.pp += dp * dp;
            acc.x += dx;
            acc.xx += dx * dx;
            acc.jumps += static_cast<double>(sm.jumps);
            acc.r += sm.recoil_sum;
            acc.g += gpart;
            acc.gg += gpart * gpart;
            acc.rg += sm.recoil_sum * gpart;
        }
    }
    return out;
}

inline double sample_variance(double n, double s, double ss)
{
    if (n < 2.0) {
        return 0.0;
    }
    const double mean = s / n;
    return std::max(0.0, (ss - n * mean * mean) / (n - 1.0));
}

inline double momentum_variance(const SampleSums& s, VarianceEstimator est, double recoil_m2)
{
    if (est == VarianceEstimator::Plain || s.n < 2.0) {
        return sample_variance(s.n, s.p, s.pp);
    }
    const double n = s.n;
    const double mr = s.r / n;
    const double mg = s.g / n;
    const double var_r = n / (n - 1.0) * (recoil_m2 * s.jumps / n - mr * mr);
    const double var_g = (s.gg - n * mg * mg) / (n - 1.0);
    const double cov = (s.rg - n * mr * mg) / (n - 1.0);
    return std::max(0.0, var_r + var_g + 2.0 * cov);
}

inline MomentSeries series_from(const GroupedSums& gs, const std::vector<SampleSums>& sums, VarianceEstimator est,
                                double recoil_m2)
{
    MomentSeries m;
    m.tau = gs.tau;
    const double tau0 = gs.tau.empty() ? 0.0 : gs.tau.front();
    for (std::size_t k = 0; k < sums.size(); ++k) {
        const SampleSums& s = sums[k];
        const double n = std::max(1.0, s.n);
        m.mean_p.push_back(gs.p_ref + s.p / n);
        m.var_p.push_back(momentum_variance(s, est, recoil_m2));
        m.mean_x.push_back(gs.x_ref + gs.x_slope * (gs.tau[k] - tau0) + s.x / n);
        m.var_x.push_back(sample_variance(s.n, s.x, s.xx));
    }
    m.n = sums.empty() ? 0 : static_cast<std::size_t>(sums.front().n);
    return m;
}

inline std::vector<SampleSums> total_of(const GroupedSums& gs)
{
    if (gs.groups.empty()) {
        return {};
    }
    // pairwise combination of the group partial sums
    std::vector<std::vector<SampleSums>> level = gs.groups;
    while (level.size() > 1) {
        std::vector<std::vector<SampleSums>> next;
        for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
            auto merged = level[i];
            for (std::size_t k = 0; k < merged.size(); ++k) {
                merged[k] += level[i + 1][k];
            }
            next.push_back(std::move(merged));
        }
        if (level.size() % 2 == 1) {
            next.push_back(level.back());
        }
        level = std::move(next);
    }
    return level.front();
}

}  // namespace detail

// Moments over the usable trajectories of a run.
inline MomentSeries compute_moments(const EnsembleRun& run, VarianceEstimator est = VarianceEstimator::Plain,
                                    double recoil_m2 = UniformRecoil::second_moment)
{
    const auto gs = detail::group_sums(run, 1);
    return detail::series_from(gs, detail::total_of(gs), est, recoil_m2);
}

// ---------------------------------------------------------------------------
// Diffusion and friction estimates

struct WindowPolicy {
    double transient = -1.0;      // skipped initial span; negative means one mean emission interval 2/gamma
    double sigma_cap = 0.05;      // stop once sigma_p > sigma_cap * <p>
    double drift_cap = 0.05;      // stop once |<p> - <p>(0)| > drift_cap * <p>(0)
    double horizon_fraction = 0.05;  // stop at horizon_fraction * p / |F| when F is resolved
    VarianceEstimator estimator = VarianceEstimator::Plain;
    std::size_t jackknife_groups = 20;
};

struct FitWindow {
    std::size_t first = 0;  // sample indices, inclusive
    std::size_t last = 0;
    double tau_a = 0.0;
    double tau_b = 0.0;
    bool valid = false;
    std::string diagnostic;
};

struct DiffusionEstimate {
    double D_p = 0.0;
    double tau_a = 0.0;
    double tau_b = 0.0;
    double standard_error = 0.0;
    std::size_t n_traj = 0;
    std::size_t ballistic_violations = 0;
    bool valid = false;
    std::string diagnostic;
};

struct FrictionEstimate {
    double F = 0.0;
    double standard_error = 0.0;
    double tau_a = 0.0;
    double tau_b = 0.0;
    bool valid = false;

    [[nodiscard]] bool resolved() const { return valid && std::abs(F) > 3.0 * standard_error; }
};

namespace detail {

inline double window_slope(const MomentSeries& m, const std::vector<double>& y, std::size_t first, std::size_t last)
{
    std::span<const double> ts(m.tau.data() + first, last - first + 1);
    std::span<const double> ys(y.data() + first, last - first + 1);
    return linear_fit(ts, ys).slope;
}

// Window from the moment series alone (transient, sigma and drift caps).
inline FitWindow base_window(const MomentSeries& m, const WindowPolicy& policy, const SimParams& q)
{
    FitWindow w;
    if (m.tau.size() < 2) {
        w.diagnostic = "fewer than two samples";
        return w;
    }
    const double transient = policy.transient >= 0.0 ? policy.transient : (q.gamma > 0.0 ? 2.0 / q.gamma : 0.0);
    const double tau0 = m.tau.front();
    const double p_start = m.mean_p.front();
    std::size_t first = 0;
    while (first < m.tau.size() && m.tau[first] - tau0 < transient) {
        ++first;
    }
    if (first >= m.tau.size()) {
        w.diagnostic = "transient longer than the run";
        return w;
    }
    std::size_t last = first;
    bool any = false;
    for (std::size_t k = first; k < m.tau.size(); ++k) {
        const double sigma = std::sqrt(m.var_p[k]);
        const bool ok = sigma <= policy.sigma_cap * std::abs(m.mean_p[k])
                     && std::abs(m.mean_p[k] - p_start) <= policy.drift_cap * std::abs(p_start);
        if (!ok) {
            break;
        }
        last = k;
        any = true;
    }
    if (!any || last <= first) {
        w.diagnostic = "empty fit window: validity caps reached before two samples";
        return w;
    }
    w.first = first;
    w.last = last;
    w.tau_a = m.tau[first];
    w.tau_b = m.tau[last];
    w.valid = true;
    return w;
}

// Delete-one-group jackknife of a scalar statistic over the trajectory groups.
template <class Stat>
double jackknife_error(const GroupedSums& gs, const std::vector<SampleSums>& total, VarianceEstimator est,
                       double recoil_m2, Stat&& stat)
{
    const std::size_t g_count = gs.groups.size();
    if (g_count < 2) {
        return 0.0;
    }
    std::vector<double> reps;
    reps.reserve(g_count);
    for (std::size_t g = 0; g < g_count; ++g) {
        std::vector<SampleSums> loo = total;
        for (std::size_t k = 0; k < loo.size(); ++k) {
            loo[k] -= gs.groups[g][k];
        }
        reps.push_back(stat(series_from(gs, loo, est, recoil_m2)));
    }
    const double mean = pairwise_sum(reps) / static_cast<double>(g_count);
    double ss = 0.0;
    for (double r : reps) {
        ss += (r - mean) * (r - mean);
    }
    return std::sqrt(static_cast<double>(g_count - 1) / static_cast<double>(g_count) * ss);
}

}  // namespace detail

// Joint diffusion and friction measurement on a shared fit window.
struct TransportEstimate {
    DiffusionEstimate diffusion;
    FrictionEstimate friction;
    FitWindow window;
    MomentSeries moments;
};

// D_p = d(sigma_p^2) / (2 d tau) and F = d<p>/d tau by least squares over a
// window that skips the initial transient and ends when the spread or drift
// of the momentum leaves the small-temperature regime, or when the friction
// horizon p/|F| is approached. Standard errors come from a delete-one-group
// jackknife over trajectories.
inline TransportEstimate estimate_transport(const EnsembleRun& run, const WindowPolicy& policy = {},
                                            double recoil_m2 = UniformRecoil::second_moment)
{
    TransportEstimate out;
    const auto idx = run.usable_indices();
    out.diffusion.n_traj = idx.size();
    out.diffusion.ballistic_violations = run.n_nonballistic;
    if (idx.size() < 2) {
        out.diffusion.diagnostic = "fewer than two usable trajectories";
        return out;
    }
    const std::size_t groups = std::clamp<std::size_t>(policy.jackknife_groups, 2, idx.size());
    const auto gs = detail::group_sums(run, groups);
    const auto total = detail::total_of(gs);
    out.moments = detail::series_from(gs, total, policy.estimator, recoil_m2);
    const MomentSeries& m = out.moments;

    FitWindow w = detail::base_window(m, policy, run.params);
    if (!w.valid) {
        out.window = w;
        out.diffusion.diagnostic = w.diagnostic;
        return out;
    }
    auto friction_on = [&](const MomentSeries& s, std::size_t first, std::size_t last) {
        return detail::window_slope(s, s.mean_p, first, last);
    };
    auto fit_friction = [&](const FitWindow& fw) {
        FrictionEstimate f;
        f.F = friction_on(m, fw.first, fw.last);
        f.standard_error = detail::jackknife_error(gs, total, policy.estimator, recoil_m2,
                                                   [&](const MomentSeries& s) { return friction_on(s, fw.first, fw.last); });
        f.tau_a = fw.tau_a;
        f.tau_b = fw.tau_b;
        f.valid = true;
        return f;
    };
    FrictionEstimate f = fit_friction(w);
    if (f.resolved()) {
        const double horizon = policy.horizon_fraction * std::abs(m.mean_p.front() / f.F);
        std::size_t last = w.last;
        while (last > w.first && m.tau[last] - m.tau.front() > horizon) {
            --last;
        }
        if (last != w.last) {
            if (last <= w.first) {
                w.valid = false;
                w.diagnostic = "friction horizon shorter than the transient";
                out.window = w;
                out.friction = f;
                out.diffusion.diagnostic = w.diagnostic;
                return out;
            }
            w.last = last;
            w.tau_b = m.tau[last];
            f = fit_friction(w);
        }
    }
    out.window = w;
    out.friction = f;

    auto diffusion_on = [&](const MomentSeries& s) { return 0.5 * detail::window_slope(s, s.var_p, w.first, w.last); };
    out.diffusion.D_p = diffusion_on(m);
    out.diffusion.standard_error =
        detail::jackknife_error(gs, total, policy.estimator, recoil_m2, diffusion_on);
    out.diffusion.tau_a = w.tau_a;
    out.diffusion.tau_b = w.tau_b;
    out.diffusion.valid = true;
    return out;
}

inline DiffusionEstimate estimate_diffusion(const EnsembleRun& run, const WindowPolicy& policy = {})
{
    return estimate_transport(run, policy).diffusion;
}

inline FrictionEstimate estimate_friction(const EnsembleRun& run, const WindowPolicy& policy = {})
{
    return estimate_transport(run, policy).friction;
}

// Least-squares D_p from an explicit (tau, sigma_p^2) series over all points.
inline double diffusion_from_variance_series(std::span<const double> tau, std::span<const double> var_p)
{
    return 0.5 * linear_fit(tau, var_p).slope;
}

// ---------------------------------------------------------------------------
// Cloud observables

struct CloudStats {
    std::vector<double> tau;
    std::vector<double> mean_p;
    std::vector<double> var_p;
    std::vector<double> mean_x;
    std::vector<double> var_x;
    std::vector<double> size;         // L = 2 sigma_x / k_f [m]
    std::vector<double> temperature;  // [K]
    double friction = 0.0;
    double friction_stderr = 0.0;
    double D_p = 0.0;
    double heating_rate = 0.0;        // dT/dt [K/s]
    FitWindow window;
};

inline CloudStats cloud_observables(const EnsembleRun& run, const PhysicalConstants& constants,
                                    const WindowPolicy& policy = {})
{
    const TransportEstimate te = estimate_transport(run, policy);
    const MomentSeries plain = compute_moments(run, VarianceEstimator::Plain);
    CloudStats c;
    c.tau = plain.tau;
    c.mean_p = plain.mean_p;
    c.var_p = plain.var_p;
    c.mean_x = plain.mean_x;
    c.var_x = plain.var_x;
    for (std::size_t k = 0; k < c.tau.size(); ++k) {
        c.size.push_back(cloud_size(c.var_x[k], constants));
        c.temperature.push_back(temperature_and_heating(c.var_p[k], 0.0, constants).temperature);
    }
    c.window = te.window;
    c.friction = te.friction.F;
    c.friction_stderr = te.friction.standard_error;
    c.D_p = te.diffusion.D_p;
    c.heating_rate = te.diffusion.valid ? temperature_and_heating(0.0, std::max(0.0, c.D_p), constants).rate : 0.0;
    return c;
}

// ---------------------------------------------------------------------------
// Momentum sweep

// n log-spaced momenta from p_min to p_max inclusive.
inline std::vector<double> log_grid(double p_min, double p_max, std::size_t n)
{
    if (!(p_min > 0.0) || !(p_max > p_min) || n < 2) {
        throw Error("log_grid: need 0 < p_min < p_max and n >= 2");
    }
    std::vector<double> g(n);
    const double a = std::log(p_min);
    const double b = std::log(p_max);
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = std::exp(a + (b - a) * static_cast<double>(i) / static_cast<double>(n - 1));
    }
    g.front() = p_min;
    g.back() = p_max;
    return g;
}

enum SweepFlag : unsigned {
    kFlagNonBallistic = 1u << 0,   // >= 1% of trajectories reversed direction
    kFlagUnreliable = 1u << 1,     // > 10% failed or reversed
    kFlagNoEstimate = 1u << 2,     // empty diffusion fit window
    kFlagChaosFailed = 1u << 3,    // some Lyapunov runs failed
    kFlagStrongPotential = 1u << 4,  // outside the weak Raman-Nath regime (factor 10)
    kFlagLargeDetuning = 1u << 5,  // |delta| >= 0.1
    kFlagError = 1u << 6,          // the bin raised an error
};

inline std::string flags_to_string(unsigned flags)
{
    if (flags == 0) {
        return "ok";
    }
    static constexpr std::pair<unsigned, const char*> names[] = {
        {kFlagNonBallistic, "nonballistic"}, {kFlagUnreliable, "unreliable"},
        {kFlagNoEstimate, "no_estimate"},    {kFlagChaosFailed, "chaos_failed"},
        {kFlagStrongPotential, "strong_potential"}, {kFlagLargeDetuning, "large_detuning"},
        {kFlagError, "error"},
    };
    std::string out;
    for (const auto& [bit, name] : names) {
        if (flags & bit) {
            if (!out.empty()) {
                out += '|';
            }
            out += name;
        }
    }
    return out;
}

inline unsigned flags_from_string(const std::string& s)
{
    unsigned flags = 0;
    std::size_t pos = 0;
    while (pos <= s.size()) {
        const std::size_t bar = s.find('|', pos);
        const std::string tok = s.substr(pos, bar == std::string::npos ? std::string::npos : bar - pos);
        for (unsigned bit = 1; bit <= kFlagError; bit <<= 1) {
            if (tok == flags_to_string(bit)) {
                flags |= bit;
            }
        }
        if (bar == std::string::npos) {
            break;
        }
        pos = bar + 1;
    }
    return flags;
}

struct SweepRow {
    double p = 0.0;
    double Lambda = 0.0;
    std::size_t n_chaotic = 0;
    std::size_t n_regular = 0;
    double D_measured = 0.0;
    double D_stderr = 0.0;
    double D_ch = 0.0;
    double D_reg = 0.0;
    double D_blend = 0.0;
    double friction = 0.0;
    double tau_a = 0.0;
    double tau_b = 0.0;
    std::size_t n_traj = 0;
    std::size_t nonballistic = 0;
    unsigned flags = 0;
    std::string diagnostic;

    [[nodiscard]] bool measured() const { return (flags & (kFlagNoEstimate | kFlagError | kFlagUnreliable)) == 0; }
};

struct SweepSpec {
    std::vector<double> grid;
    EnsembleSpec ensemble;          // p0_mean and group are set per bin
    WindowPolicy window;
    LyapunovConfig lyapunov;
    std::size_t chaos_per_bin = 16;
    double chaos_jitter = 0.02;
    std::optional<double> threshold;  // overrides the calibrated rule
    // Fraction of the local log spacing over which a bin's diffusion ensemble
    // spreads its initial momenta (0: all at the grid point). Moments are then
    // taken about each trajectory's own start.
    double bin_spread = 0.0;
    std::size_t noise_floor_runs = 2;  // integrable runs per calibration momentum
    bool compute_chaos = true;
    bool compute_diffusion = true;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    double noise_floor = 0.0;
    double threshold = 0.0;
    std::vector<std::string> diagnostics;
};

using SweepProgress = std::function<void(std::size_t bin, const SweepRow&)>;

// Chaos probability (gamma = 0) and measured diffusion (gamma > 0) per
// momentum bin, next to the analytic laws. Per-bin failures are flagged and
// the sweep continues.
inline SweepResult sweep_momentum(const SweepSpec& spec, const SimParams& params, unsigned threads = 1,
                                  const SweepProgress& progress = {})
{
    params.validate();
    if (spec.grid.empty()) {
        throw Error("sweep: empty momentum grid");
    }
    for (std::size_t i = 1; i < spec.grid.size(); ++i) {
        if (!(spec.grid[i] > spec.grid[i - 1])) {
            throw Error("sweep: momentum grid must be strictly increasing");
        }
    }
    SweepResult result;
    const SimParams hamiltonian = params.hamiltonian();
    if (spec.compute_chaos) {
        if (spec.threshold) {
            result.threshold = *spec.threshold;
        } else {
            const std::vector<double> ref = {spec.grid.front(), spec.grid[spec.grid.size() / 2], spec.grid.back()};
            result.noise_floor = calibrate_noise_floor(params, ref, spec.noise_floor_runs, spec.lyapunov,
                                                       spec.ensemble.seed, threads);
            result.threshold = chaos_threshold(spec.lyapunov.tau_max, result.noise_floor);
        }
    }

    for (std::size_t b = 0; b < spec.grid.size(); ++b) {
        const double p = spec.grid[b];
        double halfwidth = 0.0;
        if (spec.bin_spread > 0.0 && spec.grid.size() > 1) {
            const std::size_t hi = std::max<std::size_t>(b, 1);
            halfwidth = 0.5 * spec.bin_spread * std::log(spec.grid[hi] / spec.grid[hi - 1]);
        }
        SweepRow row;
        row.p = p;
        try {
            if (spec.compute_chaos) {
                // a spread bin samples its chaos ensemble over the same momenta
                const double jitter = std::max(spec.chaos_jitter, std::expm1(halfwidth));
                const auto starts = chaos_ensemble(p, spec.chaos_per_bin, jitter, spec.ensemble.seed, b);
                const ChaosStats cs = chaos_probability(starts, hamiltonian, spec.lyapunov, result.threshold, threads);
                row.Lambda = cs.Lambda;
                row.n_chaotic = cs.n_chaotic;
                row.n_regular = cs.n_regular;
                if (cs.n_failed > 0) {
                    row.flags |= kFlagChaosFailed;
                }
            }
            if (params.gamma > 0.0) {
                row.D_ch = d_chaotic(params, p);
                row.D_reg = d_regular(params, p);
                row.D_blend = d_blended(params, p, row.Lambda);
            }
            if (spec.compute_diffusion) {
                EnsembleSpec es = spec.ensemble;
                es.p0_mean = p;
                es.group = b;
                if (halfwidth > 0.0) {
                    es.p0_log_halfwidth = halfwidth;
                    es.centered = true;
                }
                const EnsembleRun run = run_ensemble(es, params, threads);
                const TransportEstimate te = estimate_transport(run, spec.window);
                row.n_traj = te.diffusion.n_traj;
                row.nonballistic = run.n_nonballistic;
                row.D_measured = te.diffusion.D_p;
                row.D_stderr = te.diffusion.standard_error;
                row.friction = te.friction.F;
                row.tau_a = te.diffusion.tau_a;
                row.tau_b = te.diffusion.tau_b;
                if (!te.diffusion.valid) {
                    row.flags |= kFlagNoEstimate;
                    row.diagnostic = te.diffusion.diagnostic;
                }
                if (100 * run.n_nonballistic >= es.n_traj) {
                    row.flags |= kFlagNonBallistic;
                }
                if (run.unreliable) {
                    row.flags |= kFlagUnreliable;
                }
            }
        } catch (const std::exception& e) {
            row.flags |= kFlagError;
            row.diagnostic = e.what();
            result.diagnostics.push_back("bin " + std::to_string(b) + ": " + e.what());
        }
        if (0.5 * params.omega_r * p * p < 10.0 * (1.0 + 0.5 * std::abs(params.delta))) {
            row.flags |= kFlagStrongPotential;
        }
        if (!params.weak_detuning()) {
            row.flags |= kFlagLargeDetuning;
        }
        if (progress) {
            progress(b, row);
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Sweep analysis

// Index of the first bin with Lambda < 1 that follows a Lambda = 1 bin.
inline std::optional<std::size_t> chaos_exit_bin(const std::vector<SweepRow>& rows)
{
    bool seen_full = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].Lambda >= 1.0) {
            seen_full = true;
        } else if (seen_full) {
            return i;
        }
    }
    return std::nullopt;
}

// First bin, after a Lambda = 1 bin, whose measured D_p differs from the
// chaotic law by more than `factor` in either direction.
inline std::optional<std::size_t> chaotic_law_departure_bin(const std::vector<SweepRow>& rows, double factor = 3.0)
{
    bool seen_full = false;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].Lambda >= 1.0) {
            seen_full = true;
        }
        if (!seen_full || !rows[i].measured() || rows[i].D_ch <= 0.0) {
            continue;
        }
        const double ratio = rows[i].D_measured / rows[i].D_ch;
        if (ratio > factor || ratio < 1.0 / factor) {
            return i;
        }
    }
    return std::nullopt;
}

// Log-log slope of (D_measured - gamma/12) against p over the selected rows.
inline LinearFit excess_slope(const std::vector<SweepRow>& rows, const std::vector<std::size_t>& which,
                              const SimParams& q)
{
    std::vector<double> ps;
    std::vector<double> ex;
    std::vector<double> se;
    for (std::size_t i : which) {
        ps.push_back(rows[i].p);
        ex.push_back(rows[i].D_measured - recoil_floor(q));
        se.push_back(rows[i].D_stderr);
    }
    return loglog_fit(ps, ex, se);
}

}  // namespace atomchaos
