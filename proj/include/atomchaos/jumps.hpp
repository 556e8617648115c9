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

// Spontaneous emission as a piecewise-deterministic jump process.
//
// Between jumps the atom follows the conditioned dynamics of dynamics.hpp.
// Jumps occur with the state-dependent rate gamma (z + 1) / 2; each one adds a
// random recoil to p and resets the Bloch vector to the ground state.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "atomchaos/dynamics.hpp"
#include "atomchaos/rng.hpp"

namespace atomchaos {

struct JumpEvent {
    double tau = 0.0;     // emission time
    double recoil = 0.0;  // momentum kick in units of hbar k_f, |recoil| <= 1

    friend bool operator==(const JumpEvent&, const JumpEvent&) = default;
};

// Instantaneous emission rate gamma (z + 1) / 2, clamped at zero.
inline double hazard(const AtomState& s, const SimParams& q) noexcept
{
    const double rate = 0.5 * q.gamma * (s.z + 1.0);
    return rate > 0.0 ? rate : 0.0;
}

// 1D recoil projection uniform on [-1, 1]; <p_j^2> = 1/3.
struct UniformRecoil {
    static constexpr double second_moment = 1.0 / 3.0;

    double operator()(RngStream& rng) const { return rng.uniform(-1.0, 1.0); }
};

inline double sample_recoil(RngStream& rng) { return UniformRecoil{}(rng); }

// Emission: p -> p + recoil, (u, v, z) -> (0, 0, -1). Position and time are kept.
inline AtomState apply_jump(const AtomState& s, double recoil)
{
    if (!(std::abs(recoil) <= 1.0)) {
        throw Error("apply_jump: |recoil| must be <= 1");
    }
    return {s.x, s.p + recoil, 0.0, 0.0, -1.0, s.tau};
}

// Snapshot stored at each sample time of a trajectory.
struct TrajectorySample {
    double tau = 0.0;
    double x = 0.0;
    double p = 0.0;
    double u = 0.0;
    double v = 0.0;
    double z = -1.0;
    double recoil_sum = 0.0;    // sum of recoils applied so far
    std::uint32_t jumps = 0;    // number of emissions so far

    friend bool operator==(const TrajectorySample&, const TrajectorySample&) = default;
};

struct TrajectoryRecord {
    std::vector<TrajectorySample> samples;
    std::vector<JumpEvent> jumps;
    AtomState initial;
    AtomState final_state;
    bool failed = false;
    std::string failure;
    bool direction_reversed = false;  // p changed sign at some step

    [[nodiscard]] bool ballistic() const { return !direction_reversed; }
};

struct PropagationOptions {
    double step = kDefaultStep;
    double sample_interval = 100.0;
    bool jumps_enabled = true;
};

struct NoJumpHook {
    void operator()(const AtomState& /*before*/, const JumpEvent& /*event*/) const {}
};

// Monte Carlo trajectory of the full jump process.
//
// Jump times come from cumulative-hazard inversion: a threshold -ln r is
// drawn, the hazard is accumulated with the trapezoidal rule on the
// integrator grid, and the jump is placed by linear interpolation of the
// cumulative hazard inside the step that crosses the threshold. The state at
// the jump time is obtained with a fresh partial step from the step start.
//
// `hook(before, event)` sees the pre-jump state of every emission.
// Non-finite states mark the record as failed and end the run.
template <class RecoilLaw = UniformRecoil, class JumpHook = NoJumpHook>
TrajectoryRecord propagate_with_jumps(const AtomState& start, const SimParams& params, double duration,
                                      RngStream& rng, const PropagationOptions& options = {},
                                      RecoilLaw recoil_law = {}, JumpHook&& hook = {})
{
    const double h = options.step;
    if (!(h > 0.0)) {
        throw Error("propagate_with_jumps: step must be > 0");
    }
    if (!(duration >= 0.0) || !std::isfinite(duration)) {
        throw Error("propagate_with_jumps: duration must be >= 0");
    }
    if (!(options.sample_interval >= h)) {
        throw Error("propagate_with_jumps: sample_interval must be >= step");
    }
    if (!start.finite()) {
        throw Error("propagate_with_jumps: non-finite initial state");
    }

    TrajectoryRecord rec;
    rec.initial = start;
    rec.final_state = start;
    if (duration == 0.0) {
        return rec;
    }

    const std::size_t n_samples = sample_count_for(duration, options.sample_interval);
    rec.samples.reserve(n_samples);
    const double tau0 = start.tau;
    const double tau_end = tau0 + duration;
    const bool initially_positive = start.p >= 0.0;

    double recoil_sum = 0.0;
    std::uint32_t n_jumps = 0;
    auto record_sample = [&](const AtomState& s) {
        rec.samples.push_back({s.tau, s.x, s.p, s.u, s.v, s.z, recoil_sum, n_jumps});
    };

    AtomState s = start;
    record_sample(s);
    std::size_t next_sample = 1;

    double threshold = options.jumps_enabled ? -std::log(rng.uniform_open_zero())
                                             : std::numeric_limits<double>::infinity();
    double accumulated = 0.0;
    double rate0 = hazard(s, params);

    while (s.tau < tau_end) {
        const bool sample_pending = next_sample < n_samples;
        const double target = sample_pending
            ? std::min(tau_end, tau0 + static_cast<double>(next_sample) * options.sample_interval)
            : tau_end;
        const double remaining = target - s.tau;
        const bool lands = remaining <= h * (1.0 + 1e-9);
        const double dt = lands ? remaining : h;

        AtomState next = step(s, params, dt);
        if (lands) {
            next.tau = target;
        }
        if (!next.finite()) {
            rec.failed = true;
            rec.failure = "non-finite state at tau=" + std::to_string(s.tau);
            break;
        }
        const double rate1 = hazard(next, params);
        const double increment = 0.5 * dt * (rate0 + rate1);
        if (!std::isfinite(increment)) {
            rec.failed = true;
            rec.failure = "hazard integral overflow at tau=" + std::to_string(s.tau);
            break;
        }

        if (increment > 0.0 && accumulated + increment >= threshold) {
            const double frac = (threshold - accumulated) / increment;
            const double sub = frac * dt;
            AtomState before = sub > 0.0 ? step(s, params, sub) : s;
            before.tau = s.tau + sub;
            const JumpEvent event{before.tau, recoil_law(rng)};
            hook(static_cast<const AtomState&>(before), event);
            s = apply_jump(before, event.recoil);
            rec.jumps.push_back(event);
            recoil_sum += event.recoil;
            ++n_jumps;
            accumulated = 0.0;
            threshold = -std::log(rng.uniform_open_zero());
            rate0 = hazard(s, params);
            if ((s.p >= 0.0) != initially_positive) {
                rec.direction_reversed = true;
            }
            // a jump exactly at the sample instant still needs the sample
            if (lands && sample_pending && sub >= dt) {
                record_sample(s);
                ++next_sample;
            }
            continue;
        }

        accumulated += increment;
        s = next;
        rate0 = rate1;
        if ((s.p >= 0.0) != initially_positive) {
            rec.direction_reversed = true;
        }
        if (lands && sample_pending) {
            record_sample(s);
            ++next_sample;
        }
    }
    rec.final_state = s;
    return rec;
}

// Overload taking a sample observer invoked with each sampled AtomState.
template <class Observer>
TrajectoryRecord propagate_with_jumps_observed(const AtomState& start, const SimParams& params, double duration,
                                               RngStream& rng, const PropagationOptions& options,
                                               Observer&& observer)
{
    TrajectoryRecord rec = propagate_with_jumps(start, params, duration, rng, options);
    for (const auto& sm : rec.samples) {
        observer(AtomState{sm.x, sm.p, sm.u, sm.v, sm.z, sm.tau});
    }
    return rec;
}

}  // namespace atomchaos
