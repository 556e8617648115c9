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

// Simulation-side counterparts of the closed-form models: the energy map is
// replayed along a real trajectory and node crossings are counted between
// emissions.

#include <cmath>
#include <vector>

#include "atomchaos/analytic.hpp"
#include "atomchaos/dynamics.hpp"
#include "atomchaos/jumps.hpp"

namespace atomchaos {

struct EnergyMapTrack {
    std::vector<double> simulated;  // H just after each emission
    std::vector<double> predicted;  // one-step map from the previous simulated value
    std::vector<double> increments; // simulated H_j - H_{j-1}
    std::vector<double> intervals;
    std::size_t crossings = 0;      // node crossings over the whole run
    double mean_momentum = 0.0;

    [[nodiscard]] double mean_abs_mismatch() const
    {
        double s = 0.0;
        for (std::size_t i = 0; i < simulated.size(); ++i) s += std::abs(predicted[i] - simulated[i]);
        return simulated.empty() ? 0.0 : s / static_cast<double>(simulated.size());
    }

    [[nodiscard]] double rms_jump() const
    {
        double s = 0.0;
        for (double d : increments) s += d * d;
        return increments.empty() ? 0.0 : std::sqrt(s / static_cast<double>(increments.size()));
    }

    [[nodiscard]] double mean_interval() const
    {
        double s = 0.0;
        for (double d : intervals) s += d;
        return intervals.empty() ? 0.0 : s / static_cast<double>(intervals.size());
    }
};

// window_periods sets the <1 - z^2> averaging window in Rabi periods.
// sample_interval only controls how finely that window is resolved.
inline EnergyMapTrack energy_map_track(const AtomState& start, const SimParams& params, double duration,
                                       RngStream& rng, double window_periods = 10.0, double sample_interval = 0.1,
                                       double h = kDefaultStep)
{
    PropagationOptions opt;
    opt.step = h;
    opt.sample_interval = sample_interval;
    std::vector<AtomState> before;
    std::vector<JumpEvent> events;
    auto hook = [&](const AtomState& b, const JumpEvent& e) {
        before.push_back(b);
        events.push_back(e);
    };
    const TrajectoryRecord rec = propagate_with_jumps(start, params, duration, rng, opt, UniformRecoil{}, hook);
    if (rec.failed) {
        throw Error("energy_map_track: trajectory failed: " + rec.failure);
    }

    EnergyMapTrack out;
    const double window = window_periods * rabi_period(params);
    double h_prev = energy(start, params);
    double tau_prev = start.tau;
    std::size_t cursor = 0;  // first sample not yet behind the current jump
    double p_sum = 0.0;
    for (std::size_t j = 0; j < events.size(); ++j) {
        const AtomState& b = before[j];
        while (cursor < rec.samples.size() && rec.samples[cursor].tau < b.tau) ++cursor;
        double sat = 0.0;
        std::size_t n = 0;
        for (std::size_t k = cursor; k-- > 0;) {
            const auto& sm = rec.samples[k];
            if (sm.tau < b.tau - window || sm.tau < tau_prev) break;
            sat += 1.0 - sm.z * sm.z;
            ++n;
        }
        if (n == 0) {
            sat += 1.0 - b.z * b.z;
            n = 1;
        }
        EnergyMapInputs in;
        in.H_prev = h_prev;
        in.x = b.x;
        in.p = b.p;
        in.u = b.u;
        in.z = b.z;
        in.recoil = events[j].recoil;
        in.interval = b.tau - tau_prev;
        in.mean_saturation = sat / static_cast<double>(n);
        const double h_sim = energy(apply_jump(b, events[j].recoil), params);
        out.predicted.push_back(energy_map(in, params));
        out.simulated.push_back(h_sim);
        out.increments.push_back(h_sim - h_prev);
        out.intervals.push_back(in.interval);
        p_sum += b.p;
        h_prev = h_sim;
        tau_prev = b.tau;
    }
    out.mean_momentum = events.empty() ? start.p : p_sum / static_cast<double>(events.size());
    out.crossings = static_cast<std::size_t>(std::abs(node_index(rec.final_state.x) - node_index(start.x)));
    return out;
}

}  // namespace atomchaos
