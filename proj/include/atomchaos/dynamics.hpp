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

// Deterministic evolution of a two-level atom in a rigid standing wave between
// spontaneous-emission events:
//
//   x' = omega_r p
//   p' = -u sin x
//   u' =  delta v + (gamma/2) u z
//   v' = -delta u + 2 z cos x + (gamma/2) v z
//   z' = -2 v cos x - (gamma/2)(u^2 + v^2)
//
// The Bloch length u^2 + v^2 + z^2 is a constant of this flow for any gamma.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "atomchaos/params.hpp"

namespace atomchaos {

// Default fixed integration step (in units of 1/Omega).
inline constexpr double kDefaultStep = 1e-2;

struct StateDerivative {
    double dx = 0.0;
    double dp = 0.0;
    double du = 0.0;
    double dv = 0.0;
    double dz = 0.0;
};

// Semiclassical atom: unwrapped phase x = k_f X, momentum p = P / (hbar k_f),
// Bloch vector (u, v, z) and normalized time tau.
struct AtomState {
    double x = 0.0;
    double p = 0.0;
    double u = 0.0;
    double v = 0.0;
    double z = -1.0;
    double tau = 0.0;

    [[nodiscard]] double bloch_norm2() const { return u * u + v * v + z * z; }

    [[nodiscard]] bool finite() const
    {
        return std::isfinite(x) && std::isfinite(p) && std::isfinite(u) && std::isfinite(v)
            && std::isfinite(z) && std::isfinite(tau);
    }

    // Ground-state atom at position x and momentum p.
    static AtomState ground(double x, double p, double tau = 0.0) { return {x, p, 0.0, 0.0, -1.0, tau}; }

    friend bool operator==(const AtomState&, const AtomState&) = default;
};

namespace detail {

inline StateDerivative deriv_unchecked(const AtomState& s, const SimParams& q) noexcept
{
    const double sx = std::sin(s.x);
    const double cx = std::cos(s.x);
    const double half_gamma = 0.5 * q.gamma;
    return {q.omega_r * s.p,
            -s.u * sx,
            q.delta * s.v + half_gamma * s.u * s.z,
            -q.delta * s.u + 2.0 * s.z * cx + half_gamma * s.v * s.z,
            -2.0 * s.v * cx - half_gamma * (s.u * s.u + s.v * s.v)};
}

inline AtomState advance(const AtomState& s, double h, const StateDerivative& k) noexcept
{
    return {s.x + h * k.dx, s.p + h * k.dp, s.u + h * k.du, s.v + h * k.dv, s.z + h * k.dz, s.tau + h};
}

}  // namespace detail

// Right-hand side of the between-jump equations of motion.
// Throws Error for non-finite input.
inline StateDerivative deriv(const AtomState& state, const SimParams& params)
{
    if (!state.finite()) {
        throw Error("deriv: non-finite state");
    }
    return detail::deriv_unchecked(state, params);
}

// One classical fourth-order Runge-Kutta step of length h.
// Non-finite values propagate; callers check finiteness where it matters.
inline AtomState step(const AtomState& s, const SimParams& q, double h) noexcept
{
    using detail::advance;
    using detail::deriv_unchecked;
    const double h2 = 0.5 * h;
    const StateDerivative k1 = deriv_unchecked(s, q);
    const StateDerivative k2 = deriv_unchecked(advance(s, h2, k1), q);
    const StateDerivative k3 = deriv_unchecked(advance(s, h2, k2), q);
    const StateDerivative k4 = deriv_unchecked(advance(s, h, k3), q);
    const double w = h / 6.0;
    return {s.x + w * (k1.dx + 2.0 * (k2.dx + k3.dx) + k4.dx),
            s.p + w * (k1.dp + 2.0 * (k2.dp + k3.dp) + k4.dp),
            s.u + w * (k1.du + 2.0 * (k2.du + k3.du) + k4.du),
            s.v + w * (k1.dv + 2.0 * (k2.dv + k3.dv) + k4.dv),
            s.z + w * (k1.dz + 2.0 * (k2.dz + k3.dz) + k4.dz),
            s.tau + h};
}

// Total energy H = omega_r p^2 / 2 - u cos x - delta z / 2.
// Conserved by the flow when gamma = 0.
inline double energy(const AtomState& s, const SimParams& q) noexcept
{
    return 0.5 * q.omega_r * s.p * s.p - s.u * std::cos(s.x) - 0.5 * q.delta * s.z;
}

// Index of the last standing-wave node (cos x = 0) at or below x.
// Nodes sit at x = pi/2 + k pi.
inline long node_index(double x) noexcept
{
    return static_cast<long>(std::floor((x - 0.5 * std::numbers::pi) / std::numbers::pi));
}

// A sign change of cos x detected within one integration step.
struct NodeCrossing {
    double tau = 0.0;   // linear interpolation of the crossing time
    long node = 0;      // index k of the node at x = pi/2 + k pi
    AtomState after;    // state at the end of the step containing the crossing
};

struct IntegrationResult {
    AtomState final_state;
    std::size_t sample_count = 0;
    std::vector<NodeCrossing> crossings;
};

// Number of observer samples for a run of the given length:
// floor(duration / interval) + 1, or zero for an empty run.
inline std::size_t sample_count_for(double duration, double interval) noexcept
{
    if (duration <= 0.0) {
        return 0;
    }
    return static_cast<std::size_t>(std::floor(duration / interval * (1.0 + 1e-12))) + 1;
}

// Integrates for `duration`, invoking `observer(const AtomState&)` at
// tau0 + k * sample_interval (k = 0, 1, ...), and records every node crossing.
// Steps are shortened where needed to land exactly on sample times.
template <class Observer>
IntegrationResult integrate_observed(const AtomState& start, const SimParams& params, double duration,
                                     double sample_interval, Observer&& observer, double h = kDefaultStep)
{
    if (!(h > 0.0)) {
        throw Error("integrate_observed: step must be > 0");
    }
    if (duration < 0.0 || !std::isfinite(duration)) {
        throw Error("integrate_observed: duration must be >= 0");
    }
    IntegrationResult result{start, 0, {}};
    if (duration == 0.0) {
        return result;
    }
    if (!(sample_interval >= h)) {
        throw Error("integrate_observed: sample_interval must be >= step");
    }

    const std::size_t n_samples = sample_count_for(duration, sample_interval);
    const double tau0 = start.tau;
    const double tau_end = tau0 + duration;
    AtomState s = start;
    observer(static_cast<const AtomState&>(s));
    result.sample_count = 1;
    std::size_t next_sample = 1;

    while (s.tau < tau_end) {
        const bool sample_pending = next_sample < n_samples;
        const double target = sample_pending
            ? std::min(tau_end, tau0 + static_cast<double>(next_sample) * sample_interval)
            : tau_end;
        const double remaining = target - s.tau;
        const bool lands = remaining <= h * (1.0 + 1e-9);
        AtomState next = step(s, params, lands ? remaining : h);
        if (lands) {
            next.tau = target;
        }
        const long n0 = node_index(s.x);
        const long n1 = node_index(next.x);
        if (n1 != n0) {
            const long first = std::min(n0, n1) + 1;
            const long last = std::max(n0, n1);
            for (long k = first; k <= last; ++k) {
                const double xn = 0.5 * std::numbers::pi + static_cast<double>(k) * std::numbers::pi;
                const double frac = (xn - s.x) / (next.x - s.x);
                result.crossings.push_back({s.tau + frac * (next.tau - s.tau), k, next});
            }
        }
        s = next;
        if (lands && sample_pending) {
            observer(static_cast<const AtomState&>(s));
            ++result.sample_count;
            ++next_sample;
        }
    }
    result.final_state = s;
    return result;
}

inline IntegrationResult integrate(const AtomState& start, const SimParams& params, double duration,
                                   double h = kDefaultStep)
{
    return integrate_observed(start, params, duration, std::max(duration, h), [](const AtomState&) {}, h);
}

}  // namespace atomchaos
