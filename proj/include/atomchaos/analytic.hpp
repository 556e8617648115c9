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

// Closed-form transport theory for fast atoms: energy mapping across
// emissions, node-crossing maps for the dipole component u, the diffusion
// laws in the chaotic and regular regimes, and the derived SI observables.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>

#include "atomchaos/params.hpp"
#include "atomchaos/rng.hpp"

namespace atomchaos {

// ---------------------------------------------------------------------------
// Energy mapping

struct EnergyMapInputs {
    double H_prev = 0.0;           // energy just after the previous emission
    double x = 0.0;                // state just before the emission
    double p = 0.0;
    double u = 0.0;
    double z = -1.0;
    double recoil = 0.0;
    double interval = 0.0;         // tau_j - tau_{j-1}
    double mean_saturation = 0.0;  // <1 - z^2> over a Rabi-averaging window
};

// Energy just after the j-th emission given the state just before it.
inline double energy_map(const EnergyMapInputs& in, const SimParams& q)
{
    if (!(in.interval > 0.0)) {
        throw Error("energy_map: interval must be > 0");
    }
    const double d = q.delta;
    return in.H_prev + q.omega_r * in.p * in.recoil + 0.5 * q.omega_r * in.recoil * in.recoil + 0.5 * d
         + in.u * std::cos(in.x) + 0.5 * d * in.z + 0.25 * d * q.gamma * in.mean_saturation * in.interval;
}

// Kinetic energy dominates the optical potential by `margin`:
// omega_r p^2 / 2 >= margin * |u cos x + delta z / 2|.
inline bool weak_raman_nath(const SimParams& q, double p, double x, double u, double z, double margin = 10.0)
{
    return 0.5 * q.omega_r * p * p >= margin * std::abs(u * std::cos(x) + 0.5 * q.delta * z);
}

// Mean momentum of an atom with energy H in the weak Raman-Nath regime.
inline double momentum_from_energy(double H, const SimParams& q) { return std::sqrt(2.0 * H / q.omega_r); }

// Local period of Rabi oscillations, 2 pi / sqrt(delta^2 + 2); the
// field amplitude 2 cos x is replaced by its rms value sqrt(2).
inline double rabi_period(const SimParams& q) { return 2.0 * std::numbers::pi / std::sqrt(q.delta * q.delta + 2.0); }

// Momentum diffusion from the spread of energy increments across emissions:
// Var[dH] / (2 omega_r^2 p^2 <dtau>). Degenerate samples give 0.
inline double diffusion_from_energy_increments(std::span<const double> increments, double p, double mean_interval,
                                               const SimParams& q)
{
    if (increments.size() < 30) {
        throw Error("diffusion_from_energy_increments: need at least 30 increments");
    }
    if (!(p > 0.0) || !(mean_interval > 0.0)) {
        throw Error("diffusion_from_energy_increments: p and mean_interval must be > 0");
    }
    // exact test: a summed mean of equal values need not reproduce them
    if (std::all_of(increments.begin(), increments.end(), [&](double d) { return d == increments.front(); })) {
        return 0.0;
    }
    double mean = 0.0;
    for (double d : increments) {
        mean += d;
    }
    mean /= static_cast<double>(increments.size());
    double var = 0.0;
    for (double d : increments) {
        var += (d - mean) * (d - mean);
    }
    var /= static_cast<double>(increments.size());
    if (!(var > 0.0)) {
        return 0.0;
    }
    return var / (2.0 * q.omega_r * q.omega_r * p * p * mean_interval);
}

// ---------------------------------------------------------------------------
// Node-crossing maps for u

// Map state between two emissions. `m` counts node crossings since the last
// emission; v0 and z0 are the Bloch components frozen at the nodes (regular
// regime); `phase` is the last random phase drawn (chaotic regime).
struct UMapState {
    double u = 0.0;
    int m = 0;
    double v0 = 0.0;
    double z0 = 0.0;
    double phase = 0.0;

    // Emission: u -> 0 and the crossing counter restarts.
    void reset()
    {
        u = 0.0;
        m = 0;
    }
};

// Kick amplitude |delta| sqrt(pi / (omega_r p)) of the chaotic map.
inline double u_kick_amplitude(const SimParams& q, double p) { return std::abs(q.delta) * std::sqrt(std::numbers::pi / (q.omega_r * p)); }

// Chaotic-regime crossing with a given phase.
inline UMapState u_map_chaotic(UMapState s, const SimParams& q, double p, double phase)
{
    if (!(p > 0.0)) {
        throw Error("u_map_chaotic: p must be > 0");
    }
    s.u += u_kick_amplitude(q, p) * std::sin(phase);
    s.phase = phase;
    ++s.m;
    return s;
}

// Chaotic-regime crossing with a random phase.
// FullTurn draws phi on [0, 2 pi) so the kicks have zero mean, which is what the
// simulated u sequence shows between emissions. HalfTurn keeps phi on [0, pi]
// literally; sin(phi) >= 0 there and u drifts by 2A/pi per crossing.
enum class PhaseLaw { FullTurn, HalfTurn };

inline UMapState u_map_chaotic(const UMapState& s, const SimParams& q, double p, RngStream& rng,
                               PhaseLaw law = PhaseLaw::FullTurn)
{
    const double top = law == PhaseLaw::FullTurn ? 2.0 * std::numbers::pi : std::numbers::pi;
    return u_map_chaotic(s, q, p, rng.uniform(0.0, top));
}

// Regular-regime (strong Raman-Nath) crossing: deterministic ladder whose
// odd and even rungs differ through the (-1)^m terms.
inline UMapState u_map_regular(UMapState s, const SimParams& q, double p)
{
    if (!(p > 0.0)) {
        throw Error("u_map_regular: p must be > 0");
    }
    ++s.m;
    const double sign = (s.m % 2 == 0) ? 1.0 : -1.0;
    const double arg = 2.0 / (q.omega_r * p) - 0.25 * std::numbers::pi;
    const double root = std::sqrt(std::numbers::pi / (q.omega_r * p));
    s.u += q.delta * (root * (s.v0 * std::cos(arg) + sign * s.z0 * std::sin(arg)) + sign * s.z0);
    return s;
}

// Mean number of node crossings between emissions, 2 omega_r p / (gamma pi).
inline double mean_crossings(const SimParams& q, double p)
{
    if (!(p > 0.0) || !(q.gamma > 0.0)) {
        throw Error("mean_crossings: p and gamma must be > 0");
    }
    return 2.0 * q.omega_r * p / (q.gamma * std::numbers::pi);
}

// ---------------------------------------------------------------------------
// Diffusion laws

// Recoil-noise floor gamma / 12 shared by every regime.
inline double recoil_floor(const SimParams& q) { return q.gamma / 12.0; }

// Fully chaotic Hamiltonian transport: gamma/12 + delta^2 / (8 omega_r^2 p^2).
inline double d_chaotic(const SimParams& q, double p)
{
    if (!(p > 0.0)) {
        throw Error("d_chaotic: p must be > 0");
    }
    return recoil_floor(q) + q.delta * q.delta / (8.0 * q.omega_r * q.omega_r * p * p);
}

enum class RegularForm { Averaged, Oscillatory };

// Regular Hamiltonian transport at very small detuning. The oscillatory form
// keeps cos^2(2/(omega_r p) - pi/4); the averaged form replaces it by 1/2:
// gamma/12 + delta^2 / (8 gamma omega_r p pi).
inline double d_regular(const SimParams& q, double p, RegularForm form = RegularForm::Averaged)
{
    if (!(p > 0.0) || !(q.gamma > 0.0)) {
        throw Error("d_regular: p and gamma must be > 0");
    }
    const double base = q.delta * q.delta / (4.0 * q.gamma * q.omega_r * p * std::numbers::pi);
    if (form == RegularForm::Averaged) {
        return recoil_floor(q) + 0.5 * base;
    }
    const double c = std::cos(2.0 / (q.omega_r * p) - 0.25 * std::numbers::pi);
    return recoil_floor(q) + base * c * c;
}

// Linear interpolation between the regular (Lambda = 0) and chaotic
// (Lambda = 1) laws, written in its expanded form.
inline double d_blended(const SimParams& q, double p, double Lambda)
{
    if (!(Lambda >= 0.0 && Lambda <= 1.0)) {
        throw Error("d_blended: Lambda must lie in [0, 1]");
    }
    if (!(p > 0.0) || !(q.gamma > 0.0)) {
        throw Error("d_blended: p and gamma must be > 0");
    }
    const double wp = q.omega_r * p;
    return recoil_floor(q)
         + q.delta * q.delta / (8.0 * wp) * ((1.0 - Lambda) / (q.gamma * std::numbers::pi) + Lambda / wp);
}

// ---------------------------------------------------------------------------
// SI observables

struct Heating {
    double temperature = 0.0;  // [K]
    double rate = 0.0;         // dT/dt [K/s]
};

// T = hbar^2 k_f^2 sigma_p^2 / (m_a k_B); dT/dt = 2 hbar^2 k_f^2 Omega D_p / (m_a k_B).
inline Heating temperature_and_heating(double sigma_p2, double D_p, const PhysicalConstants& c)
{
    if (!(sigma_p2 >= 0.0) || !(D_p >= 0.0)) {
        throw Error("temperature_and_heating: sigma_p^2 and D_p must be >= 0");
    }
    const double unit = c.temperature_unit();
    return {unit * sigma_p2, 2.0 * unit * c.rabi_frequency * D_p};
}

// Position variance of a cloud with constant diffusion:
// sigma_x0^2 + (1/2) omega_r^2 sigma_p0^2 tau^2 + (2/3) D_p omega_r^2 tau^3.
inline double cloud_variance(double sigma_x0_2, double sigma_p0_2, double D_p, const SimParams& q, double tau)
{
    const double w2 = q.omega_r * q.omega_r;
    return sigma_x0_2 + 0.5 * w2 * sigma_p0_2 * tau * tau + (2.0 / 3.0) * D_p * w2 * tau * tau * tau;
}

// Linear cloud size L = 2 sigma_x / k_f [m] for a phase variance sigma_x^2.
inline double cloud_size(double sigma_x2, const PhysicalConstants& c) { return 2.0 * std::sqrt(sigma_x2) / c.wavenumber(); }

// The cloud law assumes tau << p / F and sigma_p << <p>; factor-20 margins.
inline bool cloud_law_valid(double tau, double mean_p, double sigma_p, double friction)
{
    const bool horizon = friction == 0.0 || tau <= 0.05 * std::abs(mean_p / friction);
    return horizon && sigma_p <= 0.05 * std::abs(mean_p);
}

}  // namespace atomchaos
