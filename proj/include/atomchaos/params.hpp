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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>
#include <string>

namespace atomchaos {

// Raised for invalid parameters, malformed inputs and violated preconditions.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Normalized model parameters. Time is measured in units of 1/Omega,
// momentum in units of hbar*k_f and position as the phase k_f*X.
struct SimParams {
    double gamma = 3.3e-3;   // Gamma / Omega
    double omega_r = 1e-5;   // hbar k_f^2 / (m_a Omega)
    double delta = -0.01;    // (omega_f - omega_a) / Omega

    // Throws Error when a field is out of its admissible range.
    void validate() const
    {
        if (!std::isfinite(gamma) || gamma < 0.0) {
            throw Error("params.gamma must be ≥ 0");
        }
        if (!std::isfinite(omega_r) || omega_r <= 0.0) {
            throw Error("params.omega_r must be > 0");
        }
        if (!std::isfinite(delta) || std::abs(delta) >= 1.0) {
            throw Error("params.delta must satisfy |delta| < 1");
        }
    }

    // The analytic diffusion laws assume |delta| << 1.
    [[nodiscard]] bool weak_detuning() const { return std::abs(delta) < 0.1; }

    // Same parameters with dissipation switched off.
    [[nodiscard]] SimParams hamiltonian() const
    {
        SimParams out = *this;
        out.gamma = 0.0;
        return out;
    }

    friend bool operator==(const SimParams&, const SimParams&) = default;
};

// Dimensional constants used to convert normalized observables to SI units.
// Defaults describe cesium on the D2 line driven at Omega = 1e10 1/s.
inline std::string short_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

struct PhysicalConstants {
    double rabi_frequency = 1e10;          // Omega [1/s]
    double natural_linewidth = 3.2e7;      // Gamma [1/s]
    double wavelength = 852.1e-9;          // lambda_a [m]
    double atomic_mass = 132.905451933 * 1.66053906660e-27;  // m_a [kg]
    double reduced_planck = 1.054571817e-34;                  // hbar [J s]
    double boltzmann = 1.380649e-23;                          // k_B [J/K]

    [[nodiscard]] double wavenumber() const { return 2.0 * std::numbers::pi / wavelength; }

    // Gamma / Omega implied by these constants.
    [[nodiscard]] double implied_gamma() const { return natural_linewidth / rabi_frequency; }

    // hbar k_f^2 / (m_a Omega) implied by these constants.
    [[nodiscard]] double implied_omega_r() const
    {
        const double k = wavenumber();
        return reduced_planck * k * k / (atomic_mass * rabi_frequency);
    }

    // Recoil temperature scale hbar^2 k_f^2 / (m_a k_B) [K].
    [[nodiscard]] double temperature_unit() const
    {
        const double hk = reduced_planck * wavenumber();
        return hk * hk / (atomic_mass * boltzmann);
    }

    void validate() const
    {
        auto positive = [](double value, const char* name) {
            if (!std::isfinite(value) || value <= 0.0) {
                throw Error(std::string("constants.") + name + " must be > 0");
            }
        };
        positive(rabi_frequency, "rabi_frequency");
        positive(natural_linewidth, "natural_linewidth");
        positive(wavelength, "wavelength");
        positive(atomic_mass, "atomic_mass");
        positive(reduced_planck, "reduced_planck");
        positive(boltzmann, "boltzmann");
    }

    // Relative mismatch between the normalized parameters and the values
    // implied by the constants; zero-gamma (Hamiltonian) runs skip the gamma term.
    [[nodiscard]] double consistency_mismatch(const SimParams& params) const
    {
        double worst = std::abs(implied_omega_r() - params.omega_r) / params.omega_r;
        if (params.gamma > 0.0) {
            worst = std::max(worst, std::abs(implied_gamma() - params.gamma) / params.gamma);
        }
        return worst;
    }

    // Throws Error naming the offending quantity when the mismatch exceeds tolerance.
    void check_consistency(const SimParams& params, double tolerance = 0.01) const
    {
        const double og = params.gamma > 0.0
            ? std::abs(implied_gamma() - params.gamma) / params.gamma : 0.0;
        if (og > tolerance) {
            throw Error("constants: natural_linewidth/rabi_frequency = " + short_number(implied_gamma())
                        + " is inconsistent with params.gamma = " + short_number(params.gamma));
        }
        const double orr = std::abs(implied_omega_r() - params.omega_r) / params.omega_r;
        if (orr > tolerance) {
            throw Error("constants: hbar*k_f^2/(m_a*rabi_frequency) = " + short_number(implied_omega_r())
                        + " is inconsistent with params.omega_r = " + short_number(params.omega_r));
        }
    }

    friend bool operator==(const PhysicalConstants&, const PhysicalConstants&) = default;
};

}  // namespace atomchaos
