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

// Maximal Lyapunov exponent of the Hamiltonian analogue (gamma = 0, no
// emissions) and the ensemble chaos probability built on it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "atomchaos/dynamics.hpp"
#include "atomchaos/parallel.hpp"
#include "atomchaos/rng.hpp"

namespace atomchaos {

// Perturbation of an AtomState (tau excluded).
struct TangentVector {
    double dx = 0.0;
    double dp = 0.0;
    double du = 0.0;
    double dv = 0.0;
    double dz = 0.0;

    [[nodiscard]] double norm() const { return std::sqrt(dx * dx + dp * dp + du * du + dv * dv + dz * dz); }

    [[nodiscard]] TangentVector scaled(double f) const { return {f * dx, f * dp, f * du, f * dv, f * dz}; }

    // Fixed generic start direction, unit length.
    static TangentVector generic()
    {
        const double c = 1.0 / std::sqrt(5.0);
        return {c, c, c, c, c};
    }
};

namespace detail {

inline TangentVector variational_unchecked(const AtomState& s, const TangentVector& t, const SimParams& q) noexcept
{
    const double sx = std::sin(s.x);
    const double cx = std::cos(s.x);
    return {q.omega_r * t.dp,
            -s.u * cx * t.dx - sx * t.du,
            q.delta * t.dv,
            -q.delta * t.du + 2.0 * cx * t.dz - 2.0 * s.z * sx * t.dx,
            -2.0 * cx * t.dv + 2.0 * s.v * sx * t.dx};
}

inline TangentVector axpy(const TangentVector& a, double h, const TangentVector& k) noexcept
{
    return {a.dx + h * k.dx, a.dp + h * k.dp, a.du + h * k.du, a.dv + h * k.dv, a.dz + h * k.dz};
}

inline void require_hamiltonian(const SimParams& q, const char* where)
{
    if (q.gamma != 0.0) {
        throw Error(std::string(where) + ": requires gamma = 0 (Hamiltonian analogue)");
    }
}

}  // namespace detail

// Linearized gamma = 0 flow: the Jacobian of the equations of motion applied
// to `tangent` at `state`. Throws Error when gamma != 0.
inline TangentVector variational_deriv(const AtomState& state, const TangentVector& tangent, const SimParams& params)
{
    detail::require_hamiltonian(params, "variational_deriv");
    return detail::variational_unchecked(state, tangent, params);
}

// RK4 step of the state together with its tangent vector.
inline void step_with_tangent(AtomState& s, TangentVector& t, const SimParams& q, double h) noexcept
{
    using detail::advance;
    using detail::axpy;
    using detail::deriv_unchecked;
    using detail::variational_unchecked;
    const double h2 = 0.5 * h;
    const StateDerivative k1 = deriv_unchecked(s, q);
    const TangentVector l1 = variational_unchecked(s, t, q);
    const AtomState s2 = advance(s, h2, k1);
    const TangentVector t2 = axpy(t, h2, l1);
    const StateDerivative k2 = deriv_unchecked(s2, q);
    const TangentVector l2 = variational_unchecked(s2, t2, q);
    const AtomState s3 = advance(s, h2, k2);
    const TangentVector t3 = axpy(t, h2, l2);
    const StateDerivative k3 = deriv_unchecked(s3, q);
    const TangentVector l3 = variational_unchecked(s3, t3, q);
    const AtomState s4 = advance(s, h, k3);
    const TangentVector t4 = axpy(t, h, l3);
    const StateDerivative k4 = deriv_unchecked(s4, q);
    const TangentVector l4 = variational_unchecked(s4, t4, q);
    const double w = h / 6.0;
    s = {s.x + w * (k1.dx + 2.0 * (k2.dx + k3.dx) + k4.dx),
         s.p + w * (k1.dp + 2.0 * (k2.dp + k3.dp) + k4.dp),
         s.u + w * (k1.du + 2.0 * (k2.du + k3.du) + k4.du),
         s.v + w * (k1.dv + 2.0 * (k2.dv + k3.dv) + k4.dv),
         s.z + w * (k1.dz + 2.0 * (k2.dz + k3.dz) + k4.dz),
         s.tau + h};
    t = {t.dx + w * (l1.dx + 2.0 * (l2.dx + l3.dx) + l4.dx),
         t.dp + w * (l1.dp + 2.0 * (l2.dp + l3.dp) + l4.dp),
         t.du + w * (l1.du + 2.0 * (l2.du + l3.du) + l4.du),
         t.dv + w * (l1.dv + 2.0 * (l2.dv + l3.dv) + l4.dv),
         t.dz + w * (l1.dz + 2.0 * (l2.dz + l3.dz) + l4.dz)};
}

struct LyapunovConfig {
    double tau_max = 2e5;
    double renorm_interval = 10.0;
    double step = kDefaultStep;
    double separation = 1e-8;  // initial distance for the two-trajectory estimate
};

struct LyapunovResult {
    double lambda = 0.0;        // finite-time maximal exponent [1/tau]
    double tau_total = 0.0;
    std::size_t renorm_count = 0;
    double noise_floor = 0.0;   // exponent of a reference integrable run, when known
    bool failed = false;
};

namespace detail {

inline void check_lyapunov_config(const LyapunovConfig& cfg)
{
    if (!(cfg.step > 0.0) || !(cfg.renorm_interval >= cfg.step) || !(cfg.tau_max >= cfg.renorm_interval)) {
        throw Error("lyapunov: need 0 < step <= renorm_interval <= tau_max");
    }
}

inline std::size_t steps_for(double span, double h) { return std::max<std::size_t>(1, std::llround(span / h)); }

}  // namespace detail

// Variational estimate: co-integrates the tangent vector and renormalizes it
// every renorm_interval; lambda = sum(ln growth) / tau_total.
inline LyapunovResult max_lyapunov(const AtomState& start, const SimParams& params, const LyapunovConfig& cfg = {})
{
    detail::require_hamiltonian(params, "max_lyapunov");
    detail::check_lyapunov_config(cfg);
    const std::size_t per_block = detail::steps_for(cfg.renorm_interval, cfg.step);
    const std::size_t blocks = std::max<std::size_t>(1, std::llround(cfg.tau_max / (cfg.step * per_block)));

    AtomState s = start;
    TangentVector t = TangentVector::generic();
    LyapunovResult r;
    double log_sum = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
        for (std::size_t i = 0; i < per_block; ++i) {
            step_with_tangent(s, t, params, cfg.step);
        }
        const double g = t.norm();
        if (!std::isfinite(g) || g <= 0.0 || !s.finite()) {
            r.failed = true;
            break;
        }
        log_sum += std::log(g);
        t = t.scaled(1.0 / g);
        ++r.renorm_count;
    }
    r.tau_total = static_cast<double>(r.renorm_count * per_block) * cfg.step;
    r.lambda = r.tau_total > 0.0 ? log_sum / r.tau_total : 0.0;
    return r;
}

// Two-trajectory estimate: a companion orbit at distance cfg.separation is
// pulled back along the separation vector every renorm_interval.
inline LyapunovResult max_lyapunov_two_trajectory(const AtomState& start, const SimParams& params,
                                                  const LyapunovConfig& cfg = {})
{
    detail::require_hamiltonian(params, "max_lyapunov_two_trajectory");
    detail::check_lyapunov_config(cfg);
    const std::size_t per_block = detail::steps_for(cfg.renorm_interval, cfg.step);
    const std::size_t blocks = std::max<std::size_t>(1, std::llround(cfg.tau_max / (cfg.step * per_block)));
    const double d0 = cfg.separation;

    AtomState a = start;
    const TangentVector dir = TangentVector::generic();
    AtomState b{a.x + d0 * dir.dx, a.p + d0 * dir.dp, a.u + d0 * dir.du, a.v + d0 * dir.dv, a.z + d0 * dir.dz, a.tau};
    LyapunovResult r;
    double log_sum = 0.0;
    for (std::size_t blk = 0; blk < blocks; ++blk) {
        for (std::size_t i = 0; i < per_block; ++i) {
            a = step(a, params, cfg.step);
            b = step(b, params, cfg.step);
        }
        const TangentVector sep{b.x - a.x, b.p - a.p, b.u - a.u, b.v - a.v, b.z - a.z};
        const double d = sep.norm();
        if (!std::isfinite(d) || d <= 0.0 || !a.finite()) {
            r.failed = true;
            break;
        }
        log_sum += std::log(d / d0);
        const TangentVector back = sep.scaled(d0 / d);
        b = {a.x + back.dx, a.p + back.dp, a.u + back.du, a.v + back.dv, a.z + back.dz, a.tau};
        ++r.renorm_count;
    }
    r.tau_total = static_cast<double>(r.renorm_count * per_block) * cfg.step;
    r.lambda = r.tau_total > 0.0 ? log_sum / r.tau_total : 0.0;
    return r;
}

// Heaviside surrogate: chaotic iff lambda > threshold (strict).
inline bool classify_chaotic(const LyapunovResult& result, double threshold)
{
    if (!(threshold > 0.0)) {
        throw Error("classify_chaotic: threshold must be > 0");
    }
    return !result.failed && result.lambda > threshold;
}

// Classification threshold max(10 / tau_max, 5 * noise_floor).
inline double chaos_threshold(double tau_max, double noise_floor)
{
    return std::max(10.0 / tau_max, 5.0 * noise_floor);
}

struct ChaosStats {
    double Lambda = 0.0;
    std::size_t n_chaotic = 0;
    std::size_t n_regular = 0;
    std::size_t n_failed = 0;
    double threshold = 0.0;
    std::vector<double> lambdas;  // per-trajectory exponents in ensemble order, NaN if failed

    // Re-classifies the stored exponents with another threshold.
    [[nodiscard]] ChaosStats reclassified(double new_threshold) const;
};

inline ChaosStats tally_chaos(const std::vector<LyapunovResult>& results, double threshold)
{
    ChaosStats stats;
    stats.threshold = threshold;
    stats.lambdas.reserve(results.size());
    for (const auto& r : results) {
        stats.lambdas.push_back(r.failed ? std::numeric_limits<double>::quiet_NaN() : r.lambda);
        if (r.failed) {
            ++stats.n_failed;
        } else if (classify_chaotic(r, threshold)) {
            ++stats.n_chaotic;
        } else {
            ++stats.n_regular;
        }
    }
    const std::size_t used = stats.n_chaotic + stats.n_regular;
    stats.Lambda = used > 0 ? static_cast<double>(stats.n_chaotic) / static_cast<double>(used) : 0.0;
    return stats;
}

inline ChaosStats ChaosStats::reclassified(double new_threshold) const
{
    std::vector<LyapunovResult> rs;
    rs.reserve(lambdas.size());
    for (double l : lambdas) {
        LyapunovResult r;
        r.lambda = l;
        r.failed = std::isnan(l);
        rs.push_back(r);
    }
    return tally_chaos(rs, new_threshold);
}

// Ground-state atoms with x0 uniform on [0, 2 pi) and p0 jittered by
// +-jitter (relative) around p_center.
inline std::vector<AtomState> chaos_ensemble(double p_center, std::size_t n, double jitter, std::uint64_t seed,
                                             std::uint64_t group = 0)
{
    std::vector<AtomState> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng(seed, stream_index(StreamPurpose::ChaosEnsemble, group, i));
        const double x0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
        const double p0 = p_center * (1.0 + rng.uniform(-jitter, jitter));
        out.push_back(AtomState::ground(x0, p0));
    }
    return out;
}

// Maximal exponents for every initial state, computed in parallel.
inline std::vector<LyapunovResult> lyapunov_ensemble(const std::vector<AtomState>& starts, const SimParams& params,
                                                     const LyapunovConfig& cfg, unsigned threads = 1)
{
    detail::require_hamiltonian(params, "lyapunov_ensemble");
    std::vector<LyapunovResult> results(starts.size());
    parallel_for(starts.size(), threads, [&](std::size_t i) { results[i] = max_lyapunov(starts[i], params, cfg); });
    return results;
}

// Fraction of the ensemble with lambda above threshold.
inline ChaosStats chaos_probability(const std::vector<AtomState>& starts, const SimParams& params,
                                    const LyapunovConfig& cfg, double threshold, unsigned threads = 1)
{
    if (starts.empty()) {
        throw Error("chaos_probability: empty ensemble");
    }
    return tally_chaos(lyapunov_ensemble(starts, params, cfg, threads), threshold);
}

// Largest |lambda| over integrable (delta = 0) reference runs at the given
// momenta; the finite-time exponent of a regular orbit sets the floor that
// separates numerical noise from genuine instability.
inline double calibrate_noise_floor(const SimParams& params, const std::vector<double>& momenta,
                                    std::size_t per_momentum, const LyapunovConfig& cfg, std::uint64_t seed,
                                    unsigned threads = 1)
{
    SimParams integrable = params.hamiltonian();
    integrable.delta = 0.0;
    std::vector<AtomState> starts;
    for (std::size_t k = 0; k < momenta.size(); ++k) {
        for (std::size_t i = 0; i < per_momentum; ++i) {
            RngStream rng(seed, stream_index(StreamPurpose::NoiseFloor, k, i));
            starts.push_back(AtomState::ground(rng.uniform(0.0, 2.0 * std::numbers::pi), momenta[k]));
        }
    }
    const auto results = lyapunov_ensemble(starts, integrable, cfg, threads);
    double floor = 0.0;
    for (const auto& r : results) {
        if (!r.failed) {
            floor = std::max(floor, std::abs(r.lambda));
        }
    }
    return floor;
}

}  // namespace atomchaos
