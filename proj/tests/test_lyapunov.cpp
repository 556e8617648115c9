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


#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "atomchaos/lyapunov.hpp"

namespace atomchaos {
namespace {

constexpr double kPi = std::numbers::pi;

const SimParams kHam{0.0, 1e-5, -0.01};
const SimParams kIntegrable{0.0, 1e-5, 0.0};

LyapunovConfig short_run(double tau_max, double renorm = 10.0)
{
    LyapunovConfig c;
    c.tau_max = tau_max;
    c.renorm_interval = renorm;
    return c;
}

TEST(Variational, ZeroTangentGivesZero)
{
    const AtomState s{0.7, 900.0, 0.3, -0.2, 0.5, 0.0};
    const TangentVector d = variational_deriv(s, TangentVector{}, kHam);
    EXPECT_EQ(d.dx, 0.0);
    EXPECT_EQ(d.dp, 0.0);
    EXPECT_EQ(d.du, 0.0);
    EXPECT_EQ(d.dv, 0.0);
    EXPECT_EQ(d.dz, 0.0);
}

TEST(Variational, Substitution)
{
    const AtomState s{0.0, 900.0, 0.0, 0.4, -0.3, 0.0};
    const TangentVector dx_only{1.0, 0.0, 0.0, 0.0, 0.0};
    EXPECT_EQ(variational_deriv(s, dx_only, kHam).dp, 0.0);

    const AtomState r{0.5, 900.0, 0.3, -0.2, 0.6, 0.0};
    const TangentVector t{0.1, 0.2, 0.3, 0.4, 0.5};
    const TangentVector d = variational_deriv(r, t, kHam);
    const double sx = std::sin(0.5), cx = std::cos(0.5);
    EXPECT_DOUBLE_EQ(d.dx, 1e-5 * 0.2);
    EXPECT_DOUBLE_EQ(d.dp, -0.3 * cx * 0.1 - sx * 0.3);
    EXPECT_DOUBLE_EQ(d.du, -0.01 * 0.4);
    EXPECT_DOUBLE_EQ(d.dv, 0.01 * 0.3 + 2 * cx * 0.5 - 2 * 0.6 * sx * 0.1);
    EXPECT_DOUBLE_EQ(d.dz, -2 * cx * 0.4 + 2 * -0.2 * sx * 0.1);
}

TEST(Variational, RejectsDissipation)
{
    EXPECT_THROW(variational_deriv(AtomState{}, TangentVector::generic(), SimParams{3.3e-3, 1e-5, -0.01}), Error);
    EXPECT_THROW(max_lyapunov(AtomState{}, SimParams{3.3e-3, 1e-5, -0.01}, short_run(100)), Error);
}

TEST(Variational, MatchesFiniteDifference)
{
    const double eps = 1e-7;
    const AtomState s0{0.4, 1100.0, 0.2, -0.3, -std::sqrt(1 - 0.13), 0.0};
    const TangentVector dir{0.3, 0.5, -0.4, 0.2, 0.6};
    AtomState s = s0;
    TangentVector t = dir;
    AtomState sp{s0.x + eps * dir.dx, s0.p + eps * dir.dp, s0.u + eps * dir.du, s0.v + eps * dir.dv,
                 s0.z + eps * dir.dz, 0.0};
    for (int i = 0; i < 500; ++i) {
        step_with_tangent(s, t, kHam, 1e-2);
        sp = step(sp, kHam, 1e-2);
    }
    const double scale = t.norm();
    EXPECT_NEAR((sp.x - s.x) / eps, t.dx, 1e-4 * scale);
    EXPECT_NEAR((sp.p - s.p) / eps, t.dp, 1e-4 * scale);
    EXPECT_NEAR((sp.u - s.u) / eps, t.du, 1e-4 * scale);
    EXPECT_NEAR((sp.v - s.v) / eps, t.dv, 1e-4 * scale);
    EXPECT_NEAR((sp.z - s.z) / eps, t.dz, 1e-4 * scale);
}

TEST(StepWithTangent, StateMatchesPlainStep)
{
    AtomState a{0.9, 1300.0, 0.1, 0.2, -0.9, 0.0};
    AtomState b = a;
    TangentVector t = TangentVector::generic();
    for (int i = 0; i < 100; ++i) {
        step_with_tangent(a, t, kHam, 1e-2);
        b = step(b, kHam, 1e-2);
    }
    EXPECT_EQ(a.x, b.x);
    EXPECT_EQ(a.p, b.p);
    EXPECT_EQ(a.z, b.z);
}

TEST(MaxLyapunov, IntegrableLimitStaysNearZero)
{
    const double tau = 5e4;
    for (double x0 : {0.3, 2.0}) {
        for (double p0 : {800.0, 3000.0}) {
            const auto r = max_lyapunov(AtomState::ground(x0, p0), kIntegrable, short_run(tau));
            EXPECT_FALSE(r.failed);
            EXPECT_LT(std::abs(r.lambda), 10.0 / tau) << x0 << " " << p0;
        }
    }
}

TEST(MaxLyapunov, NoiseFloorDecaysWithLength)
{
    // Regular motion: log growth of the tangent is sub-linear, so lambda ~ ln(T)/T.
    const AtomState s = AtomState::ground(0.3, 1000.0);
    const double l1 = max_lyapunov(s, kIntegrable, short_run(1e4)).lambda;
    const double l2 = max_lyapunov(s, kIntegrable, short_run(8e4)).lambda;
    EXPECT_GT(l1, 0.0);
    EXPECT_LT(l2, 0.5 * l1);
}

TEST(MaxLyapunov, ChaoticTrajectoryAboveFloor)
{
    const AtomState s = AtomState::ground(0.3, 1000.0);
    const auto cfg = short_run(1e5);
    const auto var = max_lyapunov(s, kHam, cfg);
    const auto ben = max_lyapunov_two_trajectory(s, kHam, cfg);
    const double floor = std::abs(max_lyapunov(s, kIntegrable, cfg).lambda);
    ASSERT_FALSE(var.failed);
    ASSERT_FALSE(ben.failed);
    EXPECT_GT(var.lambda, 10.0 * floor);
    EXPECT_NEAR(ben.lambda / var.lambda, 1.0, 0.2);
    EXPECT_EQ(var.renorm_count, 10000u);
    EXPECT_DOUBLE_EQ(var.tau_total, 1e5);
}

TEST(MaxLyapunov, ConvergesWithLength)
{
    const AtomState s = AtomState::ground(0.3, 1000.0);
    const double l1 = max_lyapunov(s, kHam, short_run(1e5)).lambda;
    const double l2 = max_lyapunov(s, kHam, short_run(2e5)).lambda;
    EXPECT_NEAR(l2 / l1, 1.0, 0.1);
}

TEST(MaxLyapunov, RenormIntervalInvariance)
{
    const AtomState s = AtomState::ground(0.3, 1000.0);
    const double l10 = max_lyapunov(s, kHam, short_run(1e5, 10)).lambda;
    for (double r : {50.0, 100.0}) {
        EXPECT_NEAR(max_lyapunov(s, kHam, short_run(1e5, r)).lambda / l10, 1.0, 0.1) << r;
    }
}

TEST(MaxLyapunov, RejectsBadConfig)
{
    LyapunovConfig c;
    c.renorm_interval = 0.0;
    EXPECT_THROW(max_lyapunov(AtomState{}, kHam, c), Error);
    c = short_run(5.0, 10.0);
    EXPECT_THROW(max_lyapunov(AtomState{}, kHam, c), Error);
}

TEST(Classify, StrictThreshold)
{
    LyapunovResult r;
    r.lambda = 2e-3;
    EXPECT_TRUE(classify_chaotic(r, 5e-4));
    r.lambda = 1e-5;
    EXPECT_FALSE(classify_chaotic(r, 5e-4));
    r.lambda = 5e-4;
    EXPECT_FALSE(classify_chaotic(r, 5e-4));
    r.lambda = 1.0;
    r.failed = true;
    EXPECT_FALSE(classify_chaotic(r, 5e-4));
    EXPECT_THROW(classify_chaotic(r, 0.0), Error);
}

TEST(Classify, DefaultThreshold)
{
    EXPECT_DOUBLE_EQ(chaos_threshold(2e5, 1e-6), 5e-5);
    EXPECT_DOUBLE_EQ(chaos_threshold(2e5, 4e-5), 2e-4);
}

std::vector<LyapunovResult> with_lambdas(std::initializer_list<double> ls)
{
    std::vector<LyapunovResult> out;
    for (double l : ls) {
        LyapunovResult r;
        r.lambda = l;
        out.push_back(r);
    }
    return out;
}

TEST(ChaosStats, FractionExamples)
{
    EXPECT_EQ(tally_chaos(with_lambdas({1e-3, 2e-3, 5e-3}), 1e-4).Lambda, 1.0);
    EXPECT_EQ(tally_chaos(with_lambdas({1e-6, 2e-6, 0.0}), 1e-4).Lambda, 0.0);
    const auto half = tally_chaos(with_lambdas({1e-3, 1e-6, 2e-3, 2e-6}), 1e-4);
    EXPECT_EQ(half.Lambda, 0.5);
    EXPECT_EQ(half.n_chaotic, 2u);
    EXPECT_EQ(half.n_regular, 2u);
    EXPECT_EQ(half.threshold, 1e-4);
}

TEST(ChaosStats, FailedRunsExcluded)
{
    auto rs = with_lambdas({1e-3, 1e-6, 0.5});
    rs[2].failed = true;
    const auto st = tally_chaos(rs, 1e-4);
    EXPECT_EQ(st.n_failed, 1u);
    EXPECT_EQ(st.Lambda, 0.5);
    EXPECT_TRUE(std::isnan(st.lambdas[2]));
}

TEST(ChaosStats, MonotoneInThreshold)
{
    std::mt19937_64 g(3);
    std::vector<LyapunovResult> rs;
    for (int i = 0; i < 200; ++i) {
        LyapunovResult r;
        r.lambda = std::exponential_distribution<double>(1e4)(g);
        rs.push_back(r);
    }
    const auto base = tally_chaos(rs, 1e-6);
    double prev = 1.0;
    for (double th = 1e-6; th < 1e-3; th *= 1.5) {
        const double l = base.reclassified(th).Lambda;
        EXPECT_LE(l, prev);
        EXPECT_GE(l, 0.0);
        prev = l;
    }
}

TEST(ChaosEnsemble, InitialConditions)
{
    const auto e = chaos_ensemble(2000.0, 50, 0.02, 9, 3);
    ASSERT_EQ(e.size(), 50u);
    for (const auto& s : e) {
        EXPECT_GE(s.x, 0.0);
        EXPECT_LT(s.x, 2 * kPi);
        EXPECT_LE(std::abs(s.p / 2000.0 - 1.0), 0.02);
        EXPECT_EQ(s.z, -1.0);
        EXPECT_EQ(s.u, 0.0);
        EXPECT_EQ(s.v, 0.0);
    }
    const auto again = chaos_ensemble(2000.0, 50, 0.02, 9, 3);
    EXPECT_EQ(e.front().x, again.front().x);
    EXPECT_NE(e.front().x, chaos_ensemble(2000.0, 50, 0.02, 9, 4).front().x);
}

TEST(ChaosProbability, IntegrableEnsembleIsRegular)
{
    const auto starts = chaos_ensemble(1000.0, 4, 0.02, 1);
    const auto cfg = short_run(3e4);
    const auto st = chaos_probability(starts, kIntegrable, cfg, chaos_threshold(cfg.tau_max, 0.0));
    EXPECT_EQ(st.Lambda, 0.0);
    EXPECT_THROW(chaos_probability({}, kHam, cfg, 1e-4), Error);
}

TEST(ChaosProbability, ThreadCountDoesNotChangeResults)
{
    const auto starts = chaos_ensemble(1200.0, 6, 0.02, 2);
    const auto cfg = short_run(5e3);
    const auto a = lyapunov_ensemble(starts, kHam, cfg, 1);
    const auto b = lyapunov_ensemble(starts, kHam, cfg, 3);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].lambda, b[i].lambda);
    }
}

TEST(NoiseFloor, CalibrationIsSmall)
{
    const double floor = calibrate_noise_floor(kHam, {1000.0, 3000.0}, 2, short_run(3e4), 5);
    EXPECT_GT(floor, 0.0);
    EXPECT_LT(floor, 10.0 / 3e4);
}

}  // namespace
}  // namespace atomchaos
