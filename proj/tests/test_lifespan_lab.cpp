// Copyright 2026 The qnls Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "qnls/lifespan_lab.hpp"

#include "test_helpers.hpp"

#include <gtest/gtest.h>

namespace qnls
{
namespace
{

const Grid kXi(512, 32.0);

// The wide profile reaches the asymptotic regime at desk-scale lifespans.
Field sweep_psi() { return normalize_profile(testing::gaussian(kXi, 0.0, 2.0, 0.0, Side::frequency), 1.0, SobolevIndex(1)); }

const std::vector<double> kEps{0.25, 0.4, 0.5, 0.63, 1.0};

TEST(DetectLifespan, ZeroDataNeverCrosses)
{
    const auto c = NonlinearityCase::resonant(QChoice::u2_squared);
    EXPECT_THROW(detect_lifespan(sweep_psi(), c, 0.0), NoCrossing);
    EXPECT_THROW(detect_lifespan(sweep_psi(), c, 1.5), InvalidArgument);
    EXPECT_THROW(detect_lifespan(sweep_psi(), c.detuned(0.2), 0.8), InvalidArgument);
}

TEST(DetectLifespan, ShortHorizonIsReported)
{
    LifespanControls ctl;
    ctl.horizon = 10.0;
    try
    {
        detect_lifespan(sweep_psi(), NonlinearityCase::resonant(QChoice::u2_squared), 0.5, ctl);
        FAIL() << "expected NoCrossing";
    }
    catch (const NoCrossing& e)
    {
        EXPECT_EQ(e.horizon(), 10.0);
        EXPECT_GT(e.max_seen(), 0.0);
        EXPECT_LT(e.max_seen(), 1.0);
    }
}

TEST(DetectLifespan, HalvingEpsScalesTheLifespan)
{
    const Field psi = sweep_psi();
    const auto c1 = NonlinearityCase::resonant(QChoice::u2_squared);
    const double r1 = detect_lifespan(psi, c1, 0.4).T_eps / detect_lifespan(psi, c1, 0.8).T_eps;
    EXPECT_GT(r1, 16.0 * 0.8);
    EXPECT_LT(r1, 16.0 * 1.25);
    const auto c2 = NonlinearityCase::resonant(QChoice::u1_u2);
    const double r2 = detect_lifespan(psi, c2, 0.4).T_eps / detect_lifespan(psi, c2, 0.8).T_eps;
    EXPECT_GT(r2, 64.0 * 0.75);
    EXPECT_LT(r2, 64.0 * 1.35);
}

TEST(DetectLifespan, RecordIsConsistentWithTheCrossing)
{
    const auto c = NonlinearityCase::resonant(QChoice::u2_squared);
    const auto r = detect_lifespan(sweep_psi(), c, 0.8);
    EXPECT_GT(r.T_eps, 1.0);
    EXPECT_LT(r.detection_tol, 1e-8 * r.T_eps);
    EXPECT_EQ(r.nl.tag, c.tag);
    // Even data: the first crossing sits at the origin.
    EXPECT_NEAR(r.x_star, 0.0, 1e-6 * r.T_eps);
}

TEST(Sweep, CaseOneReproducesTheQuarticLaw)
{
    const auto c = NonlinearityCase::resonant(QChoice::u2_squared);
    const auto s = sweep(sweep_psi(), c, {1.0, 0.4, 0.25, 0.5, 0.63}, {}, 2);
    ASSERT_EQ(s.records.size(), 5u);
    for (std::size_t i = 0; i < kEps.size(); ++i)
        EXPECT_EQ(s.records[i].eps, kEps[i]);
    EXPECT_NEAR(s.fit.exponent, -4.0, 0.15);
    EXPECT_LT(s.fit.residual, 0.05);
    EXPECT_TRUE(s.strictly_decreasing());
    EXPECT_EQ(s.order, 4);
    EXPECT_GT(s.kappa_hat, 0.0);
    EXPECT_LT(s.K_hat / s.kappa_hat, 10.0);

    const auto serial = sweep(sweep_psi(), c, kEps, {}, 1);
    for (std::size_t i = 0; i < kEps.size(); ++i)
        EXPECT_EQ(serial.records[i].T_eps, s.records[i].T_eps);
}

TEST(Sweep, RejectsShortRepeatedOrNarrowLists)
{
    const auto c = NonlinearityCase::resonant(QChoice::u2_squared);
    EXPECT_THROW(sweep(sweep_psi(), c, {0.5, 0.8, 1.0}), InvalidArgument);
    EXPECT_THROW(sweep(sweep_psi(), c, {0.5, 0.5, 0.8, 1.0}), InvalidArgument);
    EXPECT_THROW(sweep(sweep_psi(), c, {0.4, 0.5, 0.8, 1.0}), InvalidArgument);
}

TEST(Sweep, FailingMemberPropagates)
{
    LifespanControls ctl;
    ctl.horizon = 100.0;
    EXPECT_THROW(sweep(sweep_psi(), NonlinearityCase::resonant(QChoice::u2_squared), kEps, ctl, 2), NoCrossing);
}

TEST(Detune, ZeroDeltaMatchesDetection)
{
    const auto c = NonlinearityCase::resonant(QChoice::u2_squared);
    const Field psi = sweep_psi();
    const auto rec = detect_lifespan(psi, c, 0.8);
    const auto rep = detune_experiment(psi, c, {0.0}, 0.8);
    EXPECT_EQ(rep.horizon, rec.T_eps);
    ASSERT_EQ(rep.rows.size(), 1u);
    EXPECT_TRUE(rep.rows[0].crossed);
    EXPECT_NEAR(rep.rows[0].t_at_max, rec.T_eps, 1e-9 * rec.T_eps);
}

TEST(Detune, RowsFollowTheRequestedDeltas)
{
    const auto c = NonlinearityCase::resonant(QChoice::u2_squared);
    const auto rep = detune_experiment(sweep_psi(), c, {0.1, -0.1}, 0.8, 20.0);
    ASSERT_EQ(rep.rows.size(), 2u);
    EXPECT_DOUBLE_EQ(rep.rows[0].m3, 1.1 * c.masses.m3);
    EXPECT_DOUBLE_EQ(rep.rows[1].m3, 0.9 * c.masses.m3);
    for (const auto& r : rep.rows)
    {
        EXPECT_FALSE(r.crossed);
        EXPECT_GT(r.max_v3, 0.0);
        EXPECT_LE(r.t_at_max, 20.0);
    }
    EXPECT_THROW(detune_experiment(sweep_psi(), c, {-1.0}, 0.8, 20.0), InvalidArgument);
}

TEST(LowerBoundProbe, DeterministicForASeed)
{
    const auto c = NonlinearityCase::resonant(QChoice::u2_squared);
    const Field base = sweep_psi();
    const auto a = general_data_lower_bound_probe(7, 0.8, c, 2, base, 1.0, 1e3, ProbeMode::random_phase);
    const auto b = general_data_lower_bound_probe(7, 0.8, c, 2, base, 1.0, 1e3, ProbeMode::random_phase);
    ASSERT_EQ(a.T.size(), 2u);
    EXPECT_EQ(a.T, b.T);
    EXPECT_NE(a.T[0], a.T[1]);
    EXPECT_DOUBLE_EQ(a.lower, std::pow(0.8, -4));
    EXPECT_EQ(a.min_T, std::min(a.T[0], a.T[1]));
    const auto g = general_data_lower_bound_probe(8, 0.8, c, 2, base, 1.0, 1e3, ProbeMode::general);
    EXPECT_TRUE(g.all_above_lower);
}

} // namespace
} // namespace qnls
