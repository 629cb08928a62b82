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

#include "qnls/hopf_cole.hpp"

#include "test_helpers.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

namespace qnls
{
namespace
{

using testing::max_abs_diff;

TEST(NormalizeProfile, GaussianMatchesQuadratureOracle)
{
    const Grid xi(512, 40.0);
    const Field raw = Field::sample(xi, [](double x) { return cd(std::exp(-x * x)); }, Side::frequency);
    const Field psi = normalize_profile(raw, 1.0, SobolevIndex(1));
    // F_1^{-1} e^{-xi^2} = e^{-x^2/4} / sqrt(2); its H^1 norm by adaptive quadrature.
    using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
    const double inf = std::numeric_limits<double>::infinity();
    const double l2 = std::sqrt(GK::integrate([](double x) { return 0.5 * std::exp(-x * x / 2); }, -inf, inf));
    const double d1 =
        std::sqrt(GK::integrate([](double x) { return 0.5 * x * x / 4 * std::exp(-x * x / 2); }, -inf, inf));
    const double expected_scale = 1.0 / (l2 + d1);
    EXPECT_NEAR(std::abs(psi[256] / raw[256]), expected_scale, 1e-12);
    EXPECT_NEAR(sobolev_norm(fourier_m(psi, 1.0, Direction::inverse), 1), 1.0, 1e-12);
}

TEST(NormalizeProfile, IdempotentAndScaleInvariant)
{
    const Grid xi(512, 32.0);
    const Field psi = normalize_profile(testing::gaussian(xi, 0.5, 1.3, 0.2, Side::frequency), 2.0, SobolevIndex(2));
    EXPECT_LT(max_abs_diff(normalize_profile(psi, 2.0, SobolevIndex(2)), psi), 1e-12);
    EXPECT_LT(max_abs_diff(normalize_profile(psi * cd(2.0), 2.0, SobolevIndex(2)), psi), 1e-12);
    EXPECT_THROW(normalize_profile(Field(xi, Side::frequency), 1.0, SobolevIndex(1)), InvalidArgument);
    EXPECT_THROW(normalize_profile(testing::gaussian(xi, 15.0, 1.0, 0.0, Side::frequency), 1.0, SobolevIndex(1)),
                 InvalidArgument);
}

TEST(GaugeCondition, TruthTableMatchesTheFourPairings)
{
    for (QChoice q : all_q_choices)
    {
        for (QChoice masses_of : all_q_choices)
        {
            const NonlinearityCase c{q, resonant_masses(masses_of)};
            const bool expected = q == masses_of || (q == QChoice::abs_u2_u2 && masses_of == QChoice::abs_u2_u2);
            // 1:2:m3 ratios are distinct across the four cases, so only the diagonal holds.
            EXPECT_EQ(gauge_condition_holds(c), expected) << to_string(q) << " with masses of " << to_string(masses_of);
        }
        const auto res = NonlinearityCase::resonant(q);
        EXPECT_FALSE(gauge_condition_holds(res.detuned(0.2)));
        EXPECT_FALSE(gauge_condition_holds(res.detuned(-0.2)));
    }
    EXPECT_FALSE(gauge_condition_holds({QChoice::u2_squared, MassTriple(1, 2, 5)}));
}

TEST(Homogeneity, AllFourChoicesAreQuadratic)
{
    for (QChoice q : all_q_choices)
        EXPECT_TRUE(homogeneity_holds(NonlinearityCase::resonant(q)));
    const cd z2{1.0, 1.0};
    EXPECT_NEAR(std::abs(evaluate_q(QChoice::abs_u2_u2, 0.0, 3.0 * z2) - 9.0 * evaluate_q(QChoice::abs_u2_u2, 0.0, z2)),
                0.0, 1e-14);
}

TEST(SigmaTransform, ZeroTaylorAndRoundTrip)
{
    const Grid g(128, 20.0);
    EXPECT_EQ(sup_norm(sigma_from_u3(Field(g), 2.0)), 0.0);
    EXPECT_EQ(sup_norm(u3_from_sigma(Field(g), 2.0)), 0.0);

    const Field small = testing::gaussian(g, 0.0, 1.0, 0.7) * cd(1e-4, 2e-5);
    const Field s = sigma_from_u3(small, 3.0);
    Field taylor = small * cd(6.0);
    taylor -= (taylor * taylor) * cd(0.5);
    EXPECT_LT(max_abs_diff(s, taylor), 1e-10);
    EXPECT_GT(max_abs_diff(s, small * cd(6.0)), 1e-8);

    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 5; ++trial)
    {
        Field sigma = testing::random_smooth(g, rng);
        sigma *= cd(0.9 / sup_norm(sigma));
        const Field back = sigma_from_u3(u3_from_sigma(sigma, 1.5), 1.5);
        EXPECT_LT(max_abs_diff(back, sigma), 1e-12);
    }
}

TEST(SigmaTransform, ExactValuesAndBlowupSignal)
{
    const Grid g(8, 1.0);
    auto constant = [&](cd v) { return Field(g, std::vector<cd>(8, v)); };
    const Field u = u3_from_sigma(constant(1.0 - std::exp(-1.0)), 0.5);
    EXPECT_NEAR(std::abs(u[3] - 1.0), 0.0, 1e-15);
    const double m3 = 2.0;
    const Field big = u3_from_sigma(constant(1.0 - 1e-9), m3);
    EXPECT_NEAR(sup_norm(big), 9.0 * std::log(10.0) / (2 * m3), 1e-6);
    EXPECT_THROW(u3_from_sigma(constant(1.0), m3), BlowupReached);
    EXPECT_THROW(u3_from_sigma(constant(1.0 - 1e-13), m3), BlowupReached);
    EXPECT_THROW(sigma_from_u3(constant(-200.0), 2.0), OverflowEvent);
}

TEST(SigmaTransform, BranchJumpIsDetected)
{
    const Grid g(8, 1.0);
    const Field before = u3_from_sigma(Field(g, std::vector<cd>(8, cd(1.5, 0.1))), 1.0);
    const Field after_sigma(g, std::vector<cd>(8, cd(1.5, -0.1)));
    EXPECT_THROW(u3_from_sigma(after_sigma, 1.0, &before), BranchJump);
    const Field near_sigma(g, std::vector<cd>(8, cd(0.5, 0.1)));
    const Field near = u3_from_sigma(near_sigma, 1.0);
    EXPECT_NO_THROW(u3_from_sigma(Field(g, std::vector<cd>(8, cd(0.5, 0.12))), 1.0, &near));
}

// Case 1, eps = 0.8: blow-up construction, reconstruction and norm growth.
class BlowupConstruction : public ::testing::Test
{
protected:
    static void SetUpTestSuite()
    {
        const Field psi =
            normalize_profile(testing::gaussian(kXi, 0.0, 1.0, 0.0, Side::frequency), 1.0, SobolevIndex(1));
        traj_ = new ProfileTrajectory(integrate(bootstrap(psi, kEps, kCase), kCase, 1e3, {},
                                                [](const ProfileTrajectory& tr, const ChainState& s) {
                                                    return tr.v_sup(s, 3) >= 1.0;
                                                }));
        data_ = new BlowupData(build_blowup_data(*traj_, kEps, kCase));
    }
    static void TearDownTestSuite()
    {
        delete data_;
        delete traj_;
    }

    static inline const Grid kXi{512, 32.0};
    static inline const double kEps = 0.8;
    static inline const NonlinearityCase kCase = NonlinearityCase::resonant(QChoice::u2_squared);
    static inline ProfileTrajectory* traj_ = nullptr;
    static inline BlowupData* data_ = nullptr;
};

TEST_F(BlowupConstruction, DataSatisfiesItsInvariants)
{
    const BlowupData& d = *data_;
    EXPECT_NEAR(sobolev_norm(d.phi1, 1), kEps, 1e-8);
    EXPECT_NEAR(traj_->v_sup(traj_->state_at(d.T_eps), 3), 1.0, 1e-9);
    // e^{-i m3 theta} v3(T, x*) = 1.
    const cd v = v3_at(*traj_, traj_->state_at(d.T_eps), d.x_star / d.T_eps);
    EXPECT_NEAR(std::abs(std::polar(1.0, -kCase.masses.m3 * d.theta) * v - 1.0), 0.0, 1e-8);
    EXPECT_LT(traj_->v_sup(traj_->state_at(d.T_eps * 0.999), 3), 1.0);
}

TEST_F(BlowupConstruction, ReconstructionHasUnimodularFactors)
{
    const Grid phys(2048, 500.0);
    const double t = 0.5 * data_->T_eps;
    const UTriple u = reconstruct_u(*traj_, data_->theta, t, phys);
    const ChainState s = traj_->state_at(t);
    const Field v1 = traj_->v_physical(s, 1, phys);
    for (std::size_t j = 0; j < phys.size(); ++j)
        ASSERT_NEAR(std::abs(u.u1[j]), std::abs(v1[j]), 1e-15);
    EXPECT_THROW(reconstruct_u(*traj_, data_->theta, traj_->t_end(), phys), BlowupReached);
}

TEST_F(BlowupConstruction, ReconstructionSolvesTheOriginalSystem)
{
    // -log(1 - sigma) carries harmonics sigma^k at wavenumber k m3 x / t; dx = 0.05
    // resolves them up to ||sigma||_inf = 0.9.
    const Grid phys(8192, 400.0);
    const double t90 = locate_level(*traj_, 0.9).T;
    for (double t : {0.25 * t90, 0.5 * t90, 0.8 * t90, t90})
    {
        const auto r = reconstruction_residual(*traj_, data_->theta, t, phys, 1e-2);
        EXPECT_LT(r.max(), 1e-5) << "t = " << t << " r1 " << r.r1 << " r2 " << r.r2 << " r3 " << r.r3;
    }
}

TEST_F(BlowupConstruction, SobolevNormOfThirdComponentBlowsUp)
{
    const double T = data_->T_eps;
    const double half = u3_h1_norm(*traj_, data_->theta, 0.5 * T);
    const UTriple u = reconstruct_u(*traj_, data_->theta, 0.5 * T, Grid(8192, 400.0));
    EXPECT_NEAR(half, sobolev_norm(u.u3, 1), 1e-8 * half);
    double prev = half, last = half;
    for (double gap : {1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7})
    {
        last = u3_h1_norm(*traj_, data_->theta, T * (1.0 - gap));
        EXPECT_GT(last, prev);
        prev = last;
    }
    EXPECT_GT(last, 10.0 * half);
}

TEST(BlowupData, PhaseFreeCase)
{
    // A real positive profile pinned at the crossing gives theta = 0 only when
    // v3(T, x*) is real positive; here we check the phase bookkeeping directly.
    const Grid xi(512, 32.0);
    const Field psi = normalize_profile(testing::gaussian(xi, 0.0, 1.0, 0.0, Side::frequency), 1.0, SobolevIndex(1));
    const auto c = NonlinearityCase::resonant(QChoice::abs_u2_u2);
    auto traj = integrate(bootstrap(psi, 0.9, c), c, 1e3, {}, [](const ProfileTrajectory& tr, const ChainState& s) {
        return tr.v_sup(s, 3) >= 1.0;
    });
    const auto d = build_blowup_data(traj, 0.9, c);
    Field expected = fourier_m(psi, 1.0, Direction::inverse) * cd(0.9);
    expected *= std::polar(1.0, -c.masses.m1 * d.theta);
    EXPECT_LT(max_abs_diff(d.phi1, expected), 1e-15);
    EXPECT_LE(std::abs(d.theta), pi / c.masses.m3 + 1e-12);
}

TEST(LocateCrossing, ReportsHorizonWhenNeverReached)
{
    const Grid xi(256, 32.0);
    const Field psi = normalize_profile(testing::gaussian(xi, 0.0, 1.0, 0.0, Side::frequency), 1.0, SobolevIndex(1));
    const auto c = NonlinearityCase::resonant(QChoice::u2_squared);
    auto traj = integrate(bootstrap(psi, 0.3, c), c, 20.0);
    try
    {
        locate_crossing(traj);
        FAIL() << "expected NoCrossing";
    }
    catch (const NoCrossing& e)
    {
        EXPECT_DOUBLE_EQ(e.horizon(), 20.0);
        EXPECT_LT(e.max_seen(), 1.0);
    }
}

} // namespace
} // namespace qnls
