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

#include "qnls/spectral_core.hpp"

#include "test_helpers.hpp"

#include <gtest/gtest.h>

#include <random>

namespace qnls
{
namespace
{

using testing::gaussian;
using testing::max_abs_diff;

TEST(Grid, RejectsBadSizes)
{
    EXPECT_THROW(Grid(4, 1.0), InvalidArgument);
    EXPECT_THROW(Grid(100, 1.0), InvalidArgument);
    EXPECT_THROW(Grid(64, 0.0), InvalidArgument);
    Grid g(64, 8.0);
    EXPECT_DOUBLE_EQ(g.dx() * 64, 8.0);
    EXPECT_DOUBLE_EQ(g.x(0), -4.0);
    EXPECT_TRUE(g.dual(3.0).dual(3.0) == g);
}

TEST(Field, RejectsNonFinite)
{
    Grid g(8, 1.0);
    std::vector<cd> v(8, 0.0);
    v[3] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_THROW(Field(g, v), NonFiniteValue);
    EXPECT_THROW(Field(g, std::vector<cd>(7)), InvalidArgument);
}

TEST(FourierM, GaussianMatchesClosedForm)
{
    Grid g(512, 40.0);
    for (double m : {1.0, 2.0, 0.5})
    {
        auto out = fourier_m(gaussian(g), m, Direction::forward);
        // sqrt(m/2pi) int e^{-i m y xi} e^{-y^2/2} dy = sqrt(m) e^{-m^2 xi^2 / 2}
        double err = 0.0;
        for (std::size_t l = 0; l < out.size(); ++l)
        {
            const double xi = out.grid().x(l);
            err = std::max(err, std::abs(out[l] - std::sqrt(m) * std::exp(-m * m * xi * xi / 2)));
        }
        EXPECT_LT(err, 1e-13) << "m=" << m;
        EXPECT_EQ(out.side(), Side::frequency);
    }
}

TEST(FourierM, RoundTripAndZero)
{
    Grid g(256, 30.0);
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial)
    {
        auto f = testing::random_smooth(g, rng);
        for (double m : {1.0, 2.0, 4.0})
        {
            auto back = fourier_m(fourier_m(f, m, Direction::forward), m, Direction::inverse);
            EXPECT_TRUE(back.grid() == g);
            EXPECT_LT(max_abs_diff(back, f), 1e-12);
        }
    }
    EXPECT_EQ(sup_norm(fourier_m(Field(g), 2.0, Direction::forward)), 0.0);
    EXPECT_THROW(fourier_m(Field(g), 0.0, Direction::forward), InvalidArgument);
}

TEST(FourierM, ReportsAliasing)
{
    // A narrow pulse has a broad transform that fills the dual grid.
    Grid g(64, 8.0);
    auto narrow = gaussian(g, 0.0, 0.15);
    EXPECT_THROW(fourier_m(narrow, 1.0, Direction::forward, 1e-6), AliasingError);
    EXPECT_NO_THROW(fourier_m(gaussian(g), 1.0, Direction::forward, 1e-6));
}

TEST(FreePropagate, IdentityAtZeroAndUnitarity)
{
    Grid g(512, 80.0);
    auto f = gaussian(g, 1.0, 1.2, 0.5);
    EXPECT_EQ(max_abs_diff(free_propagate(f, 2.0, 0.0), f), 0.0);
    for (double t : {0.3, 3.0, 10.0})
        EXPECT_NEAR(l2_norm(free_propagate(f, 1.5, t)), l2_norm(f), 1e-12);
}

TEST(FreePropagate, SpreadingGaussianMatchesClosedForm)
{
    Grid g(2048, 200.0);
    const double m = 1.5;
    auto f = gaussian(g);
    for (double t : {0.5, 2.0, 10.0})
    {
        auto u = free_propagate(f, m, t);
        const cd a = 1.0 + I * t / m;
        double err = 0.0;
        for (std::size_t j = 0; j < g.size(); ++j)
        {
            const double x = g.x(j);
            err = std::max(err, std::abs(u[j] - std::exp(-x * x / (2.0 * a)) / std::sqrt(a)));
        }
        EXPECT_LT(err, 1e-10) << "t=" << t;
    }
}

TEST(FreePropagate, GroupLaw)
{
    Grid g(512, 60.0);
    std::mt19937_64 rng(11);
    auto f = testing::random_smooth(g, rng);
    auto a = free_propagate(free_propagate(f, 2.0, 1.3), 2.0, 0.4);
    auto b = free_propagate(f, 2.0, 1.7);
    EXPECT_LT(max_abs_diff(a, b), 1e-12);
}

TEST(GaugeFactor, ModulusInverseAndValues)
{
    Grid g(128, 20.0);
    std::mt19937_64 rng(3);
    auto f = testing::random_smooth(g, rng);
    auto mf = gauge_factor(f, 2.0, 0.7);
    for (std::size_t j = 0; j < g.size(); ++j)
        EXPECT_NEAR(std::abs(mf[j]), std::abs(f[j]), 1e-15);
    EXPECT_LT(max_abs_diff(gauge_factor(mf, 2.0, 0.7, true), f), 1e-14);

    auto one = Field::sample(g, [](double) { return cd(1.0); });
    auto chirp = gauge_factor(one, 1.0, 2.0);
    for (std::size_t j = 0; j < g.size(); ++j)
        EXPECT_NEAR(std::abs(chirp[j] - std::polar(1.0, g.x(j) * g.x(j) / 4.0)), 0.0, 1e-13);
    EXPECT_THROW(gauge_factor(f, 1.0, 0.0), InvalidArgument);
    EXPECT_THROW(gauge_factor(f, 1.0, -1.0), InvalidArgument);
}

TEST(EvaluateUniform, MatchesDirectTrigonometricSum)
{
    Grid g(128, 24.0);
    std::mt19937_64 rng(5);
    auto f = testing::random_smooth(g, rng);
    BandLimited direct(f);
    const double start = -7.3, step = 0.0917;
    auto fast = evaluate_uniform(f, start, step, 150);
    for (std::size_t p = 0; p < fast.size(); ++p)
        EXPECT_LT(std::abs(fast[p] - direct.value(start + p * step)), 1e-12) << p;
    // On the grid points the interpolant reproduces the samples.
    auto same = evaluate_uniform(f, g.start(), g.dx(), g.size());
    for (std::size_t j = 0; j < g.size(); ++j)
        EXPECT_LT(std::abs(same[j] - f[j]), 1e-12);
    // Outside the box: zero.
    auto outside = evaluate_uniform(f, 13.0, 1.0, 3);
    for (auto v : outside)
        EXPECT_EQ(v, cd(0.0));
}

TEST(Dilate, ScaleOneNormAndInversion)
{
    Grid g(512, 40.0);
    auto f = gaussian(g, 0.3, 1.0, 0.4);
    auto d1 = dilate(f, 1.0);
    EXPECT_LT(max_abs_diff(d1, f * std::polar(1.0, -pi / 4)), 1e-12);
    for (double t : {0.6, 1.7, 2.5})
    {
        auto d = dilate(f, t);
        EXPECT_NEAR(l2_norm(d), l2_norm(f), 1e-10) << t;
        auto back = dilate(d, t, true);
        EXPECT_LT(max_abs_diff(back, f), 1e-8) << t;
    }
    EXPECT_THROW(dilate(f, 0.0), InvalidArgument);
}

TEST(DeformW, InversionAndLargeTime)
{
    Grid xi(256, 24.0);
    auto f = gaussian(xi, 0.0, 1.0, 0.0, Side::frequency);
    for (double m : {1.0, 4.0})
    {
        for (double t : {1.0, 5.0, 100.0})
            EXPECT_LT(max_abs_diff(deform_W(deform_W(f, m, t), m, t, true), f), 1e-10);
        auto far = deform_W(f, m, 1e6);
        EXPECT_LT(max_abs_diff(far, f), 1e-2 * sobolev_norm(f, 1));
    }
    EXPECT_THROW(deform_W(f, 1.0, 0.0), InvalidArgument);
}

TEST(DeformW, EquivalentToConjugatedChirp)
{
    Grid xi(256, 24.0);
    std::mt19937_64 rng(9);
    auto f = testing::random_smooth(xi, rng).relabeled(Side::frequency);
    const double m = 2.0, t = 3.0;
    auto y = fourier_m(f, m, Direction::inverse);
    auto ref = fourier_m(gauge_factor(y, m, t), m, Direction::forward);
    EXPECT_LT(max_abs_diff(deform_W(f, m, t), ref), 1e-12);
}

TEST(DeformW, DecayEstimateIsBoundedWithoutGrowth)
{
    // t^{1/4} ||(W_m(t) - 1) f||_inf / ||f||_{H^1} must not grow with t.
    Grid xi(512, 40.0);
    std::vector<Field> fields{gaussian(xi, 0.0, 1.0, 0.0, Side::frequency),
                              gaussian(xi, 1.0, 0.7, 2.0, Side::frequency),
                              Field::sample(xi, [](double x) { return cd(1.0 / std::cosh(x), 0.3 * std::tanh(x) / std::cosh(x)); },
                                            Side::frequency)};
    for (const auto& f : fields)
    {
        double prev = std::numeric_limits<double>::infinity();
        const double h1 = sobolev_norm(f, 1);
        for (double t = 1.0; t <= 1e4; t *= 10.0)
        {
            const double q = std::pow(t, 0.25) * sup_norm(deform_W(f, 1.0, t) - f) / h1;
            EXPECT_LT(q, 2.0);
            EXPECT_LE(q, prev * 1.05);
            prev = q;
        }
    }
}

TEST(ApplyJ, LeibnizIdentities)
{
    Grid g(1024, 60.0);
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 4; ++trial)
    {
        auto phi = testing::random_smooth(g, rng);
        auto psi = testing::random_smooth(g, rng);
        const double m = 0.7 + trial * 0.5, t = 0.3 + 1.1 * trial;
        // J_{2m}(phi psi) = 1/2 {(J_m phi) psi + phi (J_m psi)}
        auto lhs1 = apply_J(phi * psi, 2 * m, t);
        auto rhs1 = 0.5 * (apply_J(phi, m, t) * psi + phi * apply_J(psi, m, t));
        EXPECT_LT(max_abs_diff(lhs1, rhs1), 1e-10);
        // J_{3m}(phi psi) = 1/3 {(J_m phi) psi + 2 phi (J_{2m} psi)}
        auto lhs2 = apply_J(phi * psi, 3 * m, t);
        auto rhs2 = (1.0 / 3.0) * (apply_J(phi, m, t) * psi + 2.0 * (phi * apply_J(psi, 2 * m, t)));
        EXPECT_LT(max_abs_diff(lhs2, rhs2), 1e-10);
        // J_m(conj(phi) psi) = -conj(J_m phi) psi + 2 conj(phi) J_{2m} psi
        auto lhs3 = apply_J(conj(phi) * psi, m, t);
        auto rhs3 = 2.0 * (conj(phi) * apply_J(psi, 2 * m, t)) - conj(apply_J(phi, m, t)) * psi;
        EXPECT_LT(max_abs_diff(lhs3, rhs3), 1e-10);
    }
}

TEST(ApplyJ, Commutators)
{
    Grid g(1024, 60.0);
    std::mt19937_64 rng(2);
    auto f = testing::random_smooth(g, rng);
    const double m = 2.0, t = 1.4;
    // [d_x, J_m(t)] f = f
    auto comm = derivative(apply_J(f, m, t)) - apply_J(derivative(f), m, t);
    EXPECT_LT(max_abs_diff(comm, f), 1e-10);
    // [L_m, J_m] = 0  <=>  J_m(t) U_m(t) f = U_m(t) J_m(0) f
    for (double s : {0.5, 3.0})
    {
        auto a = apply_J(free_propagate(f, m, s), m, s);
        auto b = free_propagate(apply_J(f, m, 0.0), m, s);
        EXPECT_LT(max_abs_diff(a, b), 1e-10);
    }
}

TEST(ProfileA, FreeSolutionIsStationary)
{
    Grid g(4096, 400.0);
    std::mt19937_64 rng(4);
    auto phi = testing::random_smooth(g, rng);
    const double m = 2.0;
    auto ref = fourier_m(phi, m, Direction::forward);
    for (double t : {1.0, 10.0, 50.0, 100.0})
        EXPECT_LT(max_abs_diff(profile_A(free_propagate(phi, m, t), m, t), ref), 1e-10) << t;
    EXPECT_EQ(sup_norm(profile_A(Field(g), m, 1.0)), 0.0);
    EXPECT_THROW(profile_A(phi, m, 0.0), InvalidArgument);
}

TEST(ProfileA, FactorizationOfFreePropagator)
{
    // U_m(t) phi = M_m(t) D(t) F_m M_m(t) phi
    Grid g(16384, 1700.0);
    auto phi = gaussian(g, 0.5, 1.0, 0.3);
    const double m = 1.0;
    for (double t : {0.5, 1.0, 3.0, 10.0, 40.0, 100.0})
    {
        auto direct = free_propagate(phi, m, t);
        auto inner = fourier_m(gauge_factor(phi, m, t), m, Direction::forward);
        auto factored = gauge_factor(dilate(inner, t, false, g), m, t);
        EXPECT_LT(max_abs_diff(factored, direct) / sup_norm(direct), 1e-8) << "t=" << t;
    }
}

TEST(Norms, SobolevAndRho)
{
    Grid g(1024, 60.0);
    Field zero(g);
    EXPECT_EQ(sobolev_norm(zero, 2), 0.0);
    EXPECT_EQ(rho_norm(zero, 1.0, 1, 3.0), 0.0);
    auto f = gaussian(g, 0.0, 1.0, 0.7);
    EXPECT_DOUBLE_EQ(sobolev_norm(f, 0), l2_norm(f));
    // ||e^{-x^2/2}||_2 = pi^{1/4}; ||d/dx e^{-x^2/2}||_2 = (sqrt(pi)/2)^{1/2}
    auto real_g = gaussian(g);
    EXPECT_NEAR(sobolev_norm(real_g, 1), std::pow(pi, 0.25) + std::sqrt(std::sqrt(pi) / 2), 1e-12);
    // rho at t = 0: ||f||_{H^s} + ||x f||_{H^{s-1}}
    auto xf = Field::sample(g, [&](double x) { return x * std::exp(-x * x / 2) * std::polar(1.0, 0.7 * x); });
    EXPECT_NEAR(rho_norm(f, 2.0, 2, 0.0), sobolev_norm(f, 2) + sobolev_norm(xf, 1), 1e-12);
    EXPECT_THROW(rho_norm(f, 1.0, 0, 1.0), InvalidArgument);
}

TEST(Norms, RhoConservedAlongFreeFlow)
{
    Grid g(16384, 2400.0);
    auto v0 = gaussian(g, 0.0, 1.0, 0.5);
    const double m = 1.0;
    for (int s : {1, 2})
    {
        const double r0 = rho_norm(v0, m, s, 0.0);
        for (double t : {1.0, 10.0, 50.0, 100.0})
            EXPECT_NEAR(rho_norm(free_propagate(v0, m, t), m, s, t), r0, 1e-10 * r0) << "s=" << s << " t=" << t;
    }
}

TEST(Norms, LowerBoundDeficiencyStaysBounded)
{
    // (t^{-1/2} ||A_m(t) f||_inf - ||f||_inf) t^{3/4} / rho_m[f](t) stays bounded above
    // along a free trajectory.
    Grid g(8192, 1200.0);
    auto phi = gaussian(g, 0.0, 1.0, 0.5);
    const double m = 1.0;
    double worst = -1e300;
    for (double t = 1.0; t <= 100.0; t *= 1.6)
    {
        auto f = free_propagate(phi, m, t);
        const double gap = (sup_norm(profile_A(f, m, t)) / std::sqrt(t) - sup_norm(f)) * std::pow(t, 0.75) /
                           rho_norm(f, m, 1, t);
        worst = std::max(worst, gap);
    }
    EXPECT_LT(worst, 1.0);
}

TEST(Support, MonitorFlagsEdgeMass)
{
    Grid g(256, 20.0);
    EXPECT_NO_THROW(check_support(gaussian(g)));
    EXPECT_THROW(check_support(gaussian(g, 9.5)), SupportEscape);
}

} // namespace
} // namespace qnls
