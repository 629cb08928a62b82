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
#include "qnls/reduced_chain.hpp"

#include "test_helpers.hpp"

#include <gtest/gtest.h>

namespace qnls
{
namespace
{

using testing::max_abs_diff;

Field unit_psi(const Grid& xi, double center = 0.0, double width = 1.0)
{
    return normalize_profile(testing::gaussian(xi, center, width, 0.0, Side::frequency), 1.0, SobolevIndex(1));
}

// Physical box 200, n = 1024: holds Gaussian data up to t ~ 10.
const Grid kPhys(1024, 200.0);
const Grid kXi = kPhys.dual(1.0);

TEST(InitialData, ZeroAndNormalization)
{
    const Field psi = unit_psi(kXi);
    auto zero = initial_data(psi, 0.0, 1.0);
    EXPECT_EQ(sup_norm(zero.v1), 0.0);
    auto d = initial_data(psi, 0.3, 1.0);
    EXPECT_NEAR(sobolev_norm(d.v1, 1), 0.3, 1e-10);
    EXPECT_EQ(sup_norm(d.v2), 0.0);
    EXPECT_EQ(sup_norm(d.v3), 0.0);
    EXPECT_TRUE(d.v1.grid() == kPhys);
    EXPECT_THROW(initial_data(psi * cd(1.01), 0.3, 1.0), InvalidArgument);
}

TEST(SolveChain, ZeroDataGivesZero)
{
    const Field psi = unit_psi(kXi);
    auto sol = solve_chain(psi, 0.0, NonlinearityCase::resonant(QChoice::u2_squared), {1.0, 2.0}, 8);
    for (std::size_t k = 0; k < sol.times.size(); ++k)
    {
        EXPECT_EQ(sup_norm(sol.v2[k]), 0.0);
        EXPECT_EQ(sup_norm(sol.v3[k]), 0.0);
    }
}

TEST(SolveChain, RejectsBadArguments)
{
    const Field psi = unit_psi(kXi);
    const auto c = NonlinearityCase::resonant(QChoice::u1_u2);
    EXPECT_THROW(solve_chain(psi, 0.5, c, {1.0}, 4), InvalidArgument);
    EXPECT_THROW(solve_chain(psi, 0.5, c, {0.0, 1.0}, 8), InvalidArgument);
    EXPECT_THROW(solve_chain(psi, 0.5, c, {}, 8), InvalidArgument);
    EXPECT_THROW(solve_chain(psi, 0.5, c, {200.0}, 8), InvalidArgument);
}

TEST(SolveChain, FreeComponentIsExact)
{
    const Field psi = unit_psi(kXi);
    const double eps = 0.7;
    auto sol = solve_chain(psi, eps, NonlinearityCase::resonant(QChoice::u2_squared), {0.5, 3.0, 8.0}, 8);
    const auto init = initial_data(psi, eps, 1.0);
    const double r0 = rho_norm(init.v1, 1.0, 2, 0.0);
    for (std::size_t k = 0; k < sol.times.size(); ++k)
    {
        EXPECT_LT(max_abs_diff(sol.v1[k], free_propagate(init.v1, 1.0, sol.times[k])), 1e-13);
        EXPECT_NEAR(rho_norm(sol.v1[k], 1.0, 2, sol.times[k]), r0, 1e-10 * r0);
    }
}

// L_m v = N checked with a fourth-order centered difference in t and spectral d_xx.
double equation_residual(const std::vector<Field>& v, const Field& rhs, double m, double h)
{
    Field dt = (8.0 * (v[3] - v[1])) - (v[4] - v[0]);
    dt *= cd(1.0 / (12.0 * h));
    Field lhs = dt * I + derivative(v[2], 2) * cd(1.0 / (2.0 * m));
    return l2_norm(lhs - rhs) / l2_norm(rhs);
}

class ChainResidual : public ::testing::TestWithParam<QChoice>
{
};

TEST_P(ChainResidual, SatisfiesTheTriangularSystem)
{
    const auto c = NonlinearityCase::resonant(GetParam());
    const Field psi = unit_psi(kXi);
    const double t = 3.0, h = 0.01;
    auto sol = solve_chain(psi, 0.8, c, {t - 2 * h, t - h, t, t + h, t + 2 * h}, 8);
    EXPECT_LT(sol.refinement_error, 1e-10);
    const Field& v1 = sol.v1[2];
    const Field& v2 = sol.v2[2];
    Field q(v1.grid());
    for (std::size_t j = 0; j < q.size(); ++j)
        q[j] = evaluate_q(c.tag, v1[j], v2[j]);
    EXPECT_LT(equation_residual(sol.v2, v1 * v1, c.masses.m2, h), 1e-6);
    EXPECT_LT(equation_residual(sol.v3, q, c.masses.m3, h), 1e-6);
}

INSTANTIATE_TEST_SUITE_P(AllCases, ChainResidual, ::testing::ValuesIn(all_q_choices),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(SolveChain, HomogeneousInEps)
{
    const Field psi = unit_psi(kXi);
    const auto c = NonlinearityCase::resonant(QChoice::u2_squared);
    auto a = solve_chain(psi, 0.4, c, {2.0}, 8);
    auto b = solve_chain(psi, 0.8, c, {2.0}, 8);
    EXPECT_LT(relative_l2(b.v2[0] * cd(1.0 / 4.0), a.v2[0]), 1e-12);
    EXPECT_LT(relative_l2(b.v3[0] * cd(1.0 / 16.0), a.v3[0]), 1e-12);
}

TEST(SolveChain, ProductEstimateForModulusNonlinearity)
{
    // ||J_{m2}(|v2| v2)|| <= C ||v2||_inf ||J_{m2} v2|| along a case-4 run.
    const auto c = NonlinearityCase::resonant(QChoice::abs_u2_u2);
    const Field psi = unit_psi(kXi);
    auto sol = solve_chain(psi, 0.8, c, {0.5, 1.0, 2.0, 4.0, 8.0}, 8);
    for (std::size_t k = 0; k < sol.times.size(); ++k)
    {
        const Field& v2 = sol.v2[k];
        Field mod = v2;
        for (std::size_t j = 0; j < mod.size(); ++j)
            mod[j] = std::abs(v2[j]) * v2[j];
        const double m2 = c.masses.m2, t = sol.times[k];
        const double ratio = l2_norm(apply_J(mod, m2, t)) / (sup_norm(v2) * l2_norm(apply_J(v2, m2, t)));
        EXPECT_LT(ratio, 2.0) << "t=" << t;
    }
}

TEST(SolveChain, RhoFromProfileMatchesPhysicalRho)
{
    const auto c = NonlinearityCase::resonant(QChoice::u1_u2);
    const Field psi = unit_psi(kXi);
    auto sol = solve_chain(psi, 0.8, c, {2.0, 6.0}, 8);
    for (std::size_t k = 0; k < sol.times.size(); ++k)
    {
        const double t = sol.times[k];
        for (int j : {2, 3})
        {
            const Field& v = j == 2 ? sol.v2[k] : sol.v3[k];
            const double m = c.masses[j];
            const double direct = rho_norm(v, m, 1, t);
            EXPECT_NEAR(rho_from_profile(profile_A(v, m, t), m, 1), direct, 1e-10 * direct);
        }
    }
}

TEST(SolveChain, ReportsSupportEscape)
{
    const Grid small(256, 30.0);
    const Field psi = unit_psi(small.dual(1.0));
    ChainOptions opt;
    opt.refine = false;
    EXPECT_THROW(solve_chain(psi, 0.5, NonlinearityCase::resonant(QChoice::u2_squared), {10.0}, 8, opt),
                 SupportEscape);
}

} // namespace
} // namespace qnls
