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

#pragma once

#include "qnls/errors.hpp"
#include "qnls/grid.hpp"
#include "qnls/nonlinearity.hpp"
#include "qnls/spectral_core.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace qnls
{

struct InitialData
{
    Field v1;
    Field v2;
    Field v3;
};

/// Solution of L_{m1} v1 = 0, L_{m2} v2 = v1^2, L_{m3} v3 = Q(v1, v2) sampled at `times`.
struct ChainSolution
{
    std::vector<double> times;
    std::vector<Field> v1;
    std::vector<Field> v2;
    std::vector<Field> v3;
    /// Max relative L2 disagreement between the n_quad and 2 n_quad runs (0 if not refined).
    double refinement_error = 0.0;
};

struct ChainOptions
{
    int sobolev = 1;
    /// Refine with 2 n_quad and compare; the finer result is returned.
    bool refine = true;
    double tolerance = 1e-7;
    double support_tol = 1e-8;
    /// Physical times above this cap are rejected.
    double t_cap = 100.0;
};

namespace detail
{

struct GaussRule
{
    std::array<double, 8> nodes{};
    std::array<double, 8> weights{};
};

// 8-point Gauss-Legendre rule on [-1, 1].
inline const GaussRule& gauss8()
{
    static const GaussRule rule = [] {
        using G = boost::math::quadrature::gauss<double, 8>;
        GaussRule r;
        const auto& a = G::abscissa();
        const auto& w = G::weights();
        for (std::size_t i = 0; i < 4; ++i)
        {
            r.nodes[3 - i] = -a[i];
            r.weights[3 - i] = w[i];
            r.nodes[4 + i] = a[i];
            r.weights[4 + i] = w[i];
        }
        return r;
    }();
    return rule;
}

inline void propagate_spectrum(std::vector<cd>& s, const Grid& g, double m, double t)
{
    for (std::size_t j = 0; j < s.size(); ++j)
    {
        const double k = g.wavenumber(j);
        s[j] *= std::polar(1.0, -t * k * k / (2.0 * m));
    }
}

inline std::vector<cd> to_physical(std::vector<cd> s) { return from_spectrum(std::move(s)); }

inline std::vector<cd> to_spectrum(std::vector<cd> v)
{
    fft::transform(v, fft::Sign::forward);
    return v;
}

// Marches the Duhamel integrals in the interaction picture,
// I_j(t) = -i int_0^t U_{m_j}(-s) N_j(s) ds, kept in spectral space, so that
// v_j(t) = U_{m_j}(t) I_j(t). Panels of width <= 1/n_quad, broken at every target.
// v2 at a node is itself obtained from a sub-rule on [panel start, node].
inline ChainSolution march_duhamel(const Field& v10, const NonlinearityCase& c, const std::vector<double>& times,
                                   int n_quad)
{
    const Grid& g = v10.grid();
    const std::size_t n = g.size();
    const auto& rule = gauss8();
    const MassTriple& m = c.masses;
    const auto v1hat = spectrum(v10);

    auto v1_at = [&](double s) {
        auto h = v1hat;
        propagate_spectrum(h, g, m.m1, s);
        return to_physical(std::move(h));
    };
    // -i U_{m2}(-s) v1(s)^2 in spectral space.
    auto v2_integrand = [&](double s) {
        auto v = v1_at(s);
        for (auto& z : v)
            z *= z;
        auto h = to_spectrum(std::move(v));
        propagate_spectrum(h, g, m.m2, -s);
        for (auto& z : h)
            z *= -I;
        return h;
    };

    ChainSolution out;
    std::vector<cd> I2(n, 0.0), I3(n, 0.0);
    double a = 0.0;
    const double hmax = 1.0 / static_cast<double>(n_quad);

    for (double target : times)
    {
        while (a < target)
        {
            const double b = std::min(target, a + hmax);
            const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
            std::vector<cd> I2_next = I2;
            for (std::size_t i = 0; i < 8; ++i)
            {
                const double tau = mid + half * rule.nodes[i];
                // v2(tau) from I2(a) plus the sub-panel [a, tau].
                std::vector<cd> J = I2;
                const double sh = 0.5 * (tau - a), sm = 0.5 * (tau + a);
                for (std::size_t q = 0; q < 8; ++q)
                {
                    const auto h = v2_integrand(sm + sh * rule.nodes[q]);
                    const double w = sh * rule.weights[q];
                    for (std::size_t j = 0; j < n; ++j)
                        J[j] += w * h[j];
                }
                propagate_spectrum(J, g, m.m2, tau);
                const auto v2 = to_physical(std::move(J));
                const auto v1 = v1_at(tau);
                std::vector<cd> qv(n);
                for (std::size_t j = 0; j < n; ++j)
                    qv[j] = evaluate_q(c.tag, v1[j], v2[j]);
                auto qh = to_spectrum(std::move(qv));
                propagate_spectrum(qh, g, m.m3, -tau);
                const double w = half * rule.weights[i];
                for (std::size_t j = 0; j < n; ++j)
                    I3[j] += -I * w * qh[j];

                const auto h2 = v2_integrand(tau);
                for (std::size_t j = 0; j < n; ++j)
                    I2_next[j] += w * h2[j];
            }
            I2 = std::move(I2_next);
            a = b;
        }
        auto s1 = v1hat, s2 = I2, s3 = I3;
        propagate_spectrum(s1, g, m.m1, target);
        propagate_spectrum(s2, g, m.m2, target);
        propagate_spectrum(s3, g, m.m3, target);
        out.times.push_back(target);
        out.v1.emplace_back(g, to_physical(std::move(s1)));
        out.v2.emplace_back(g, to_physical(std::move(s2)));
        out.v3.emplace_back(g, to_physical(std::move(s3)));
    }
    return out;
}

inline double chain_disagreement(const ChainSolution& a, const ChainSolution& b)
{
    double worst = 0.0;
    for (std::size_t k = 0; k < a.times.size(); ++k)
    {
        if (l2_norm(b.v2[k]) > 0.0)
            worst = std::max(worst, relative_l2(a.v2[k], b.v2[k]));
        if (l2_norm(b.v3[k]) > 0.0)
            worst = std::max(worst, relative_l2(a.v3[k], b.v3[k]));
    }
    return worst;
}

} // namespace detail

/// True when ||F_{m1}^{-1} psi||_{H^s} = 1 within `tol`.
inline bool is_normalized(const Field& psi, double m1, int s, double tol = 1e-8)
{
    return std::abs(sobolev_norm(fourier_m(psi, m1, Direction::inverse), s) - 1.0) <= tol;
}

/// v1(0) = eps F_{m1}^{-1} psi, v2(0) = v3(0) = 0, on the grid dual to psi's.
inline InitialData initial_data(const Field& psi, double eps, double m1, int s = 1)
{
    if (!(eps >= 0.0))
        throw InvalidArgument("initial_data: eps must be nonnegative");
    if (!is_normalized(psi, m1, s))
        throw InvalidArgument("initial_data: psi is not normalized (||F^{-1} psi||_{H^s} != 1)");
    Field v1 = fourier_m(psi, m1, Direction::inverse);
    v1 *= cd(eps);
    const Grid g = v1.grid();
    return {std::move(v1), Field(g), Field(g)};
}

/// Duhamel solution of the reduced chain at the requested times, by composite
/// 8-point Gauss-Legendre panels (n_quad panels per unit time).
inline ChainSolution solve_chain(const Field& psi, double eps, const NonlinearityCase& c, std::vector<double> times,
                                 int n_quad, const ChainOptions& opt = {})
{
    if (n_quad < 8)
        throw InvalidArgument("solve_chain: n_quad must be >= 8");
    if (times.empty())
        throw InvalidArgument("solve_chain: no target times");
    std::sort(times.begin(), times.end());
    if (!(times.front() > 0.0) || times.back() > opt.t_cap)
        throw InvalidArgument("solve_chain: times must lie in (0, t_cap]");

    const auto init = initial_data(psi, eps, c.masses.m1, opt.sobolev);
    ChainSolution sol = detail::march_duhamel(init.v1, c, times, n_quad);
    if (opt.refine)
    {
        ChainSolution fine = detail::march_duhamel(init.v1, c, times, 2 * n_quad);
        const double err = detail::chain_disagreement(sol, fine);
        fine.refinement_error = err;
        if (err > opt.tolerance)
            throw QuadratureDivergence("solve_chain: n_quad refinement disagreement " + std::to_string(err), err);
        sol = std::move(fine);
    }
    const std::size_t last = sol.times.size() - 1;
    check_support(sol.v1[last], opt.support_tol, "solve_chain: v1");
    check_support(sol.v2[last], opt.support_tol, "solve_chain: v2");
    check_support(sol.v3[last], opt.support_tol, "solve_chain: v3");
    return sol;
}

} // namespace qnls
