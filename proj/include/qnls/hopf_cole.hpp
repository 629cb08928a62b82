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
#include "qnls/profile_dynamics.hpp"
#include "qnls/spectral_core.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>

namespace qnls
{

inline constexpr double branch_tolerance = 1e-12;

/// Rescales psi so that ||F_{m1}^{-1} psi||_{H^s} = 1.
inline Field normalize_profile(const Field& psi_raw, double m1, SobolevIndex s)
{
    if (sup_norm(psi_raw) == 0.0)
        throw InvalidArgument("normalize_profile: zero profile");
    Field psi = psi_raw.relabeled(Side::frequency);
    // (1 + |xi|)^{s-1} psi' must be resolved inside the box.
    Field weighted = derivative(psi, 1);
    for (std::size_t j = 0; j < weighted.size(); ++j)
        weighted[j] *= std::pow(1.0 + std::abs(psi.grid().x(j)), s.value() - 1);
    if (edge_mass_fraction(weighted) > 1e-8 || edge_mass_fraction(psi) > 1e-8)
        throw InvalidArgument("normalize_profile: weighted derivative of psi is not contained in the box");
    const double norm = sobolev_norm(fourier_m(psi, m1, Direction::inverse), s.value());
    psi *= cd(1.0 / norm);
    return psi;
}

namespace detail
{

inline cd random_point(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    return {u(rng), u(rng)};
}

} // namespace detail

/// Q(e^{i m1 th} z1, e^{i m2 th} z2) = e^{i m3 th} Q(z1, z2): the phase bookkeeping
/// mu = m3, confirmed by randomized sampling.
inline bool gauge_condition_holds(const NonlinearityCase& c, std::uint64_t seed = 2024, int samples = 256)
{
    const MassTriple& m = c.masses;
    const bool algebraic = std::abs(c.mu() - m.m3) <= 1e-12 * std::max({m.m1, m.m2, m.m3});
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> th(-pi, pi);
    double defect = 0.0;
    for (int k = 0; k < samples; ++k)
    {
        const double theta = th(rng);
        const cd z1 = detail::random_point(rng), z2 = detail::random_point(rng);
        const cd lhs = evaluate_q(c.tag, std::polar(1.0, m.m1 * theta) * z1, std::polar(1.0, m.m2 * theta) * z2);
        const cd rhs = std::polar(1.0, m.m3 * theta) * evaluate_q(c.tag, z1, z2);
        defect = std::max(defect, std::abs(lhs - rhs));
    }
    return algebraic && defect < 1e-12;
}

/// Q(lambda z1, lambda z2) = lambda^2 Q(z1, z2) for lambda > 0, by randomized sampling.
inline bool homogeneity_holds(const NonlinearityCase& c, std::uint64_t seed = 2024, int samples = 256)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> lam(0.01, 10.0);
    for (int k = 0; k < samples; ++k)
    {
        const double l = lam(rng);
        const cd z1 = detail::random_point(rng), z2 = detail::random_point(rng);
        const cd lhs = evaluate_q(c.tag, l * z1, l * z2);
        const cd rhs = l * l * evaluate_q(c.tag, z1, z2);
        if (std::abs(lhs - rhs) > 1e-12 * std::max(1.0, l * l))
            return false;
    }
    return true;
}

/// sigma = 1 - exp(-2 m3 u3).
inline Field sigma_from_u3(const Field& u3, double m3)
{
    detail::require_positive(m3, "sigma_from_u3: m3");
    Field s = u3;
    for (std::size_t j = 0; j < s.size(); ++j)
    {
        const cd w = -2.0 * m3 * u3[j];
        if (w.real() > 700.0)
            throw OverflowEvent("sigma_from_u3: exp(-2 m3 u3) overflows", std::numeric_limits<double>::quiet_NaN());
        // 1 - e^{a + ib} = (1 - e^{ib}) - (e^a - 1) e^{ib}, both parts without cancellation.
        const double sb = std::sin(0.5 * w.imag());
        const cd one_minus_phase{2.0 * sb * sb, -std::sin(w.imag())};
        s[j] = one_minus_phase - std::expm1(w.real()) * std::polar(1.0, w.imag());
    }
    return s;
}

/// u3 = -log(1 - sigma) / (2 m3) on the principal branch (log 1 = 0). With `previous`
/// (u3 at an earlier time) the branch is checked for continuity.
inline Field u3_from_sigma(const Field& sigma, double m3, const Field* previous = nullptr)
{
    detail::require_positive(m3, "u3_from_sigma: m3");
    Field u = sigma;
    for (std::size_t j = 0; j < u.size(); ++j)
    {
        const cd one_minus = 1.0 - sigma[j];
        if (std::abs(one_minus) < branch_tolerance)
            throw BlowupReached("u3_from_sigma: 1 - sigma vanished", sigma.grid().x(j));
        u[j] = -std::log(one_minus) / (2.0 * m3);
        if (previous)
        {
            const double jump = 2.0 * m3 * std::abs((u[j] - (*previous)[j]).imag());
            if (jump > pi)
                throw BranchJump("u3_from_sigma: logarithm changed branch at x = " +
                                 std::to_string(sigma.grid().x(j)));
        }
    }
    return u;
}

/// Data (phi1, 0, 0) whose solution blows up at T_eps at x_star.
struct BlowupData
{
    Field phi1;
    double theta = 0.0;
    double x_star = 0.0;
    double T_eps = 0.0;
    double eps = 0.0;
};

struct Crossing
{
    double T = 0.0;
    /// Location of sup |beta_3| on the xi side, x* = T xi*.
    double xi_star = 0.0;
    /// Half-width of the final root bracket.
    double tolerance = 0.0;
};

/// First time ||v3(t)||_inf reaches `level`, bracketed by checkpoints and refined
/// by a bracketing root solver on the continuous re-integration.
inline Crossing locate_level(const ProfileTrajectory& traj, double level, double rel_tol = 1e-12)
{
    std::size_t hit = traj.size();
    double seen = 0.0;
    for (std::size_t i = 0; i < traj.size(); ++i)
    {
        const double s = traj.v_sup(traj.state(i), 3);
        seen = std::max(seen, s);
        if (s >= level)
        {
            hit = i;
            break;
        }
    }
    if (hit == traj.size())
        throw NoCrossing("no crossing of ||v3||_inf = " + std::to_string(level) + " before t = " +
                             std::to_string(traj.t_end()),
                         traj.t_end(), seen);
    if (hit == 0)
        throw InvalidArgument("locate_level: level already exceeded at the start");
    auto f = [&](double t) { return traj.v_sup(traj.state_at(t), 3) - level; };
    const int bits = std::max(8, static_cast<int>(-std::log2(rel_tol)));
    boost::uintmax_t iters = 100;
    const auto r = boost::math::tools::toms748_solve(f, traj.time(hit - 1), traj.time(hit), f(traj.time(hit - 1)),
                                                     f(traj.time(hit)), boost::math::tools::eps_tolerance<double>(bits),
                                                     iters);
    Crossing c;
    c.T = r.second;
    c.tolerance = 0.5 * (r.second - r.first);
    c.xi_star = refined_sup(traj.beta(traj.state_at(c.T), 3)).first;
    return c;
}

/// First time ||v3(t)||_inf = 1: the lifespan T_eps.
inline Crossing locate_crossing(const ProfileTrajectory& traj, double rel_tol = 1e-12)
{
    return locate_level(traj, 1.0, rel_tol);
}

/// v3(t, t xi) = (it)^{-1/2} e^{i m3 t xi^2 / 2} beta3(xi).
inline cd v3_at(const ProfileTrajectory& traj, const ChainState& s, double xi)
{
    BandLimited b(traj.beta(s, 3));
    const double m3 = traj.nonlinearity().masses.m3;
    return std::polar(1.0, m3 * s.t * xi * xi / 2.0) * b.value(xi) / std::sqrt(I * s.t);
}

inline BlowupData build_blowup_data(const ProfileTrajectory& traj, double eps, const NonlinearityCase& c,
                                    int sobolev = 1)
{
    const Crossing cr = locate_crossing(traj);
    BlowupData d{Field(traj.grid().dual(c.masses.m1)), 0.0, cr.T * cr.xi_star, cr.T, eps};
    d.theta = std::arg(v3_at(traj, traj.state_at(cr.T), cr.xi_star)) / c.masses.m3;
    d.phi1 = fourier_m(traj.psi(), c.masses.m1, Direction::inverse);
    d.phi1 *= eps * std::polar(1.0, -c.masses.m1 * d.theta);
    const double norm = sobolev_norm(d.phi1, sobolev);
    if (std::abs(norm - eps) > 1e-8)
        throw InvalidArgument("build_blowup_data: ||phi1||_{H^s} = " + std::to_string(norm) + " differs from eps");
    return d;
}

struct UTriple
{
    double t;
    Field u1;
    Field u2;
    Field u3;
};

namespace detail
{

inline UTriple rotate_chain(const ProfileTrajectory& traj, const ChainState& s, double theta, const Grid& target)
{
    const MassTriple& m = traj.nonlinearity().masses;
    if (traj.v_sup(s, 3) >= 1.0)
        throw BlowupReached("reconstruct_u: ||v3||_inf >= 1 at t = " + std::to_string(s.t), 0.0);
    Field u1 = traj.v_physical(s, 1, target);
    Field u2 = traj.v_physical(s, 2, target);
    Field sigma = traj.v_physical(s, 3, target);
    u1 *= std::polar(1.0, -m.m1 * theta);
    u2 *= std::polar(1.0, -m.m2 * theta);
    sigma *= std::polar(1.0, -m.m3 * theta);
    return {s.t, std::move(u1), std::move(u2), u3_from_sigma(sigma, m.m3)};
}

} // namespace detail

/// u1 = e^{-i m1 th} v1, u2 = e^{-i m2 th} v2, u3 = -log(1 - e^{-i m3 th} v3) / (2 m3) at time t.
inline UTriple reconstruct_u(const ProfileTrajectory& traj, double theta, double t, const Grid& target)
{
    return detail::rotate_chain(traj, traj.state_at(t), theta, target);
}

/// ||u3(t)||_{H^1} by quadrature in the self-similar variable xi = x / t: fixed
/// Gauss-Kronrod panels over the support of beta3 and adaptive refinement around
/// the peak, where the logarithm concentrates as t approaches T_eps.
inline double u3_h1_norm(const ProfileTrajectory& traj, double theta, double t)
{
    const ChainState s = traj.state_at(t);
    if (traj.v_sup(s, 3) >= 1.0)
        throw BlowupReached("u3_h1_norm: ||v3||_inf >= 1 at t = " + std::to_string(t), 0.0);
    const double m3 = traj.nonlinearity().masses.m3;
    const Field beta = traj.beta(s, 3);
    const BandLimited b(beta);
    const cd pre = std::polar(1.0, -m3 * theta) / std::sqrt(I * t);
    // (|u3|^2, |u3_x|^2) at x = t xi, times the Jacobian t.
    auto densities = [&](double xi) {
        const auto [v, dv] = b.eval(xi);
        const cd chirp = pre * std::polar(1.0, m3 * t * xi * xi / 2.0);
        const cd sigma = chirp * v;
        const cd sigma_x = chirp * (I * m3 * t * xi * v + dv) / t;
        const cd one_minus = 1.0 - sigma;
        return std::pair{t * std::norm(std::log(one_minus) / (2.0 * m3)),
                         t * std::norm(sigma_x / (2.0 * m3 * one_minus))};
    };

    const Grid& g = beta.grid();
    const double floor = 1e-14 * sup_norm(beta);
    std::size_t lo = g.size(), hi = 0;
    for (std::size_t j = 0; j < g.size(); ++j)
        if (std::abs(beta[j]) > floor)
        {
            lo = std::min(lo, j);
            hi = std::max(hi, j);
        }
    if (lo > hi)
        return 0.0;
    const double a = g.x(lo == 0 ? 0 : lo - 1), z = g.x(std::min(hi + 1, g.size() - 1));
    const double peak = refined_sup(beta).first;
    const double core = 0.05;

    using GK = boost::math::quadrature::gauss_kronrod<double, 21>;
    double l2 = 0.0, d2 = 0.0;
    auto add = [&](double p, double q) {
        if (!(q > p))
            return;
        l2 += GK::integrate([&](double xi) { return densities(xi).first; }, p, q, 0);
        d2 += GK::integrate([&](double xi) { return densities(xi).second; }, p, q, 0);
    };
    // Panels short enough to resolve the chirp e^{i m3 t xi^2 / 2}.
    const double width = std::min(0.05, 1.0 / (m3 * t * std::max(std::abs(a), std::abs(z)) + 1.0));
    auto panels = [&](double p, double q) {
        const int count = std::max(1, static_cast<int>(std::ceil((q - p) / width)));
        for (int k = 0; k < count; ++k)
            add(p + (q - p) * k / count, p + (q - p) * (k + 1) / count);
    };
    // Geometric grading toward the peak resolves the near-singular 1 / (1 - sigma).
    auto graded = [&](double from, double to) {
        double r = to - from;
        const double sign = r > 0 ? 1.0 : -1.0;
        r = std::abs(r);
        while (r > 1e-10)
        {
            const double inner = from + sign * r / 2.0, outer = from + sign * r;
            add(std::min(inner, outer), std::max(inner, outer));
            r /= 2.0;
        }
    };
    const double c0 = std::max(a, peak - core), c1 = std::min(z, peak + core);
    panels(a, c0);
    graded(peak, c0);
    graded(peak, c1);
    panels(c1, z);
    return std::sqrt(l2) + std::sqrt(d2);
}

/// Relative residuals of the reconstructed (u1, u2, u3) in the original system.
struct SystemResidual
{
    double r1 = 0.0;
    double r2 = 0.0;
    double r3 = 0.0;
    double max() const { return std::max({r1, r2, r3}); }
};

/// Plugs the reconstruction into L_{m1} u1 = 0, L_{m2} u2 = u1^2,
/// L_{m3} u3 = (u3_x)^2 + Q(u1, u2) e^{2 m3 u3} / (2 m3); the time derivative is a
/// fourth-order centered difference with step h, space derivatives are spectral.
/// Each residual is relative to the largest of its terms.
inline SystemResidual reconstruction_residual(const ProfileTrajectory& traj, double theta, double t,
                                              const Grid& target, double h)
{
    const NonlinearityCase& c = traj.nonlinearity();
    const MassTriple& m = c.masses;
    const std::size_t base = traj.checkpoint_before(t - 2.0 * h);
    const int steps = 4 * traj.substeps_after(base) *
                      std::max<int>(1, static_cast<int>(traj.checkpoint_before(t + 2.0 * h) - base + 1));
    auto at = [&](double tt) { return detail::rotate_chain(traj, traj.state_from(base, tt, steps), theta, target); };
    const UTriple u = at(t);
    const UTriple p1 = at(t + h), m1 = at(t - h), p2 = at(t + 2 * h), m2 = at(t - 2 * h);
    auto dt = [&](const Field& a2, const Field& a1, const Field& b1, const Field& b2) {
        Field d = (8.0 * (a1 - b1)) - (a2 - b2);
        d *= cd(1.0 / (12.0 * h));
        return d;
    };
    auto rel = [](const Field& r, std::initializer_list<const Field*> terms) {
        double scale = 0.0;
        for (const Field* f : terms)
            scale = std::max(scale, l2_norm(*f));
        return scale > 0.0 ? l2_norm(r) / scale : l2_norm(r);
    };

    SystemResidual out;
    {
        Field it = dt(p2.u1, p1.u1, m1.u1, m2.u1) * I;
        Field lap = derivative(u.u1, 2) * cd(1.0 / (2.0 * m.m1));
        out.r1 = rel(it + lap, {&it, &lap});
    }
    {
        Field it = dt(p2.u2, p1.u2, m1.u2, m2.u2) * I;
        Field lap = derivative(u.u2, 2) * cd(1.0 / (2.0 * m.m2));
        Field rhs = u.u1 * u.u1;
        out.r2 = rel(it + lap - rhs, {&it, &lap, &rhs});
    }
    {
        Field it = dt(p2.u3, p1.u3, m1.u3, m2.u3) * I;
        Field lap = derivative(u.u3, 2) * cd(1.0 / (2.0 * m.m3));
        Field ux = derivative(u.u3, 1);
        Field rhs = ux * ux;
        for (std::size_t j = 0; j < rhs.size(); ++j)
            rhs[j] += evaluate_q(c.tag, u.u1[j], u.u2[j]) * std::exp(2.0 * m.m3 * u.u3[j]) / (2.0 * m.m3);
        out.r3 = rel(it + lap - rhs, {&it, &lap, &rhs});
    }
    return out;
}

} // namespace qnls
