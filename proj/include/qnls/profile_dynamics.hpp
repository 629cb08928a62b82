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
#include "qnls/reduced_chain.hpp"
#include "qnls/spectral_core.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace qnls
{

/// Spectral profiles alpha_j(t) = A_{m_j}(t) v_j(t) on one xi-grid.
struct ChainState
{
    double t;
    Field alpha1;
    Field alpha2;
    Field alpha3;
    double eps;
    Field psi;
};

struct ProfileRhs
{
    Field d_alpha1;
    Field d_alpha2;
    Field d_alpha3;
};

struct GrowthFit
{
    double exponent = 0.0;
    double coefficient = 0.0;
    double t_min = 0.0;
    double t_max = 0.0;
    /// RMS of the log-log regression residuals.
    double residual = 0.0;
    std::size_t points = 0;
};

struct ProfileControls
{
    double rel_tol = 1e-8;
    double abs_tol = 1e-14;
    int checkpoints_per_decade = 64;
    double initial_step = 1e-2;
    double min_step = 1e-10;
};

namespace detail
{

// Right-hand side of the W-conjugated profile equations for (alpha2, alpha3),
// packed into one vector of length 2n. alpha1 is constant.
class ProfileSystem
{
public:
    using State = std::vector<cd>;

    ProfileSystem(const Field& alpha1, const NonlinearityCase& c)
        : grid_(alpha1.grid()), alpha1_(alpha1.data()), case_(c), xi2_(alpha1.size())
    {
        for (std::size_t l = 0; l < xi2_.size(); ++l)
            xi2_[l] = static_cast<long double>(grid_.x(l)) * grid_.x(l);
    }

    void operator()(const State& x, State& dxdt, double t) const
    {
        const std::size_t n = grid_.size();
        const double dxi = grid_.dx();
        const MassTriple& m = case_.masses;
        std::vector<cd> b1(alpha1_);
        std::vector<cd> b2(x.begin(), x.begin() + static_cast<long>(n));
        deform_in_place(b1, dxi, m.m1, t, false);
        deform_in_place(b2, dxi, m.m2, t, false);

        const cd rot = std::polar(1.0, -pi / 4.0);
        const double d2 = 2.0 * m.m1 - m.m2;
        const double d3 = case_.detuning();
        std::vector<cd> r2(n), r3(n);
        for (std::size_t l = 0; l < n; ++l)
        {
            r2[l] = rot * b1[l] * b1[l];
            r3[l] = evaluate_q_tilde(case_.tag, b1[l], b2[l]);
            if (d2 != 0.0)
                r2[l] *= unit_phase(static_cast<long double>(d2) * t * xi2_[l] / 2.0L);
            if (d3 != 0.0)
                r3[l] *= unit_phase(static_cast<long double>(d3) * t * xi2_[l] / 2.0L);
        }
        deform_in_place(r2, dxi, m.m2, t, true);
        deform_in_place(r3, dxi, m.m3, t, true);
        const cd c = -I / std::sqrt(t);
        dxdt.resize(2 * n);
        for (std::size_t l = 0; l < n; ++l)
        {
            dxdt[l] = c * r2[l];
            dxdt[n + l] = c * r3[l];
        }
    }

private:
    Grid grid_;
    std::vector<cd> alpha1_;
    NonlinearityCase case_;
    std::vector<long double> xi2_;
};

inline std::vector<cd> pack(const ChainState& s)
{
    std::vector<cd> x(s.alpha2.data());
    x.insert(x.end(), s.alpha3.data().begin(), s.alpha3.data().end());
    return x;
}

inline bool finite(const std::vector<cd>& x)
{
    return std::all_of(x.begin(), x.end(),
                       [](const cd& z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); });
}

inline std::size_t next_pow2(double r)
{
    std::size_t p = 1;
    while (static_cast<double>(p) < r - 1e-12)
        p <<= 1;
    return p;
}

} // namespace detail

/// (d alpha1, d alpha2, d alpha3)/dt of the exact profile equations.
inline ProfileRhs rhs_profile(const ChainState& s, const NonlinearityCase& c)
{
    if (!(s.t > 0.0))
        throw InvalidArgument("rhs_profile: t must be positive");
    s.alpha1.require_same(s.alpha2);
    s.alpha1.require_same(s.alpha3);
    detail::ProfileSystem sys(s.alpha1, c);
    std::vector<cd> d;
    sys(detail::pack(s), d, s.t);
    const std::size_t n = s.alpha1.size();
    const Grid& g = s.alpha1.grid();
    return {Field(g, Side::frequency),
            Field(g, std::vector<cd>(d.begin(), d.begin() + static_cast<long>(n)), Side::frequency),
            Field(g, std::vector<cd>(d.begin() + static_cast<long>(n), d.end()), Side::frequency)};
}

/// xi-space sup of a frequency field, refined by a local maximization of its
/// trigonometric interpolant around the grid maximum. Returns (location, value).
inline std::pair<double, double> refined_sup(const Field& f)
{
    const std::size_t n = f.size();
    std::size_t jmax = 0;
    for (std::size_t j = 1; j < n; ++j)
        if (std::abs(f[j]) > std::abs(f[jmax]))
            jmax = j;
    const double xg = f.grid().x(jmax);
    if (std::abs(f[jmax]) == 0.0 || jmax == 0 || jmax + 1 == n)
        return {xg, std::abs(f[jmax])};
    BandLimited interp(f);
    const double h = f.grid().dx();
    auto r = boost::math::tools::brent_find_minima([&](double q) { return -std::abs(interp.value(q)); }, xg - h,
                                                   xg + h, 40);
    if (-r.second < std::abs(f[jmax]))
        return {xg, std::abs(f[jmax])};
    return {r.first, -r.second};
}

/// rho_{m,s}[v](t) computed from the profile alpha = A_m(t) v:
/// ||w||_{H^s} + ||y w||_{H^{s-1}} with w = F_m^{-1} alpha (J_m(t) = U_m(t) x U_m(t)^{-1}).
inline double rho_from_profile(const Field& alpha, double m, int s)
{
    const Field w = fourier_m(alpha, m, Direction::inverse);
    Field yw = w;
    for (std::size_t j = 0; j < yw.size(); ++j)
        yw[j] *= w.grid().x(j);
    return sobolev_norm(w, SobolevIndex(s).value()) + sobolev_norm(yw, s - 1);
}

/// Evolution of the profiles from t0, with log-spaced checkpoints.
class ProfileTrajectory
{
public:
    ProfileTrajectory(ChainState start, NonlinearityCase c, ProfileControls ctl)
        : case_(c), controls_(ctl), alpha1_(start.alpha1), psi_(start.psi), eps_(start.eps)
    {
        times_.push_back(start.t);
        states_.push_back(detail::pack(start));
        substeps_.push_back(0);
    }

    const NonlinearityCase& nonlinearity() const noexcept { return case_; }
    const Grid& grid() const noexcept { return alpha1_.grid(); }
    double eps() const noexcept { return eps_; }
    const Field& psi() const noexcept { return psi_; }
    std::size_t size() const noexcept { return times_.size(); }
    double time(std::size_t i) const { return times_.at(i); }
    double t_start() const { return times_.front(); }
    double t_end() const { return times_.back(); }

    ChainState state(std::size_t i) const { return unpack(times_.at(i), states_.at(i)); }

    /// Advances to `t_next` (> t_end()) and stores it as a checkpoint.
    void advance(double t_next)
    {
        using namespace boost::numeric::odeint;
        if (!(t_next > t_end()))
            throw InvalidArgument("ProfileTrajectory::advance: target must exceed current time");
        detail::ProfileSystem sys(alpha1_, case_);
        auto stepper = make_controlled(controls_.abs_tol, controls_.rel_tol, runge_kutta_dopri5<std::vector<cd>>());
        std::vector<cd> x = states_.back();
        double t = t_end();
        int steps = 0;
        while (t < t_next)
        {
            double h = std::min(dt_, t_next - t);
            const bool clipped = h < dt_;
            controlled_step_result r = stepper.try_step(sys, x, t, h);
            if (r == success)
            {
                ++steps;
                if (!clipped || h > dt_)
                    dt_ = h;
            }
            else
            {
                dt_ = h;
                if (dt_ < controls_.min_step * std::max(1.0, t))
                    throw StepUnderflow("profile integration: step size underflow at t = " + std::to_string(t));
            }
        }
        if (!detail::finite(x))
            throw NonFiniteValue("profile integration: non-finite state at t = " + std::to_string(t_next));
        times_.push_back(t_next);
        states_.push_back(std::move(x));
        substeps_.push_back(steps);
    }

    /// Index of the last checkpoint at or before t.
    std::size_t checkpoint_before(double t) const
    {
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        const auto c = static_cast<std::size_t>(std::distance(times_.begin(), it));
        return c == 0 ? 0 : c - 1;
    }

    /// Fixed-step count that resolves the interval following checkpoint c.
    int substeps_after(std::size_t c) const
    {
        return std::max(4, 2 * substeps_.at(std::min(c + 1, substeps_.size() - 1)));
    }

    /// State at any t in [t_start, t_end], re-integrated from the preceding checkpoint
    /// with a fixed number of steps, so the result is a smooth function of t.
    ChainState state_at(double t) const
    {
        if (t < t_start() || t > t_end() * (1.0 + 1e-14))
            throw InvalidArgument("state_at: t outside the integrated range");
        std::size_t c = checkpoint_before(t);
        if (t == times_[c])
            return state(c);
        if (c + 1 == times_.size())
            c -= 1;
        return state_from(c, t, substeps_after(c));
    }

    /// State at t obtained from checkpoint c by n_steps equal dopri5 steps.
    ChainState state_from(std::size_t c, double t, int n_steps) const
    {
        detail::ProfileSystem sys(alpha1_, case_);
        boost::numeric::odeint::runge_kutta_dopri5<std::vector<cd>> stepper;
        std::vector<cd> x = states_.at(c);
        const double t0 = times_[c];
        const double h = (t - t0) / n_steps;
        for (int k = 0; k < n_steps; ++k)
            stepper.do_step(sys, x, t0 + k * h, h);
        return unpack(t, x);
    }

    /// beta_j = W_{m_j}(t) alpha_j, so that v_j(t, t xi) = (it)^{-1/2} e^{i m_j t xi^2/2} beta_j(xi).
    Field beta(const ChainState& s, int j) const
    {
        const Field& a = j == 1 ? s.alpha1 : (j == 2 ? s.alpha2 : s.alpha3);
        return deform_W(a, case_.masses[j], s.t);
    }

    /// ||v_j(t)||_{L^inf} = t^{-1/2} sup |beta_j|.
    double v_sup(const ChainState& s, int j) const { return refined_sup(beta(s, j)).second / std::sqrt(s.t); }

    /// v_j(t) sampled on a physical grid via M D W.
    Field v_physical(const ChainState& s, int j, const Grid& target) const
    {
        const double m = case_.masses[j];
        return gauge_factor(dilate(beta(s, j), s.t, false, target), m, s.t);
    }

    double rho(const ChainState& s, int j, int sobolev) const
    {
        const Field& a = j == 1 ? s.alpha1 : (j == 2 ? s.alpha2 : s.alpha3);
        return rho_from_profile(a, case_.masses[j], sobolev);
    }

private:
    ChainState unpack(double t, const std::vector<cd>& x) const
    {
        const std::size_t n = alpha1_.size();
        const Grid& g = alpha1_.grid();
        return {t,
                alpha1_,
                Field(g, std::vector<cd>(x.begin(), x.begin() + static_cast<long>(n)), Side::frequency),
                Field(g, std::vector<cd>(x.begin() + static_cast<long>(n), x.end()), Side::frequency),
                eps_,
                psi_};
    }

    NonlinearityCase case_;
    ProfileControls controls_;
    Field alpha1_;
    Field psi_;
    double eps_;
    double dt_ = 1e-2;
    std::vector<double> times_;
    std::vector<std::vector<cd>> states_;
    std::vector<int> substeps_;

    friend ProfileTrajectory integrate(const ChainState&, const NonlinearityCase&, double, const ProfileControls&,
                                       const std::function<bool(const ProfileTrajectory&, const ChainState&)>&);
};

/// Physical grid used by the bootstrap: box 2 pi n / (L_xi m1), refined by a power
/// of two so that every dual grid dual(m_j) covers the xi box of psi.
inline Grid bootstrap_grid(const Grid& xi_grid, const MassTriple& m)
{
    const double ratio = std::max({1.0, m.m2 / m.m1, m.m3 / m.m1});
    const std::size_t r = detail::next_pow2(ratio);
    return Grid(xi_grid.size() * r, xi_grid.dual(m.m1).length());
}

/// Profiles at t0 obtained from the Duhamel chain on [0, t0].
inline ChainState bootstrap(const Field& psi, double eps, const NonlinearityCase& c, double t0 = 1.0, int n_quad = 16,
                            double tol = 1e-9)
{
    detail::require_positive(t0, "bootstrap: t0");
    if (psi.side() != Side::frequency)
        throw InvalidArgument("bootstrap: psi must be a frequency-side field");
    const Grid& gxi = psi.grid();
    const Grid gx = bootstrap_grid(gxi, c.masses);
    const Field psi_wide = resample(psi, gx.dual(c.masses.m1));
    Field v10 = fourier_m(psi_wide, c.masses.m1, Direction::inverse);
    v10 *= cd(eps);

    const std::vector<double> times{t0};
    auto coarse = detail::march_duhamel(v10, c, times, n_quad);
    auto fine = detail::march_duhamel(v10, c, times, 2 * n_quad);
    const double err = detail::chain_disagreement(coarse, fine);
    if (err > tol)
        throw QuadratureDivergence("bootstrap: Duhamel refinement disagreement " + std::to_string(err), err);

    auto to_xi = [&](const Field& v, double m) {
        Field a = resample(profile_A(v, m, t0), gxi);
        return a.relabeled(Side::frequency);
    };
    Field a1 = psi;
    a1 *= cd(eps);
    return {t0, std::move(a1), to_xi(fine.v2[0], c.masses.m2), to_xi(fine.v3[0], c.masses.m3), eps, psi};
}

/// Integrates until t_end, or until `stop` returns true at a checkpoint.
inline ProfileTrajectory integrate(const ChainState& start, const NonlinearityCase& c, double t_end,
                                   const ProfileControls& ctl = {},
                                   const std::function<bool(const ProfileTrajectory&, const ChainState&)>& stop = {})
{
    if (!(t_end > start.t))
        throw InvalidArgument("integrate: t_end must exceed the start time");
    ProfileTrajectory traj(start, c, ctl);
    traj.dt_ = std::min(ctl.initial_step, 0.5 * (t_end - start.t));
    const double ratio = std::pow(10.0, 1.0 / ctl.checkpoints_per_decade);
    double t = start.t;
    while (t < t_end)
    {
        double next = std::min(t_end, t * ratio);
        if (t_end - next < 1e-9 * t_end)
            next = t_end;
        traj.advance(next);
        t = next;
        if (stop && stop(traj, traj.state(traj.size() - 1)))
            break;
    }
    return traj;
}

enum class AsymptoticKind
{
    closed_form,
    envelope_only,
    unavailable,
};

struct AsymptoticProfile
{
    AsymptoticKind kind = AsymptoticKind::unavailable;
    std::optional<Field> profile;
    /// Leading-order value of sup |alpha_j| (NaN when unavailable).
    double envelope = std::numeric_limits<double>::quiet_NaN();
};

/// Leading-order large-t profile alpha_j(t) for data eps psi.
inline AsymptoticProfile asymptotic_profile(const NonlinearityCase& c, int j, double t, double eps, const Field& psi)
{
    if (j < 1 || j > 3)
        throw InvalidArgument("asymptotic_profile: component must be 1, 2 or 3");
    if (!(t >= 1.0))
        throw InvalidArgument("asymptotic_profile: t must be >= 1");
    const double psi_sup = sup_norm(psi);
    AsymptoticProfile out;
    auto closed = [&](cd coef, int power, double tpow) {
        Field f = psi;
        for (std::size_t l = 0; l < f.size(); ++l)
            f[l] = coef * std::pow(eps, power) * detail::ipow(psi[l], power) * std::pow(t, tpow);
        out.kind = AsymptoticKind::closed_form;
        out.envelope = std::abs(coef) * std::pow(eps * psi_sup, power) * std::pow(t, tpow);
        out.profile = std::move(f);
    };
    if (j == 1)
        closed(1.0, 1, 0.0);
    else if (j == 2)
        closed(2.0 * std::polar(1.0, -3.0 * pi / 4.0), 2, 0.5);
    else if (c.tag == QChoice::u2_squared)
        closed(8.0 / 3.0 * std::polar(1.0, -9.0 * pi / 4.0), 4, 1.5);
    else if (c.tag == QChoice::u1_u2)
    {
        out.kind = AsymptoticKind::envelope_only;
        out.envelope = 2.0 * std::pow(eps * psi_sup, 3) * t;
    }
    return out;
}

/// Least-squares fit value ~ coefficient * t^exponent over points with t in [t_min, t_max].
inline GrowthFit fit_growth_exponent(const std::vector<double>& t, const std::vector<double>& value, double t_min,
                                     double t_max, std::size_t min_points = 8)
{
    if (t.size() != value.size())
        throw InvalidArgument("fit_growth_exponent: series lengths differ");
    if (!(t_max > t_min))
        throw InvalidArgument("fit_growth_exponent: degenerate window");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < t.size(); ++i)
    {
        if (t[i] < t_min || t[i] > t_max)
            continue;
        if (!(value[i] > 0.0) || !(t[i] > 0.0))
            throw InvalidArgument("fit_growth_exponent: values must be positive");
        lx.push_back(std::log(t[i]));
        ly.push_back(std::log(value[i]));
    }
    if (lx.size() < std::max<std::size_t>(min_points, 2))
        throw InvalidArgument("fit_growth_exponent: fewer than " + std::to_string(min_points) +
                              " points in the window");
    const double n = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i)
    {
        mx += lx[i] / n;
        my += ly[i] / n;
    }
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i)
    {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0)
        throw InvalidArgument("fit_growth_exponent: degenerate window");
    GrowthFit fit;
    fit.exponent = sxy / sxx;
    const double b = my - fit.exponent * mx;
    fit.coefficient = std::exp(b);
    double rss = 0;
    for (std::size_t i = 0; i < lx.size(); ++i)
    {
        const double r = ly[i] - (b + fit.exponent * lx[i]);
        rss += r * r;
    }
    fit.residual = std::sqrt(rss / n);
    fit.t_min = t_min;
    fit.t_max = t_max;
    fit.points = lx.size();
    return fit;
}

} // namespace qnls
