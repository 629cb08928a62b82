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
#include "qnls/fft.hpp"
#include "qnls/grid.hpp"
#include "qnls/nonlinearity.hpp"
#include "qnls/spectral_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

namespace qnls
{

struct SolverControls
{
    double dt_init = 1e-3;
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    /// Fraction of the Nyquist wavenumber kept in products.
    double dealias = 2.0 / 3.0;
    double sigma_cap = 0.9;
    double t_max = 10.0;
    /// false: fixed steps of dt_init.
    bool adaptive = true;
    /// Multiplies Q; 0 decouples the third equation from the first two.
    double q_scale = 1.0;
    double min_step = 1e-10;
    /// Exact output times in (0, t_max].
    std::vector<double> snapshots;

    void validate() const
    {
        if (!(dt_init > 0.0))
            throw InvalidArgument("SolverControls: dt_init must be positive");
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
            throw InvalidArgument("SolverControls: tolerances must be positive");
        if (!(dealias > 0.0 && dealias <= 1.0))
            throw InvalidArgument("SolverControls: dealias must lie in (0, 1]");
        if (!(sigma_cap > 0.0 && sigma_cap < 1.0))
            throw InvalidArgument("SolverControls: sigma_cap must lie in (0, 1)");
        if (!(t_max > 0.0))
            throw InvalidArgument("SolverControls: t_max must be positive");
        for (double s : snapshots)
            if (!(s > 0.0 && s <= t_max))
                throw InvalidArgument("SolverControls: snapshot time " + std::to_string(s) + " outside (0, t_max]");
    }
};

struct FieldTriple
{
    Field u1;
    Field u2;
    Field u3;

    Field& operator[](int j) { return j == 1 ? u1 : (j == 2 ? u2 : u3); }
    const Field& operator[](int j) const { return j == 1 ? u1 : (j == 2 ? u2 : u3); }
};

inline constexpr double overflow_guard = 40.0;

namespace detail
{

inline std::vector<double> dealias_mask(const Grid& g, double fraction)
{
    std::vector<double> mask(g.size());
    const double cut = fraction * g.max_wavenumber() * (1.0 + 1e-12);
    for (std::size_t j = 0; j < g.size(); ++j)
        mask[j] = std::abs(g.wavenumber(j)) <= cut ? 1.0 : 0.0;
    return mask;
}

inline Field filtered(const Field& f, const std::vector<double>& mask)
{
    auto s = spectrum(f);
    for (std::size_t j = 0; j < s.size(); ++j)
        s[j] *= mask[j];
    return f.with_values(from_spectrum(std::move(s)));
}

inline void guard_exponent(const Field& u3, double m3)
{
    for (std::size_t j = 0; j < u3.size(); ++j)
        if (std::abs(2.0 * m3 * u3[j].real()) > overflow_guard)
            throw OverflowEvent("nonlinearity: |Re 2 m3 u3| exceeds " + std::to_string(overflow_guard) + " at x = " +
                                    std::to_string(u3.grid().x(j)),
                                std::numeric_limits<double>::quiet_NaN());
}

} // namespace detail

/// (N1, N2, N3) = (0, u1^2, (u3_x)^2 + q_scale Q(u1, u2) e^{2 m3 u3} / (2 m3)) with
/// products filtered to the dealiased band.
inline FieldTriple nonlinearity(const FieldTriple& u, const NonlinearityCase& c, double dealias = 2.0 / 3.0,
                                double q_scale = 1.0)
{
    u.u1.require_same(u.u2);
    u.u1.require_same(u.u3);
    if (!(dealias > 0.0 && dealias <= 1.0))
        throw InvalidArgument("nonlinearity: dealias must lie in (0, 1]");
    const double m3 = c.masses.m3;
    detail::guard_exponent(u.u3, m3);
    const auto mask = detail::dealias_mask(u.u1.grid(), dealias);
    const Field du3 = derivative(u.u3);
    Field n2(u.u1.grid()), n3(u.u1.grid());
    for (std::size_t j = 0; j < n2.size(); ++j)
    {
        n2[j] = u.u1[j] * u.u1[j];
        n3[j] = du3[j] * du3[j] +
                q_scale * evaluate_q(c.tag, u.u1[j], u.u2[j]) * std::exp(2.0 * m3 * u.u3[j]) / (2.0 * m3);
    }
    return {Field(u.u1.grid()), detail::filtered(n2, mask), detail::filtered(n3, mask)};
}

enum class StopReason
{
    t_max,
    sigma_cap,
    overflow,
};

inline std::string to_string(StopReason r)
{
    switch (r)
    {
    case StopReason::t_max:
        return "t_max";
    case StopReason::sigma_cap:
        return "sigma_cap";
    case StopReason::overflow:
        return "overflow";
    }
    return "unknown";
}

struct FullSnapshot
{
    double t;
    FieldTriple u;
    double sigma_sup;
};

struct FullTrajectory
{
    /// Initial state, every requested snapshot reached, and the final state.
    std::vector<FullSnapshot> snapshots;
    StopReason stop = StopReason::t_max;
    double t_stop = 0.0;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    /// max_t | ||u1(t)||_2 / ||u1(0)||_2 - 1 |.
    double mass1_drift = 0.0;
};

inline double sigma_sup(const Field& u3, double m3)
{
    double s = 0.0;
    for (std::size_t j = 0; j < u3.size(); ++j)
        s = std::max(s, std::abs(1.0 - std::exp(-2.0 * m3 * u3[j])));
    return s;
}

namespace detail
{

/// Lawson integrating-factor RK4 on the spectra of (u1, u2, u3).
class LawsonStepper
{
public:
    using State = std::array<std::vector<cd>, 3>;

    LawsonStepper(const Grid& g, const NonlinearityCase& c, const SolverControls& ctl)
        : grid_(g), nl_(c), ctl_(ctl)
    {
    }

    State to_spectral(const FieldTriple& u) const { return {spectrum(u.u1), spectrum(u.u2), spectrum(u.u3)}; }

    FieldTriple to_physical(const State& s) const
    {
        return {Field(grid_, from_spectrum(s[0])), Field(grid_, from_spectrum(s[1])), Field(grid_, from_spectrum(s[2]))};
    }

    /// -i F[N(u)].
    State rhs(const State& s) const
    {
        const FieldTriple n = nonlinearity(to_physical(s), nl_, ctl_.dealias, ctl_.q_scale);
        State out{std::vector<cd>(grid_.size()), spectrum(n.u2), spectrum(n.u3)};
        for (int j = 1; j < 3; ++j)
            for (auto& v : out[j])
                v *= -I;
        return out;
    }

    State step(const State& y, double h)
    {
        // Map references stay valid across inserts, so evict only before lookup.
        if (cache_.size() > 16)
            cache_.clear();
        const auto& full = propagator(h);
        const auto& half = propagator(h / 2.0);
        auto lin = [&](const std::array<std::vector<cd>, 3>& e, const State& a) {
            State r = a;
            for (int j = 0; j < 3; ++j)
                for (std::size_t l = 0; l < r[j].size(); ++l)
                    r[j][l] *= e[j][l];
            return r;
        };
        auto axpy = [](State a, double w, const State& b) {
            for (int j = 0; j < 3; ++j)
                for (std::size_t l = 0; l < a[j].size(); ++l)
                    a[j][l] += w * b[j][l];
            return a;
        };
        const State k1 = rhs(y);
        const State yh = lin(half, y);
        const State k2 = rhs(lin(half, axpy(y, h / 2.0, k1)));
        const State k3 = rhs(axpy(yh, h / 2.0, k2));
        const State k4 = rhs(axpy(lin(full, y), h, lin(half, k3)));
        State out = lin(full, axpy(y, h / 6.0, k1));
        const State mid = lin(half, axpy(k2, 1.0, k3));
        for (int j = 0; j < 3; ++j)
            for (std::size_t l = 0; l < out[j].size(); ++l)
                out[j][l] += h / 6.0 * (2.0 * mid[j][l] + k4[j][l]);
        return out;
    }

    double l2(const State& s) const
    {
        double acc = 0.0;
        for (const auto& c : s)
            for (const auto& v : c)
                acc += std::norm(v);
        return std::sqrt(acc * grid_.dx() / static_cast<double>(grid_.size()));
    }

private:
    const std::array<std::vector<cd>, 3>& propagator(double h)
    {
        auto it = cache_.find(h);
        if (it != cache_.end())
            return it->second;
        std::array<std::vector<cd>, 3> e;
        for (int j = 0; j < 3; ++j)
        {
            e[j].resize(grid_.size());
            const double m = nl_.masses[j + 1];
            for (std::size_t l = 0; l < grid_.size(); ++l)
            {
                const double k = grid_.wavenumber(l);
                e[j][l] = std::polar(1.0, -k * k * h / (2.0 * m));
            }
        }
        return cache_.emplace(h, std::move(e)).first->second;
    }

    Grid grid_;
    NonlinearityCase nl_;
    SolverControls ctl_;
    std::map<double, std::array<std::vector<cd>, 3>> cache_;
};

} // namespace detail

/// Integrates L_{m_j} u_j = N_j from t = 0 until t_max, the sigma cap, or the overflow guard.
inline FullTrajectory evolve_full(const FieldTriple& phi, const NonlinearityCase& c, const SolverControls& ctl)
{
    ctl.validate();
    phi.u1.require_same(phi.u2);
    phi.u1.require_same(phi.u3);
    const double m3 = c.masses.m3;
    const double s0 = sigma_sup(phi.u3, m3);
    if (!(s0 < ctl.sigma_cap))
        throw InvalidArgument("evolve_full: ||sigma(phi3)||_inf = " + std::to_string(s0) + " is not below the cap");
    const Grid& g = phi.u1.grid();
    detail::LawsonStepper stepper(g, c, ctl);
    std::vector<double> marks = ctl.snapshots;
    std::sort(marks.begin(), marks.end());
    marks.erase(std::unique(marks.begin(), marks.end()), marks.end());

    FullTrajectory out;
    out.snapshots.push_back({0.0, phi, s0});
    auto y = stepper.to_spectral(phi);
    const double mass0 = l2_norm(phi.u1);
    double t = 0.0, dt = ctl.dt_init;
    std::size_t next_mark = 0;
    auto record = [&](const detail::LawsonStepper::State& s, double time) {
        FieldTriple u = stepper.to_physical(s);
        const double sig = sigma_sup(u.u3, m3);
        out.snapshots.push_back({time, std::move(u), sig});
        return sig;
    };

    while (t < ctl.t_max)
    {
        double target = ctl.t_max;
        while (next_mark < marks.size() && marks[next_mark] <= t)
            ++next_mark;
        if (next_mark < marks.size())
            target = std::min(target, marks[next_mark]);
        double h = std::min(dt, target - t);
        const bool clipped = h < dt;
        if (target - t - h < 1e-12 * std::max(1.0, target))
            h = target - t;
        detail::LawsonStepper::State next;
        try
        {
            if (!ctl.adaptive)
                next = stepper.step(y, h);
            else
            {
                const auto big = stepper.step(y, h);
                next = stepper.step(stepper.step(y, h / 2.0), h / 2.0);
                auto diff = next;
                for (int j = 0; j < 3; ++j)
                    for (std::size_t l = 0; l < diff[j].size(); ++l)
                        diff[j][l] -= big[j][l];
                const double err = stepper.l2(diff) / (ctl.abs_tol + ctl.rel_tol * stepper.l2(next));
                const double factor = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 2.0);
                if (!(err <= 1.0))
                {
                    ++out.rejected;
                    dt = h * factor;
                    if (dt < ctl.min_step)
                        throw StepUnderflow("evolve_full: step size fell below " + std::to_string(ctl.min_step) +
                                            " at t = " + std::to_string(t));
                    continue;
                }
                if (!clipped)
                    dt = h * factor;
            }
        }
        catch (const OverflowEvent&)
        {
            out.stop = StopReason::overflow;
            break;
        }
        y = std::move(next);
        t = (h == target - t) ? target : t + h;
        ++out.accepted;
        const FieldTriple u = stepper.to_physical(y);
        if (!u.u1.all_finite() || !u.u2.all_finite() || !u.u3.all_finite())
            throw NonFiniteValue("evolve_full: non-finite field at t = " + std::to_string(t));
        if (mass0 > 0.0)
            out.mass1_drift = std::max(out.mass1_drift, std::abs(l2_norm(u.u1) / mass0 - 1.0));
        const double sig = sigma_sup(u.u3, m3);
        const bool at_mark = next_mark < marks.size() && t == marks[next_mark];
        if (sig >= ctl.sigma_cap)
        {
            out.stop = StopReason::sigma_cap;
            break;
        }
        if (at_mark)
            record(y, t);
    }
    out.t_stop = t;
    if (out.snapshots.back().t != t)
        record(y, t);
    return out;
}

} // namespace qnls
