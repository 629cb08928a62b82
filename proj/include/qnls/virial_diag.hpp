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

#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qnls
{

/// Complex field on a tensor grid in one or two dimensions, stored row-major
/// with the first axis slowest.
class FieldND
{
public:
    explicit FieldND(Grid gx) : axes_{gx}, dim_(1), values_(gx.size()) {}
    FieldND(Grid gx, Grid gy) : axes_{gx, gy}, dim_(2), values_(gx.size() * gy.size()) {}

    template <class Fn>
    static FieldND sample(const FieldND& shape, Fn&& fn)
    {
        FieldND f = shape;
        for (std::size_t i = 0; i < f.size(); ++i)
        {
            const auto x = f.coords(i);
            f.values_[i] = fn(x[0], x[1]);
        }
        return f;
    }

    int dim() const noexcept { return dim_; }
    const Grid& axis(int a) const { return axes_.at(static_cast<std::size_t>(a)); }
    std::size_t size() const noexcept { return values_.size(); }
    std::span<cd> values() noexcept { return values_; }
    std::span<const cd> values() const noexcept { return values_; }
    cd operator[](std::size_t i) const noexcept { return values_[i]; }
    cd& operator[](std::size_t i) noexcept { return values_[i]; }

    /// Volume element dx (dx dy in two dimensions).
    double cell() const noexcept { return dim_ == 1 ? axes_[0].dx() : axes_[0].dx() * axes_[1].dx(); }

    std::array<double, 2> coords(std::size_t i) const noexcept
    {
        if (dim_ == 1)
            return {axes_[0].x(i), 0.0};
        const std::size_t ny = axes_[1].size();
        return {axes_[0].x(i / ny), axes_[1].x(i % ny)};
    }

    std::array<double, 2> wavevector(std::size_t i) const noexcept
    {
        if (dim_ == 1)
            return {axes_[0].wavenumber(i), 0.0};
        const std::size_t ny = axes_[1].size();
        return {axes_[0].wavenumber(i / ny), axes_[1].wavenumber(i % ny)};
    }

    bool same_grid(const FieldND& o) const noexcept
    {
        return axes_ == o.axes_;
    }

    void require_same(const FieldND& o) const
    {
        if (!same_grid(o))
            throw GridMismatch("FieldND: operands live on different grids");
    }

    bool all_finite() const noexcept
    {
        for (const auto& v : values_)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                return false;
        return true;
    }

    FieldND with_values(std::vector<cd> v) const
    {
        FieldND f = *this;
        f.values_ = std::move(v);
        return f;
    }

    FieldND& operator*=(cd a)
    {
        for (auto& v : values_)
            v *= a;
        return *this;
    }
    friend FieldND operator*(FieldND f, cd a) { return f *= a; }

private:
    std::vector<Grid> axes_;
    int dim_;
    std::vector<cd> values_;
};

using TripleND = std::array<FieldND, 3>;

struct VirialState
{
    double t = 0.0;
    double E = 0.0;
    double V = 0.0;
    /// sum_j m_j ||x u_j||^2.
    double variance = 0.0;
    /// Im int |x|^2 u1 u2 conj(u3).
    double cross_term = 0.0;
    /// sum_j ||grad u_j||^2 / (2 m_j).
    double kinetic = 0.0;
};

namespace detail
{

inline std::vector<cd> spectrum_nd(const FieldND& f)
{
    std::vector<cd> s(f.values().begin(), f.values().end());
    if (f.dim() == 1)
        fft::transform(s, fft::Sign::forward);
    else
        fft::transform_2d(s, static_cast<int>(f.axis(0).size()), static_cast<int>(f.axis(1).size()),
                          fft::Sign::forward);
    return s;
}

inline std::vector<cd> from_spectrum_nd(const FieldND& shape, std::vector<cd> s)
{
    if (shape.dim() == 1)
        fft::transform(s, fft::Sign::backward);
    else
        fft::transform_2d(s, static_cast<int>(shape.axis(0).size()), static_cast<int>(shape.axis(1).size()),
                          fft::Sign::backward);
    const double inv = 1.0 / static_cast<double>(s.size());
    for (auto& v : s)
        v *= inv;
    return s;
}

/// Partial derivative along axis a.
inline FieldND partial(const FieldND& f, int a)
{
    auto s = spectrum_nd(f);
    const std::size_t n_axis = f.axis(a).size();
    for (std::size_t i = 0; i < s.size(); ++i)
    {
        const std::size_t j = a == 0 ? (f.dim() == 1 ? i : i / f.axis(1).size()) : i % f.axis(1).size();
        s[i] *= (n_axis % 2 == 0 && j == n_axis / 2) ? 0.0 : I * f.wavevector(i)[static_cast<std::size_t>(a)];
    }
    return f.with_values(from_spectrum_nd(f, std::move(s)));
}

inline double gradient_norm2(const FieldND& f)
{
    double acc = 0.0;
    for (int a = 0; a < f.dim(); ++a)
    {
        const FieldND d = partial(f, a);
        for (const auto& v : d.values())
            acc += std::norm(v);
    }
    return acc * f.cell();
}

inline void require_triple(const TripleND& u)
{
    u[0].require_same(u[1]);
    u[0].require_same(u[2]);
}

/// Mass fraction in the outer 10% frame of the box.
inline double edge_fraction_nd(const FieldND& f, double outer = 0.1)
{
    double total = 0.0, edge = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i)
    {
        const auto x = f.coords(i);
        const double w = std::norm(f[i]);
        total += w;
        bool out = false;
        for (int a = 0; a < f.dim(); ++a)
            out = out || std::abs(x[static_cast<std::size_t>(a)]) > 0.5 * f.axis(a).length() * (1.0 - outer);
        if (out)
            edge += w;
    }
    return total > 0.0 ? edge / total : 0.0;
}

inline void check_support_nd(const TripleND& u, double tol = 1e-8)
{
    for (int j = 0; j < 3; ++j)
    {
        const double frac = edge_fraction_nd(u[static_cast<std::size_t>(j)]);
        if (frac > tol)
            throw SupportEscape("u" + std::to_string(j + 1) + ": " + std::to_string(frac) +
                                    " of the L2 mass reached the box edge",
                                frac);
    }
}

inline cd triple_product(const TripleND& u, bool weighted)
{
    cd acc = 0.0;
    for (std::size_t i = 0; i < u[0].size(); ++i)
    {
        const auto x = u[0].coords(i);
        const double w = weighted ? x[0] * x[0] + x[1] * x[1] : 1.0;
        acc += w * u[0][i] * u[1][i] * std::conj(u[2][i]);
    }
    return acc * u[0].cell();
}

} // namespace detail

/// sum_j ||grad psi_j||^2 / (2 m_j).
inline double kinetic_energy(const TripleND& psi, const MassTriple& m)
{
    detail::require_triple(psi);
    double k = 0.0;
    for (int j = 0; j < 3; ++j)
        k += detail::gradient_norm2(psi[static_cast<std::size_t>(j)]) / (2.0 * m[j + 1]);
    return k;
}

/// Re int psi1 psi2 conj(psi3).
inline double interaction(const TripleND& psi)
{
    detail::require_triple(psi);
    return detail::triple_product(psi, false).real();
}

/// E = sum_j ||grad psi_j||^2 / (2 m_j) + 2 Re int psi1 psi2 conj(psi3).
inline double energy_E(const TripleND& psi, const MassTriple& m)
{
    return kinetic_energy(psi, m) + 2.0 * interaction(psi);
}

/// V = sum_j Im int conj(psi_j) x . grad psi_j.
inline double virial_V(const TripleND& psi)
{
    detail::require_triple(psi);
    detail::check_support_nd(psi);
    double v = 0.0;
    for (const auto& f : psi)
        for (int a = 0; a < f.dim(); ++a)
        {
            const FieldND d = detail::partial(f, a);
            for (std::size_t i = 0; i < f.size(); ++i)
                v += (std::conj(f[i]) * f.coords(i)[static_cast<std::size_t>(a)] * d[i]).imag();
        }
    return v * psi[0].cell();
}

/// sum_j m_j ||x psi_j||^2.
inline double weighted_variance(const TripleND& psi, const MassTriple& m)
{
    detail::require_triple(psi);
    double acc = 0.0;
    for (int j = 0; j < 3; ++j)
    {
        const FieldND& f = psi[static_cast<std::size_t>(j)];
        double s = 0.0;
        for (std::size_t i = 0; i < f.size(); ++i)
        {
            const auto x = f.coords(i);
            s += (x[0] * x[0] + x[1] * x[1]) * std::norm(f[i]);
        }
        acc += m[j + 1] * s * f.cell();
    }
    return acc;
}

/// Im int |x|^2 psi1 psi2 conj(psi3).
inline double cross_term(const TripleND& psi)
{
    detail::require_triple(psi);
    return detail::triple_product(psi, true).imag();
}

/// Coefficient 2 (m1 + m2 - m3) of the cross term in the variance identity.
inline double cross_term_coefficient(const MassTriple& m) { return 2.0 * (m.m1 + m.m2 - m.m3); }

inline VirialState virial_state(const TripleND& u, const MassTriple& m, double t)
{
    VirialState s;
    s.t = t;
    s.kinetic = kinetic_energy(u, m);
    s.E = s.kinetic + 2.0 * interaction(u);
    s.V = virial_V(u);
    s.variance = weighted_variance(u, m);
    s.cross_term = cross_term(u);
    return s;
}

struct WaveControls
{
    double dt = 1e-3;
    double t_max = 1.0;
    /// Uniform spacing of the recorded states; a multiple of dt.
    double snapshot_dt = 1e-2;
    double dealias = 2.0 / 3.0;
};

struct WaveTrajectory
{
    MassTriple masses;
    int dim;
    double spacing;
    std::vector<VirialState> states;
    TripleND final_state;
};

namespace detail
{

/// Lawson RK4 for L u1 = conj(u2) u3, L u2 = conj(u1) u3, L u3 = u1 u2.
class WaveStepper
{
public:
    using State = std::array<std::vector<cd>, 3>;

    WaveStepper(const FieldND& shape, const MassTriple& m, double dealias) : shape_(shape), masses_(m)
    {
        mask_.resize(shape.size());
        for (std::size_t i = 0; i < shape.size(); ++i)
        {
            const auto k = shape.wavevector(i);
            bool keep = true;
            for (int a = 0; a < shape.dim(); ++a)
                keep = keep && std::abs(k[static_cast<std::size_t>(a)]) <=
                                   dealias * shape.axis(a).max_wavenumber() * (1.0 + 1e-12);
            mask_[i] = keep ? 1.0 : 0.0;
        }
    }

    State to_spectral(const TripleND& u) const
    {
        return {spectrum_nd(u[0]), spectrum_nd(u[1]), spectrum_nd(u[2])};
    }

    TripleND to_physical(const State& s) const
    {
        return {shape_.with_values(from_spectrum_nd(shape_, s[0])), shape_.with_values(from_spectrum_nd(shape_, s[1])),
                shape_.with_values(from_spectrum_nd(shape_, s[2]))};
    }

    State step(const State& y, double h)
    {
        const auto full = propagator(h), half = propagator(h / 2.0);
        auto lin = [](const std::array<std::vector<cd>, 3>& e, State a) {
            for (std::size_t j = 0; j < 3; ++j)
                for (std::size_t l = 0; l < a[j].size(); ++l)
                    a[j][l] *= e[j][l];
            return a;
        };
        auto axpy = [](State a, double w, const State& b) {
            for (std::size_t j = 0; j < 3; ++j)
                for (std::size_t l = 0; l < a[j].size(); ++l)
                    a[j][l] += w * b[j][l];
            return a;
        };
        const State k1 = rhs(y);
        const State k2 = rhs(lin(half, axpy(y, h / 2.0, k1)));
        const State k3 = rhs(axpy(lin(half, y), h / 2.0, k2));
        const State k4 = rhs(axpy(lin(full, y), h, lin(half, k3)));
        State out = lin(full, axpy(y, h / 6.0, k1));
        const State mid = lin(half, axpy(k2, 1.0, k3));
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t l = 0; l < out[j].size(); ++l)
                out[j][l] += h / 6.0 * (2.0 * mid[j][l] + k4[j][l]);
        return out;
    }

private:
    State rhs(const State& s) const
    {
        const TripleND u = to_physical(s);
        std::array<std::vector<cd>, 3> n;
        for (auto& v : n)
            v.resize(shape_.size());
        for (std::size_t i = 0; i < shape_.size(); ++i)
        {
            n[0][i] = std::conj(u[1][i]) * u[2][i];
            n[1][i] = std::conj(u[0][i]) * u[2][i];
            n[2][i] = u[0][i] * u[1][i];
        }
        State out;
        for (std::size_t j = 0; j < 3; ++j)
        {
            out[j] = spectrum_nd(shape_.with_values(std::move(n[j])));
            for (std::size_t l = 0; l < out[j].size(); ++l)
                out[j][l] *= -I * mask_[l];
        }
        return out;
    }

    std::array<std::vector<cd>, 3> propagator(double h) const
    {
        std::array<std::vector<cd>, 3> e;
        for (std::size_t j = 0; j < 3; ++j)
        {
            e[j].resize(shape_.size());
            const double m = masses_[static_cast<int>(j) + 1];
            for (std::size_t l = 0; l < shape_.size(); ++l)
            {
                const auto k = shape_.wavevector(l);
                e[j][l] = std::polar(1.0, -(k[0] * k[0] + k[1] * k[1]) * h / (2.0 * m));
            }
        }
        return e;
    }

    FieldND shape_;
    MassTriple masses_;
    std::vector<double> mask_;
};

} // namespace detail

/// Fixed-step integration of the three-wave system, recording VirialState at
/// uniform spacing; the support monitor runs at every record.
inline WaveTrajectory evolve_3wave(const TripleND& phi, const MassTriple& m, const WaveControls& ctl)
{
    detail::require_triple(phi);
    if (!(ctl.dt > 0.0) || !(ctl.t_max > 0.0) || !(ctl.snapshot_dt >= ctl.dt))
        throw InvalidArgument("evolve_3wave: need dt > 0, t_max > 0 and snapshot_dt >= dt");
    if (!(ctl.dealias > 0.0 && ctl.dealias <= 1.0))
        throw InvalidArgument("evolve_3wave: dealias must lie in (0, 1]");
    const long per = std::lround(ctl.snapshot_dt / ctl.dt);
    if (std::abs(static_cast<double>(per) * ctl.dt - ctl.snapshot_dt) > 1e-9 * ctl.snapshot_dt)
        throw InvalidArgument("evolve_3wave: snapshot_dt must be a multiple of dt");
    const long records = std::lround(std::floor(ctl.t_max / ctl.snapshot_dt + 1e-9));
    detail::WaveStepper stepper(phi[0], m, ctl.dealias);
    WaveTrajectory out{m, phi[0].dim(), ctl.snapshot_dt, {}, phi};
    out.states.push_back(virial_state(phi, m, 0.0));
    auto y = stepper.to_spectral(phi);
    for (long r = 1; r <= records; ++r)
    {
        for (long k = 0; k < per; ++k)
            y = stepper.step(y, ctl.dt);
        TripleND u = stepper.to_physical(y);
        for (const auto& f : u)
            if (!f.all_finite())
                throw NonFiniteValue("evolve_3wave: non-finite field at t = " +
                                     std::to_string(static_cast<double>(r) * ctl.snapshot_dt));
        out.states.push_back(virial_state(u, m, static_cast<double>(r) * ctl.snapshot_dt));
        out.final_state = std::move(u);
    }
    return out;
}

struct IdentityRow
{
    double t;
    double dE_residual;
    double variance_residual;
    double dV_residual;
    double cross_term;
};

struct IdentityReport
{
    std::vector<IdentityRow> rows;
    double max_dE = 0.0;
    double max_variance = 0.0;
    double max_dV = 0.0;
    /// Variance residual with the cross term dropped.
    double max_variance_ablated = 0.0;
    double coefficient = 0.0;
};

/// Residuals of dE/dt = 0, the variance identity and the dV/dt identity, with
/// time derivatives by fourth-order centered differences. Each residual is
/// relative to the largest magnitude over the run of the terms of its identity.
inline IdentityReport check_identities(const WaveTrajectory& tr)
{
    const auto& s = tr.states;
    if (s.size() < 5)
        throw InvalidArgument("check_identities: needs at least 5 snapshots");
    const double h = tr.spacing, n = tr.dim;
    auto ddt = [&](std::size_t i, auto get) {
        return (get(s[i - 2]) - 8.0 * get(s[i - 1]) + 8.0 * get(s[i + 1]) - get(s[i + 2])) / (12.0 * h);
    };
    IdentityReport rep;
    rep.coefficient = cross_term_coefficient(tr.masses);
    struct Raw
    {
        double dE, dK, dvar, twoV, cross, dV, ePart, kPart;
    };
    std::vector<Raw> raw;
    double scale_E = 0.0, scale_var = 0.0, scale_V = 0.0;
    for (std::size_t i = 2; i + 2 < s.size(); ++i)
    {
        Raw r;
        r.dE = ddt(i, [](const VirialState& v) { return v.E; });
        r.dK = ddt(i, [](const VirialState& v) { return v.kinetic; });
        r.dvar = ddt(i, [](const VirialState& v) { return v.variance; });
        r.twoV = 2.0 * s[i].V;
        r.cross = rep.coefficient * s[i].cross_term;
        r.dV = ddt(i, [](const VirialState& v) { return v.V; });
        r.ePart = n / 2.0 * s[i].E;
        r.kPart = (4.0 - n) / 2.0 * s[i].kinetic;
        scale_E = std::max(scale_E, std::abs(r.dK));
        scale_var = std::max({scale_var, std::abs(r.dvar), std::abs(r.twoV), std::abs(r.cross)});
        scale_V = std::max({scale_V, std::abs(r.dV), std::abs(r.ePart), std::abs(r.kPart)});
        raw.push_back(r);
    }
    auto rel = [](double v, double scale) { return scale > 0.0 ? v / scale : v; };
    for (std::size_t i = 0; i < raw.size(); ++i)
    {
        const Raw& r = raw[i];
        IdentityRow row{s[i + 2].t, rel(std::abs(r.dE), scale_E), rel(std::abs(r.dvar - r.twoV + r.cross), scale_var),
                        rel(std::abs(r.dV - r.ePart - r.kPart), scale_V), s[i + 2].cross_term};
        rep.max_dE = std::max(rep.max_dE, row.dE_residual);
        rep.max_variance = std::max(rep.max_variance, row.variance_residual);
        rep.max_dV = std::max(rep.max_dV, row.dV_residual);
        rep.max_variance_ablated = std::max(rep.max_variance_ablated, rel(std::abs(r.dvar - r.twoV), scale_var));
        rep.rows.push_back(row);
    }
    return rep;
}

/// The eps below which E[eps psi] = eps^2 (K + 2 eps Re int psi1 psi2 conj(psi3)) > 0.
inline double energy_sign_threshold(const TripleND& psi, const MassTriple& m)
{
    const double k = kinetic_energy(psi, m);
    const double r = interaction(psi);
    if (k == 0.0 && r == 0.0)
        throw InvalidArgument("energy_sign_threshold: zero input");
    if (r >= 0.0)
        return std::numeric_limits<double>::infinity();
    return k / (2.0 * std::abs(r));
}

} // namespace qnls
