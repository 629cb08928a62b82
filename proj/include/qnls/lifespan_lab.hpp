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
#include "qnls/hopf_cole.hpp"
#include "qnls/nonlinearity.hpp"
#include "qnls/parallel.hpp"
#include "qnls/profile_dynamics.hpp"
#include "qnls/spectral_core.hpp"

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace qnls
{

struct LifespanControls
{
    ProfileControls profile{};
    double horizon = 1e7;
    double t0 = 1.0;
    int n_quad = 16;
    int sobolev = 1;
    double root_tol = 1e-12;
};

struct LifespanRecord
{
    double eps;
    double T_eps;
    NonlinearityCase nl;
    double theta;
    double x_star;
    double detection_tol;
};

struct SweepResult
{
    NonlinearityCase nl;
    /// At least 4 records whose eps span a factor of 4 or more.
    std::vector<LifespanRecord> records;
    /// Slope of log T_eps against log eps.
    GrowthFit fit;
    /// Expected order p in T_eps ~ eps^{-p}.
    int order;
    /// min and max of eps^p T_eps over the sweep.
    double kappa_hat;
    double K_hat;

    bool strictly_decreasing() const
    {
        for (std::size_t i = 1; i < records.size(); ++i)
            if (!(records[i].T_eps < records[i - 1].T_eps))
                return false;
        return true;
    }
};

/// First crossing of ||v3||_inf = 1 for data eps psi, refined between checkpoints.
inline LifespanRecord detect_lifespan(const Field& psi, const NonlinearityCase& c, double eps,
                                      const LifespanControls& ctl = {})
{
    if (!gauge_condition_holds(c))
        throw InvalidArgument("detect_lifespan: " + c.name() + " violates the gauge condition");
    if (!(eps >= 0.0 && eps <= 1.0))
        throw InvalidArgument("detect_lifespan: eps = " + std::to_string(eps) + " outside (0, 1]");
    if (eps == 0.0)
        throw NoCrossing("detect_lifespan: zero data never crosses", ctl.horizon, 0.0);
    const auto traj = integrate(bootstrap(psi, eps, c, ctl.t0, ctl.n_quad), c, ctl.horizon, ctl.profile,
                                [](const ProfileTrajectory& tr, const ChainState& s) { return tr.v_sup(s, 3) >= 1.0; });
    const Crossing cr = locate_crossing(traj, ctl.root_tol);
    const BlowupData d = build_blowup_data(traj, eps, c, ctl.sobolev);
    return {eps, cr.T, c, d.theta, d.x_star, cr.tolerance};
}

/// Lifespans over eps_list on a bounded worker pool, sorted by eps, with the
/// log-log regression and the bracketing constants.
inline SweepResult sweep(const Field& psi, const NonlinearityCase& c, std::vector<double> eps_list,
                         const LifespanControls& ctl = {}, unsigned workers = 1)
{
    if (eps_list.size() < 4)
        throw InvalidArgument("sweep: needs at least 4 values of eps");
    std::sort(eps_list.begin(), eps_list.end());
    if (std::adjacent_find(eps_list.begin(), eps_list.end()) != eps_list.end())
        throw InvalidArgument("sweep: repeated eps value");
    if (!(eps_list.front() > 0.0))
        throw InvalidArgument("sweep: eps values must be positive");
    if (eps_list.back() < 4.0 * eps_list.front())
        throw InvalidArgument("sweep: eps values must span a factor of at least 4");

    const auto records = parallel_map(eps_list.size(), workers,
                                      [&](std::size_t i) { return detect_lifespan(psi, c, eps_list[i], ctl); });

    SweepResult out{c, {}, {}, lifespan_exponent(c.tag), 0.0, 0.0};
    std::vector<double> e, T;
    for (const auto& r : records)
    {
        out.records.push_back(r);
        e.push_back(r.eps);
        T.push_back(r.T_eps);
    }
    out.fit = fit_growth_exponent(e, T, e.front(), e.back(), 4);
    out.kappa_hat = std::numeric_limits<double>::infinity();
    for (const auto& r : out.records)
    {
        const double scaled = std::pow(r.eps, out.order) * r.T_eps;
        out.kappa_hat = std::min(out.kappa_hat, scaled);
        out.K_hat = std::max(out.K_hat, scaled);
    }
    return out;
}

struct DetuneRow
{
    double delta;
    double m3;
    /// max over [t0, horizon] of ||v3(t)||_inf.
    double max_v3;
    double t_at_max;
    bool crossed;
};

struct DetuneReport
{
    double eps;
    double horizon;
    std::vector<DetuneRow> rows;
};

/// max ||v3||_inf up to the resonant lifespan for m3 scaled by (1 + delta).
/// Without an explicit horizon the resonant lifespan of c is used.
inline DetuneReport detune_experiment(const Field& psi, const NonlinearityCase& c, const std::vector<double>& deltas,
                                      double eps, std::optional<double> horizon = std::nullopt,
                                      const LifespanControls& ctl = {})
{
    if (!(eps > 0.0 && eps <= 1.0))
        throw InvalidArgument("detune_experiment: eps = " + std::to_string(eps) + " outside (0, 1]");
    DetuneReport rep{eps, horizon ? *horizon : detect_lifespan(psi, c, eps, ctl).T_eps, {}};
    if (!(rep.horizon > ctl.t0))
        throw InvalidArgument("detune_experiment: horizon must exceed the start time");
    for (double delta : deltas)
    {
        if (!(delta > -1.0))
            throw InvalidArgument("detune_experiment: delta must exceed -1");
        const NonlinearityCase d = delta == 0.0 ? c : c.detuned(delta);
        const auto traj =
            integrate(bootstrap(psi, eps, d, ctl.t0, ctl.n_quad), d, rep.horizon, ctl.profile,
                      [](const ProfileTrajectory& tr, const ChainState& s) { return tr.v_sup(s, 3) >= 1.0; });
        std::size_t best = 0;
        double peak = -1.0;
        for (std::size_t i = 0; i < traj.size(); ++i)
        {
            const double v = traj.v_sup(traj.state(i), 3);
            if (v > peak)
            {
                peak = v;
                best = i;
            }
        }
        DetuneRow row{delta, d.masses.m3, peak, traj.time(best), peak >= 1.0};
        if (row.crossed)
        {
            const Crossing cr = locate_crossing(traj, ctl.root_tol);
            row.max_v3 = 1.0;
            row.t_at_max = cr.T;
        }
        else if (best > 0 && best + 1 < traj.size())
        {
            const auto r = boost::math::tools::brent_find_minima(
                [&](double t) { return -traj.v_sup(traj.state_at(t), 3); }, traj.time(best - 1), traj.time(best + 1),
                40);
            if (-r.second > row.max_v3)
            {
                row.max_v3 = -r.second;
                row.t_at_max = r.first;
            }
        }
        rep.rows.push_back(row);
    }
    return rep;
}

enum class ProbeMode
{
    /// Random sums of Gaussians in frequency.
    general,
    /// Fixed profile with a random smooth phase.
    random_phase,
};

struct LowerBoundReport
{
    std::uint64_t seed;
    double eps;
    ProbeMode mode;
    std::vector<double> T;
    double min_T;
    double max_T;
    /// kappa_hat eps^{-p} and K_hat eps^{-p}.
    double lower;
    double upper;
    bool all_above_lower;
    bool all_within_bracket;
};

namespace detail
{

inline Field random_profile(const Grid& xi, const Field& base, ProbeMode mode, std::mt19937_64& rng, double m1)
{
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Field f(xi);
    if (mode == ProbeMode::general)
    {
        for (int k = 0; k < 3; ++k)
        {
            const double c = -1.5 + 3.0 * unit(rng), w = 0.8 + 0.7 * unit(rng);
            const cd a = std::polar(0.3 + 0.7 * unit(rng), 2.0 * pi * unit(rng));
            for (std::size_t j = 0; j < xi.size(); ++j)
                f[j] += a * std::exp(-(xi.x(j) - c) * (xi.x(j) - c) / (2.0 * w * w));
        }
    }
    else
    {
        double a[3], p[3];
        for (int k = 0; k < 3; ++k)
        {
            a[k] = unit(rng);
            p[k] = 2.0 * pi * unit(rng);
        }
        for (std::size_t j = 0; j < xi.size(); ++j)
        {
            double phase = 0.0;
            for (int k = 0; k < 3; ++k)
                phase += a[k] * std::cos(0.5 * (k + 1) * xi.x(j) + p[k]);
            f[j] = base[j] * std::polar(1.0, phase);
        }
    }
    return normalize_profile(f, m1, SobolevIndex(1));
}

} // namespace detail

/// Lifespans of random data of size eps against the sweep bracket. Exploratory.
inline LowerBoundReport general_data_lower_bound_probe(std::uint64_t seed, double eps, const NonlinearityCase& c,
                                                       int n_samples, const Field& base, double kappa_hat,
                                                       double K_hat, ProbeMode mode = ProbeMode::general,
                                                       const LifespanControls& ctl = {})
{
    if (n_samples < 1)
        throw InvalidArgument("general_data_lower_bound_probe: n_samples must be positive");
    std::mt19937_64 rng(seed);
    const int p = lifespan_exponent(c.tag);
    LowerBoundReport rep{seed, eps, mode, {}, 0.0, 0.0, kappa_hat * std::pow(eps, -p), K_hat * std::pow(eps, -p),
                         true, true};
    for (int k = 0; k < n_samples; ++k)
    {
        const Field psi = detail::random_profile(base.grid(), base, mode, rng, c.masses.m1);
        rep.T.push_back(detect_lifespan(psi, c, eps, ctl).T_eps);
    }
    rep.min_T = *std::min_element(rep.T.begin(), rep.T.end());
    rep.max_T = *std::max_element(rep.T.begin(), rep.T.end());
    rep.all_above_lower = rep.min_T >= rep.lower;
    rep.all_within_bracket = rep.all_above_lower && rep.max_T <= rep.upper;
    return rep;
}

} // namespace qnls
