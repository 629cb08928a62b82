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

#include "qnls/config.hpp"
#include "qnls/errors.hpp"
#include "qnls/full_solver.hpp"
#include "qnls/grid.hpp"
#include "qnls/hopf_cole.hpp"
#include "qnls/lifespan_lab.hpp"
#include "qnls/nonlinearity.hpp"
#include "qnls/parallel.hpp"
#include "qnls/profile_dynamics.hpp"
#include "qnls/reduced_chain.hpp"
#include "qnls/report.hpp"
#include "qnls/spectral_core.hpp"
#include "qnls/virial_diag.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace qnls
{

struct RunContext
{
    unsigned workers = 1;
    std::function<void(const std::string&)> log;

    void note(const std::string& s) const
    {
        if (log)
            log(s);
    }
};

namespace detail
{

class Stopwatch
{
public:
    double seconds() const { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count(); }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

inline Field gaussian_profile(const Grid& xi, double center, double width, double m1)
{
    const Field raw = Field::sample(
        xi, [&](double x) { return cd(std::exp(-(x - center) * (x - center) / (2.0 * width * width))); },
        Side::frequency);
    return normalize_profile(raw, m1, SobolevIndex(1));
}

/// Sum of three Gaussians with random centers, widths, boosts and phases.
inline Field random_smooth(const Grid& g, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> center(-2.0, 2.0), width(0.7, 1.5), boost(-1.0, 1.0),
        phase(0.0, 2.0 * pi), amp(0.3, 1.0);
    Field f(g);
    for (int i = 0; i < 3; ++i)
    {
        const double c = center(rng), w = width(rng), k = boost(rng), ph = phase(rng), a = amp(rng);
        for (std::size_t j = 0; j < g.size(); ++j)
        {
            const double x = g.x(j);
            f[j] += a * std::exp(-(x - c) * (x - c) / (2.0 * w * w)) * std::polar(1.0, k * x + ph);
        }
    }
    return f;
}

inline double max_abs_diff(const Field& a, const Field& b)
{
    a.require_same(b);
    double m = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j)
        m = std::max(m, std::abs(a[j] - b[j]));
    return m;
}

inline int case_index(QChoice q)
{
    for (std::size_t i = 0; i < all_q_choices.size(); ++i)
        if (all_q_choices[i] == q)
            return static_cast<int>(i) + 1;
    return 0;
}

inline QChoice case_choice(int k) { return all_q_choices.at(static_cast<std::size_t>(k - 1)); }

inline double triple_error(const FieldTriple& a, const UTriple& b)
{
    double num = 0.0, den = 0.0;
    const Field* ref[] = {&b.u1, &b.u2, &b.u3};
    for (int j = 1; j <= 3; ++j)
    {
        num += std::pow(l2_norm(a[j] - *ref[j - 1]), 2);
        den += std::pow(l2_norm(*ref[j - 1]), 2);
    }
    return std::sqrt(num / den);
}

inline Check runtime_check(const std::string& name, int criterion, double seconds, double budget)
{
    return make_check(name + "_runtime_s", criterion, seconds, "<", budget);
}

inline ProfileTrajectory blowup_trajectory(const Field& psi, double eps, const NonlinearityCase& c,
                                           const ProfileControls& pc, double horizon)
{
    return integrate(bootstrap(psi, eps, c), c, horizon, pc,
                     [](const ProfileTrajectory& tr, const ChainState& s) { return tr.v_sup(s, 3) >= 1.0; });
}

} // namespace detail

/// Operator identity suite and W-deformation decay.
inline ExperimentResult run_identities(const RunConfig& cfg, const RunContext& ctx)
{
    ExperimentResult out;
    out.experiment = Experiment::identities;
    std::mt19937_64 rng(cfg.seed());
    const int trials = static_cast<int>(cfg.integer("trials"));
    Table ids{"identities.csv", {"criterion", "check", "residual", "threshold"}};
    auto record = [&](const std::string& name, double residual, double threshold) {
        ids.add({1LL, name, residual, threshold});
        out.checks.push_back(make_check(name, 1, residual, "<", threshold));
    };

    detail::Stopwatch sw1;
    ctx.note("identities: operator suite");
    {
        const Grid g(1024, 60.0);
        double l1 = 0, l2 = 0, l3 = 0, cx = 0, cl = 0, rt = 0;
        for (int k = 0; k < trials; ++k)
        {
            const Field phi = detail::random_smooth(g, rng), psi = detail::random_smooth(g, rng);
            const double m = 0.7 + 0.5 * (k % 4), t = 0.3 + 1.1 * (k % 4);
            l1 = std::max(l1, detail::max_abs_diff(apply_J(phi * psi, 2 * m, t),
                                                   0.5 * (apply_J(phi, m, t) * psi + phi * apply_J(psi, m, t))));
            l2 = std::max(l2, detail::max_abs_diff(apply_J(phi * psi, 3 * m, t),
                                                   (1.0 / 3.0) * (apply_J(phi, m, t) * psi +
                                                                  2.0 * (phi * apply_J(psi, 2 * m, t)))));
            l3 = std::max(l3, detail::max_abs_diff(apply_J(conj(phi) * psi, m, t),
                                                   2.0 * (conj(phi) * apply_J(psi, 2 * m, t)) -
                                                       conj(apply_J(phi, m, t)) * psi));
            cx = std::max(cx, detail::max_abs_diff(derivative(apply_J(phi, m, t)) - apply_J(derivative(phi), m, t), phi));
            // Fixed mass so that U(s) phi stays clear of the periodic seam of x.
            for (double s : {0.5, 3.0})
                cl = std::max(cl, detail::max_abs_diff(apply_J(free_propagate(phi, 2.0, s), 2.0, s),
                                                       free_propagate(apply_J(phi, 2.0, 0.0), 2.0, s)));
            for (double mm : {1.0, 2.0, 4.0})
            {
                rt = std::max(rt, detail::max_abs_diff(
                                      fourier_m(fourier_m(phi, mm, Direction::forward), mm, Direction::inverse), phi));
                const Field hat = phi.relabeled(Side::frequency);
                rt = std::max(rt, detail::max_abs_diff(
                                      fourier_m(fourier_m(hat, mm, Direction::inverse), mm, Direction::forward), hat));
            }
        }
        record("leibniz_J_2m", l1, 1e-10);
        record("leibniz_J_3m", l2, 1e-10);
        record("leibniz_J_conj", l3, 1e-10);
        record("commutator_dx_J", cx, 1e-10);
        record("commutator_L_J", cl, 1e-10);
        record("fourier_round_trip", rt, 1e-10);
    }
    {
        const Grid g(16384, 1700.0);
        const Field phi = Field::sample(g, [](double x) { return std::exp(-(x - 0.5) * (x - 0.5) / 2.0) * std::polar(1.0, 0.3 * x); });
        const double m = 1.0;
        double worst = 0.0;
        for (double t : {0.5, 1.0, 3.0, 10.0, 40.0, 100.0})
        {
            const Field direct = free_propagate(phi, m, t);
            const Field inner = fourier_m(gauge_factor(phi, m, t), m, Direction::forward);
            const Field factored = gauge_factor(dilate(inner, t, false, g), m, t);
            worst = std::max(worst, detail::max_abs_diff(factored, direct) / sup_norm(direct));
        }
        record("factorization_U_MDFM", worst, 1e-8);
    }
    {
        const Grid g(16384, 2400.0);
        const Field v0 = Field::sample(g, [](double x) { return std::exp(-x * x / 2.0) * std::polar(1.0, 0.5 * x); });
        const double m = 1.0;
        double worst = 0.0;
        for (int s : {1, 2})
        {
            const double r0 = rho_norm(v0, m, s, 0.0);
            for (double t : {1.0, 10.0, 50.0, 100.0})
                worst = std::max(worst, std::abs(rho_norm(free_propagate(v0, m, t), m, s, t) - r0) / r0);
        }
        record("rho_free_flow_conservation", worst, 1e-10);
    }
    const double t1 = sw1.seconds();
    out.checks.push_back(detail::runtime_check("operator_suite", 1, t1, 10.0));

    detail::Stopwatch sw2;
    ctx.note("identities: W-deformation decay");
    Table decay{"w_decay.csv", {"field", "t", "q"}};
    {
        const Grid xi(512, 40.0);
        auto gauss = [&](double c, double w, double k) {
            return Field::sample(
                xi, [=](double x) { return std::exp(-(x - c) * (x - c) / (2 * w * w)) * std::polar(1.0, k * x); },
                Side::frequency);
        };
        const std::vector<Field> fields{
            gauss(0.0, 1.0, 0.0), gauss(1.0, 0.7, 2.0),
            Field::sample(xi, [](double x) { return cd(1.0 / std::cosh(x), 0.3 * std::tanh(x) / std::cosh(x)); },
                          Side::frequency)};
        double sup_q = 0.0, worst_slope = -std::numeric_limits<double>::infinity();
        for (std::size_t f = 0; f < fields.size(); ++f)
        {
            const double h1 = sobolev_norm(fields[f], 1);
            std::vector<double> ts, qs;
            for (int k = 0; k <= 16; ++k)
            {
                const double t = std::pow(10.0, 0.25 * k);
                const double q = std::pow(t, 0.25) * sup_norm(deform_W(fields[f], 1.0, t) - fields[f]) / h1;
                decay.add({static_cast<long long>(f + 1), t, q});
                ts.push_back(t);
                qs.push_back(q);
                sup_q = std::max(sup_q, q);
            }
            worst_slope = std::max(worst_slope, fit_growth_exponent(ts, qs, 1.0, 1e4).exponent);
        }
        out.checks.push_back(make_check("w_decay_sup_q", 2, sup_q, "<", 2.0));
        out.checks.push_back(make_check("w_decay_loglog_trend", 2, worst_slope, "<=", 0.0,
                                        "largest fitted exponent of q(t) over t in [1, 1e4]"));
    }
    out.checks.push_back(detail::runtime_check("w_decay", 2, sw2.seconds(), 30.0));
    out.tables = {std::move(ids), std::move(decay)};
    out.summary = json{{"operator_suite_s", t1}, {"w_decay_s", sw2.seconds()}};
    return out;
}

/// Profile growth exponents (case 1) and the profile vs Duhamel oracle (all requested cases).
inline ExperimentResult run_chain_validate(const RunConfig& cfg, const RunContext& ctx)
{
    ExperimentResult out;
    out.experiment = Experiment::chain_validate;
    const double eps = cfg.number("eps");
    const auto c1 = NonlinearityCase::resonant(QChoice::u2_squared);

    detail::Stopwatch sw3;
    ctx.note("chain_validate: case 1 profile trajectory");
    const Grid xi(static_cast<std::size_t>(cfg.integer("grid_n")), cfg.number("grid_length"));
    const Field psi = detail::gaussian_profile(xi, 0.0, cfg.number("psi_width"), c1.masses.m1);
    ProfileControls pc;
    pc.rel_tol = cfg.number("rel_tol");
    const double t_end = cfg.number("t_end");
    const auto traj = integrate(bootstrap(psi, eps, c1), c1, t_end, pc);

    Table tr{"trajectory.csv", {"t", "alpha1_sup", "alpha2_sup", "alpha3_sup", "rho1", "rho2", "rho3"}};
    std::vector<double> ts, a2, a3;
    double coef_worst = 0.0;
    const double t_coef = cfg.number("coefficient_t_min");
    for (std::size_t i = 0; i < traj.size(); ++i)
    {
        const ChainState s = traj.state(i);
        const double s1 = sup_norm(s.alpha1), s2 = sup_norm(s.alpha2), s3 = sup_norm(s.alpha3);
        tr.add({s.t, s1, s2, s3, traj.rho(s, 1, 1), traj.rho(s, 2, 1), traj.rho(s, 3, 1)});
        ts.push_back(s.t);
        a2.push_back(s2);
        a3.push_back(s3);
        if (s.t >= t_coef * (1.0 - 1e-12))
            coef_worst = std::max(coef_worst, std::abs(s3 / asymptotic_profile(c1, 3, s.t, eps, traj.psi()).envelope - 1.0));
    }
    Table prof{"profiles.csv", {"t", "xi", "alpha1_re", "alpha1_im", "alpha2_re", "alpha2_im", "alpha3_re", "alpha3_im"}};
    for (double t = 1.0; t <= t_end * (1.0 + 1e-12); t *= 10.0)
    {
        const ChainState s = traj.state_at(std::min(t, t_end));
        for (std::size_t j = 0; j < xi.size(); ++j)
            prof.add({s.t, xi.x(j), s.alpha1[j].real(), s.alpha1[j].imag(), s.alpha2[j].real(), s.alpha2[j].imag(),
                      s.alpha3[j].real(), s.alpha3[j].imag()});
    }
    const double lo = cfg.number("fit_t_min");
    const GrowthFit f2 = fit_growth_exponent(ts, a2, lo, t_end);
    const GrowthFit f3 = fit_growth_exponent(ts, a3, lo, t_end);
    out.checks.push_back(make_check("alpha2_exponent_error", 3, std::abs(f2.exponent - 0.5), "<=", 0.05,
                                    "fitted exponent " + format_double(f2.exponent)));
    out.checks.push_back(make_check("alpha3_exponent_error", 3, std::abs(f3.exponent - 1.5), "<=", 0.05,
                                    "fitted exponent " + format_double(f3.exponent)));
    out.checks.push_back(make_check("alpha3_peak_coefficient_error", 3, coef_worst, "<=", 0.1,
                                    "max over t >= " + format_double(t_coef) + " of |sup alpha3 / envelope - 1|"));
    const double t3 = sw3.seconds();
    out.checks.push_back(detail::runtime_check("profile_asymptotics", 3, t3, 300.0));

    detail::Stopwatch sw4;
    const auto cases = cfg.integers("cases");
    const auto times = cfg.numbers("oracle_times");
    const Grid gx(static_cast<std::size_t>(cfg.integer("oracle_grid_n")), cfg.number("oracle_grid_length"));
    const int n_quad = static_cast<int>(cfg.integer("n_quad"));
    const double width = cfg.number("psi_width");
    struct OracleRow
    {
        double t, e1, e2, e3;
    };
    const auto per_case = parallel_map(cases.size(), ctx.workers, [&](std::size_t k) {
        ctx.note("chain_validate: Duhamel oracle, case " + std::to_string(cases[k]));
        const auto c = NonlinearityCase::resonant(detail::case_choice(cases[k]));
        const Field p = detail::gaussian_profile(gx.dual(c.masses.m1), 0.0, width, c.masses.m1);
        const ChainSolution ch = solve_chain(p, eps, c, times, n_quad);
        const auto t = integrate(bootstrap(p, eps, c), c, times.back(), pc);
        std::vector<OracleRow> rows;
        for (std::size_t i = 0; i < times.size(); ++i)
        {
            const ChainState s = t.state_at(times[i]);
            rows.push_back({times[i], relative_l2(t.v_physical(s, 1, gx), ch.v1[i]),
                            relative_l2(t.v_physical(s, 2, gx), ch.v2[i]), relative_l2(t.v_physical(s, 3, gx), ch.v3[i])});
        }
        return rows;
    });
    Table orc{"oracle.csv", {"case", "t", "err_v1", "err_v2", "err_v3"}};
    json oracle = json::object();
    for (std::size_t k = 0; k < cases.size(); ++k)
    {
        double worst = 0.0;
        for (const auto& r : per_case[k])
        {
            orc.add({static_cast<long long>(cases[k]), r.t, r.e1, r.e2, r.e3});
            worst = std::max({worst, r.e1, r.e2, r.e3});
        }
        out.checks.push_back(make_check("oracle_case" + std::to_string(cases[k]) + "_max_rel_l2", 4, worst, "<", 1e-6));
        oracle[std::to_string(cases[k])] = worst;
    }
    const double t4 = sw4.seconds();
    out.checks.push_back(detail::runtime_check("dual_oracle", 4, t4, 600.0));

    out.tables = {std::move(tr), std::move(prof), std::move(orc)};
    out.summary = json{{"alpha2_fit", {{"exponent", f2.exponent}, {"coefficient", f2.coefficient}, {"residual", f2.residual}}},
                       {"alpha3_fit", {{"exponent", f3.exponent}, {"coefficient", f3.coefficient}, {"residual", f3.residual}}},
                       {"alpha3_peak_coefficient_error", coef_worst},
                       {"oracle_max_error", oracle},
                       {"profile_asymptotics_s", t3},
                       {"dual_oracle_s", t4}};
    return out;
}

/// Lifespan sweeps over eps for each requested case.
inline ExperimentResult run_lifespan_sweep(const RunConfig& cfg, const RunContext& ctx)
{
    ExperimentResult out;
    out.experiment = Experiment::lifespan_sweep;
    detail::Stopwatch sw;
    const Grid xi(static_cast<std::size_t>(cfg.integer("grid_n")), cfg.number("grid_length"));
    LifespanControls lc;
    lc.profile.rel_tol = cfg.number("rel_tol");
    lc.horizon = cfg.number("horizon");
    const auto eps_list = cfg.numbers("eps_list");
    const int samples = static_cast<int>(cfg.integer("probe_samples"));

    Table life{"lifespan.csv", {"case", "eps", "T_eps", "theta", "x_star", "kappa_hat", "K_hat"}};
    Table probe{"probe.csv", {"case", "sample", "eps", "T_eps", "lower", "upper"}};
    json fits = json::object();
    for (int k : cfg.integers("cases"))
    {
        detail::Stopwatch swc;
        ctx.note("lifespan_sweep: case " + std::to_string(k));
        const auto c = NonlinearityCase::resonant(detail::case_choice(k));
        const Field psi = detail::gaussian_profile(xi, 0.0, cfg.number("psi_width"), c.masses.m1);
        const SweepResult r = sweep(psi, c, eps_list, lc, ctx.workers);
        for (const auto& rec : r.records)
            life.add({static_cast<long long>(k), rec.eps, rec.T_eps, rec.theta, rec.x_star, r.kappa_hat, r.K_hat});
        const std::string tag = "case" + std::to_string(k);
        const double tol = r.order == 4 ? 0.15 : 0.2;
        out.checks.push_back(make_check(tag + "_slope_error", 5, std::abs(r.fit.exponent + r.order), "<=", tol,
                                        "slope " + format_double(r.fit.exponent) + " vs -" + std::to_string(r.order)));
        out.checks.push_back(make_check(tag + "_strictly_decreasing", 5, r.strictly_decreasing() ? 1.0 : 0.0, "==", 1.0));
        out.checks.push_back(make_check(tag + "_bracket_ratio", 5, r.K_hat / r.kappa_hat, "<", 10.0));
        out.checks.push_back(make_check(tag + "_records", 5, static_cast<double>(r.records.size()), ">=", 5.0));
        fits[std::to_string(k)] = json{{"order", r.order},
                                       {"slope", r.fit.exponent},
                                       {"coefficient", r.fit.coefficient},
                                       {"residual", r.fit.residual},
                                       {"kappa_hat", r.kappa_hat},
                                       {"K_hat", r.K_hat},
                                       {"seconds", swc.seconds()}};
        if (samples > 0)
        {
            ctx.note("lifespan_sweep: lower-bound probe, case " + std::to_string(k));
            const double eps = r.records.front().eps;
            const auto rep = general_data_lower_bound_probe(cfg.seed() + static_cast<std::uint64_t>(k), eps, c, samples,
                                                            psi, r.kappa_hat, r.K_hat, ProbeMode::general, lc);
            for (std::size_t i = 0; i < rep.T.size(); ++i)
                probe.add({static_cast<long long>(k), static_cast<long long>(i), eps, rep.T[i], rep.lower, rep.upper});
            out.checks.push_back(make_check(tag + "_probe_min_T_over_lower", 0, rep.min_T / rep.lower, ">=", 1.0,
                                            "exploratory: random data against the sweep bracket"));
        }
    }
    out.checks.push_back(detail::runtime_check("lifespan_sweep", 5, sw.seconds(), 3600.0));
    out.tables.push_back(std::move(life));
    if (samples > 0)
        out.tables.push_back(std::move(probe));
    out.summary = json{{"fits", fits}, {"seconds", sw.seconds()}};
    return out;
}

/// Detuned m3 against the resonant lifespan, and the gauge predicate truth table.
inline ExperimentResult run_detune(const RunConfig& cfg, const RunContext& ctx)
{
    ExperimentResult out;
    out.experiment = Experiment::detune;
    detail::Stopwatch sw;
    const auto c = NonlinearityCase::resonant(QChoice::u2_squared);
    const Grid xi(static_cast<std::size_t>(cfg.integer("grid_n")), cfg.number("grid_length"));
    const Field psi = detail::gaussian_profile(xi, cfg.number("psi_center"), cfg.number("psi_width"), c.masses.m1);
    const double eps = cfg.number("eps");
    LifespanControls lc;
    lc.profile.rel_tol = cfg.number("rel_tol");
    const auto deltas = cfg.numbers("deltas");

    ctx.note("detune: resonant lifespan");
    const LifespanRecord res = detect_lifespan(psi, c, eps, lc);
    const auto rows = parallel_map(deltas.size(), ctx.workers, [&](std::size_t i) {
        ctx.note("detune: delta = " + format_double(deltas[i]));
        return detune_experiment(psi, c, {deltas[i]}, eps, res.T_eps, lc).rows.front();
    });
    Table det{"detune.csv", {"delta", "m3", "max_v3", "t_at_max", "crossed"}};
    det.add({0.0, c.masses.m3, 1.0, res.T_eps, 1LL});
    json maxima = json::object();
    for (const auto& r : rows)
    {
        det.add({r.delta, r.m3, r.max_v3, r.t_at_max, static_cast<long long>(r.crossed)});
        const bool tagged = std::abs(std::abs(r.delta) - 0.2) < 1e-12;
        out.checks.push_back(make_check("max_v3_delta_" + format_double(r.delta), tagged ? 8 : 0, r.max_v3, "<", 0.5,
                                        tagged ? "" : "exploratory: only 20% detuning is an acceptance check"));
        maxima[format_double(r.delta)] = r.max_v3;
    }

    Table gauge{"gauge.csv", {"q_case", "m1", "m2", "m3", "predicate", "expected"}};
    int mismatches = 0, entries = 0;
    auto add = [&](QChoice q, const MassTriple& m, bool expected) {
        const bool got = gauge_condition_holds(NonlinearityCase{q, m}, cfg.seed());
        gauge.add({static_cast<long long>(detail::case_index(q)), m.m1, m.m2, m.m3, static_cast<long long>(got),
                   static_cast<long long>(expected)});
        mismatches += got != expected;
        ++entries;
    };
    for (QChoice q : all_q_choices)
        for (QChoice p : all_q_choices)
            add(q, resonant_masses(p), q == p);
    for (QChoice q : all_q_choices)
        for (double d : deltas)
            add(q, NonlinearityCase::resonant(q).detuned(d).masses, false);
    out.checks.push_back(make_check("gauge_truth_table_mismatches", 8, mismatches, "==", 0.0,
                                    std::to_string(entries) + " pairings"));
    out.checks.push_back(detail::runtime_check("detune", 8, sw.seconds(), 300.0));
    out.tables = {std::move(det), std::move(gauge)};
    out.summary = json{{"T_eps", res.T_eps}, {"max_v3", maxima}, {"seconds", sw.seconds()}};
    return out;
}

/// Blow-up construction round trip and full-solver cross-validation (case 1).
inline ExperimentResult run_full_validate(const RunConfig& cfg, const RunContext& ctx)
{
    ExperimentResult out;
    out.experiment = Experiment::full_validate;
    detail::Stopwatch sw6;
    const auto c = NonlinearityCase::resonant(QChoice::u2_squared);
    const double eps = cfg.number("eps");
    const Grid xi(static_cast<std::size_t>(cfg.integer("grid_n")), cfg.number("grid_length"));
    const Field psi = detail::gaussian_profile(xi, 0.0, cfg.number("psi_width"), c.masses.m1);
    ProfileControls pc;
    pc.rel_tol = cfg.number("rel_tol");
    ctx.note("full_validate: blow-up data");
    const auto traj = detail::blowup_trajectory(psi, eps, c, pc, 1e7);
    const BlowupData d = build_blowup_data(traj, eps, c);
    const double cap = cfg.number("sigma_cap");
    const double t_cap = locate_level(traj, cap).T;
    const Grid phys(static_cast<std::size_t>(cfg.integer("solver_grid_n")), cfg.number("solver_grid_length"));

    ctx.note("full_validate: H^1 growth");
    Table blow{"blowup.csv", {"t", "gap", "u3_h1", "ratio"}};
    const double T = d.T_eps;
    const double half = u3_h1_norm(traj, d.theta, 0.5 * T);
    blow.add({0.5 * T, 0.5, half, 1.0});
    double prev = half, ratio = 1.0;
    int decreases = 0;
    for (double gap : cfg.numbers("h1_gaps"))
    {
        const double n = u3_h1_norm(traj, d.theta, T * (1.0 - gap));
        ratio = n / half;
        blow.add({T * (1.0 - gap), gap, n, ratio});
        decreases += n <= prev;
        prev = n;
    }
    out.checks.push_back(make_check("u3_h1_growth_ratio", 6, ratio, ">", 10.0, "at the smallest gap to T_eps"));
    out.checks.push_back(make_check("u3_h1_non_increasing_steps", 6, decreases, "==", 0.0));

    ctx.note("full_validate: system residual");
    Table rec{"reconstruction.csv", {"t", "sigma_sup", "r1", "r2", "r3"}};
    double worst_r = 0.0;
    for (double f : {0.25, 0.5, 0.75, 0.9, 1.0})
    {
        const double t = f * t_cap;
        const SystemResidual r = reconstruction_residual(traj, d.theta, t, phys, 1e-2);
        rec.add({t, traj.v_sup(traj.state_at(t), 3), r.r1, r.r2, r.r3});
        worst_r = std::max(worst_r, r.max());
    }
    out.checks.push_back(make_check("system_residual_max", 6, worst_r, "<", 1e-5,
                                    "while sup sigma <= " + format_double(cap)));
    const double t6 = sw6.seconds();
    out.checks.push_back(detail::runtime_check("blowup_round_trip", 6, t6, 300.0));

    detail::Stopwatch sw7;
    const FieldTriple phi{resample(d.phi1, phys), Field(phys), Field(phys)};
    SolverControls sc;
    sc.rel_tol = cfg.number("solver_rel_tol");
    sc.sigma_cap = cap;
    sc.t_max = 0.999 * t_cap;
    for (int k = 1; k < 8; ++k)
        sc.snapshots.push_back(k * t_cap / 8.0);
    sc.snapshots.push_back(sc.t_max);
    ctx.note("full_validate: adaptive full solver");
    const auto full = evolve_full(phi, c, sc);
    Table fs{"full_solver.csv", {"t", "sigma_sup", "rel_error"}};
    double worst_e = 0.0;
    for (const auto& s : full.snapshots)
    {
        if (s.t < 1.0)
            continue;
        const double e = detail::triple_error(s.u, reconstruct_u(traj, d.theta, s.t, phys));
        fs.add({s.t, s.sigma_sup, e});
        worst_e = std::max(worst_e, e);
    }
    out.checks.push_back(make_check("full_solver_max_rel_l2", 7, worst_e, "<", 1e-4,
                                    "up to t = " + format_double(sc.t_max) + ", stop: " + to_string(full.stop)));

    const auto dts = cfg.numbers("halving_dts");
    const double th = cfg.number("halving_t");
    const UTriple ref = reconstruct_u(traj, d.theta, th, phys);
    const auto errs = parallel_map(dts.size(), ctx.workers, [&](std::size_t i) {
        ctx.note("full_validate: fixed step dt = " + format_double(dts[i]));
        SolverControls f;
        f.adaptive = false;
        f.dt_init = dts[i];
        f.t_max = th;
        f.sigma_cap = cap;
        const auto tr = evolve_full(phi, c, f);
        return detail::triple_error(tr.snapshots.back().u, ref);
    });
    Table halv{"halving.csv", {"dt", "rel_error", "observed_order"}};
    double worst_order = 0.0;
    for (std::size_t i = 0; i < dts.size(); ++i)
    {
        double order = std::numeric_limits<double>::quiet_NaN();
        if (i > 0)
        {
            order = std::log(errs[i - 1] / errs[i]) / std::log(dts[i - 1] / dts[i]);
            worst_order = std::max(worst_order, std::abs(order - 4.0));
        }
        halv.add({dts[i], errs[i], order});
    }
    out.checks.push_back(make_check("step_halving_order_deviation", 7, worst_order, "<", 0.5,
                                    "largest |observed order - 4| over consecutive steps"));
    const double t7 = sw7.seconds();
    out.checks.push_back(detail::runtime_check("full_solver", 7, t7, 600.0));

    out.tables = {std::move(blow), std::move(rec), std::move(fs), std::move(halv)};
    out.summary = json{{"T_eps", T},
                       {"t_sigma_cap", t_cap},
                       {"theta", d.theta},
                       {"x_star", d.x_star},
                       {"h1_ratio", ratio},
                       {"system_residual_max", worst_r},
                       {"full_solver_max_error", worst_e},
                       {"accepted_steps", full.accepted},
                       {"rejected_steps", full.rejected},
                       {"mass1_drift", full.mass1_drift},
                       {"blowup_round_trip_s", t6},
                       {"full_solver_s", t7}};
    return out;
}

namespace detail
{

inline FieldND bump(const FieldND& shape, double a, double cx, double cy, double w, double kx = 0.0, double chirp = 0.0)
{
    return FieldND::sample(shape, [=](double x, double y) {
        const double r2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
        return a * std::exp(-r2 / (2.0 * w * w)) * std::polar(1.0, kx * x + chirp * r2);
    });
}

inline TripleND interacting(const FieldND& shape)
{
    return {bump(shape, 1.0, 0.5, 0.2, 1.2, 0.3, 0.1), bump(shape, 0.8, -0.4, 0.1, 1.0, -0.2, -0.05),
            bump(shape, 0.6, 0.0, -0.3, 1.5, 0.1, 0.2)};
}

inline TripleND scaled(TripleND p, double s)
{
    for (auto& f : p)
        f *= s;
    return p;
}

} // namespace detail

/// Virial identities of the 3-wave system in 1D and 2D, and the energy sign threshold.
inline ExperimentResult run_virial(const RunConfig& cfg, const RunContext& ctx)
{
    ExperimentResult out;
    out.experiment = Experiment::virial;
    detail::Stopwatch sw;
    const FieldND shape1(Grid(static_cast<std::size_t>(cfg.integer("grid_n")), cfg.number("grid_length")));
    const Grid g2(static_cast<std::size_t>(cfg.integer("grid2_n")), cfg.number("grid2_length"));
    const FieldND shape2(g2, g2);
    const MassTriple resonant(1.0, 2.0, 3.0), detuned(1.0, 2.0, cfg.number("m3_detuned"));
    WaveControls wc;
    wc.dt = cfg.number("dt");
    wc.snapshot_dt = cfg.number("snapshot_dt");
    wc.t_max = cfg.number("t_max");
    const auto dims = cfg.integers("dimensions");

    struct Job
    {
        int dim;
        bool on_resonance;
    };
    std::vector<Job> jobs;
    for (int n : dims)
        for (bool r : {true, false})
            jobs.push_back({n, r});
    const auto reports = parallel_map(jobs.size(), ctx.workers, [&](std::size_t i) {
        const Job& j = jobs[i];
        ctx.note("virial: " + std::to_string(j.dim) + "D " + (j.on_resonance ? "resonant" : "detuned"));
        const FieldND& shape = j.dim == 1 ? shape1 : shape2;
        return check_identities(evolve_3wave(detail::interacting(shape), j.on_resonance ? resonant : detuned, wc));
    });
    json runs = json::object();
    for (std::size_t i = 0; i < jobs.size(); ++i)
    {
        const Job& j = jobs[i];
        const IdentityReport& r = reports[i];
        const std::string tag = std::to_string(j.dim) + "d_" + (j.on_resonance ? "resonant" : "detuned");
        Table t{"virial_" + tag + ".csv", {"t", "dE_residual", "variance_residual", "dV_residual", "cross_term"}};
        for (const auto& row : r.rows)
            t.add({row.t, row.dE_residual, row.variance_residual, row.dV_residual, row.cross_term});
        out.tables.push_back(std::move(t));
        out.checks.push_back(make_check(tag + "_dE_residual", 9, r.max_dE, "<", 1e-6));
        out.checks.push_back(make_check(tag + "_variance_residual", 9, r.max_variance, "<", 1e-4));
        out.checks.push_back(make_check(tag + "_dV_residual", 9, r.max_dV, "<", 1e-4));
        if (j.on_resonance)
            out.checks.push_back(make_check(tag + "_cross_term_coefficient", 9, r.coefficient, "==", 0.0));
        else
            out.checks.push_back(make_check(tag + "_ablation_degradation", 9, r.max_variance_ablated / r.max_variance,
                                            ">=", 10.0, "variance residual without the cross term over with it"));
        runs[tag] = json{{"max_dE", r.max_dE},
                         {"max_variance", r.max_variance},
                         {"max_dV", r.max_dV},
                         {"max_variance_ablated", r.max_variance_ablated},
                         {"coefficient", r.coefficient}};
    }

    ctx.note("virial: energy sign threshold");
    {
        // Real Gaussians a_j e^{-x^2/(2 w_j^2)} have closed-form kinetic and interaction terms.
        const double a[3] = {1.0, 0.7, -0.9}, w[3] = {1.0, 1.3, 0.8};
        TripleND psi{shape1, shape1, shape1};
        double k = 0.0, alpha = 0.0;
        for (int j = 0; j < 3; ++j)
        {
            psi[static_cast<std::size_t>(j)] = detail::bump(shape1, a[j], 0.0, 0.0, w[j]);
            k += a[j] * a[j] * std::sqrt(pi) / (2.0 * w[j]) / (2.0 * resonant[j + 1]);
            alpha += 1.0 / (2.0 * w[j] * w[j]);
        }
        const double oracle = k / (2.0 * std::abs(a[0] * a[1] * a[2] * std::sqrt(pi / alpha)));
        out.checks.push_back(make_check("threshold_oracle_rel_error", 9,
                                        std::abs(energy_sign_threshold(psi, resonant) - oracle) / oracle, "<", 1e-8));
    }
    Table energy{"energy.csv", {"dim", "trial", "eps_star", "factor", "eps", "E"}};
    std::mt19937_64 rng(cfg.seed());
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    double min_below = std::numeric_limits<double>::infinity(), max_above = -std::numeric_limits<double>::infinity();
    const int trials = static_cast<int>(cfg.integer("trials"));
    for (int n : dims)
    {
        const FieldND& shape = n == 1 ? shape1 : shape2;
        for (int trial = 0; trial < trials; ++trial)
        {
            TripleND psi{shape, shape, shape};
            for (auto& f : psi)
                f = detail::bump(shape, 1.0 + 0.5 * u(rng), u(rng), u(rng), 1.2 + 0.3 * u(rng), u(rng), 0.1 * u(rng)) *
                    std::polar(1.0, pi * u(rng));
            const double eps_star = energy_sign_threshold(psi, resonant);
            const bool finite = std::isfinite(eps_star);
            for (double f : {0.05, 0.25, 0.5, 0.99, 1.05})
            {
                if (f > 1.0 && !finite)
                    continue;
                const double eps = finite ? f * eps_star : f;
                const double E = energy_E(detail::scaled(psi, eps), resonant);
                energy.add({static_cast<long long>(n), static_cast<long long>(trial), eps_star, f, eps, E});
                if (f < 1.0)
                    min_below = std::min(min_below, E);
                else
                    max_above = std::max(max_above, E);
            }
        }
    }
    out.checks.push_back(make_check("energy_min_below_threshold", 9, min_below, ">", 0.0));
    if (std::isfinite(max_above))
        out.checks.push_back(make_check("energy_max_just_above_threshold", 9, max_above, "<", 0.0,
                                        "the threshold is sharp"));
    out.tables.push_back(std::move(energy));
    out.checks.push_back(detail::runtime_check("virial", 9, sw.seconds(), 600.0));
    out.summary = json{{"runs", runs}, {"seconds", sw.seconds()}};
    return out;
}

inline ExperimentResult run_experiment(const RunConfig& cfg, const RunContext& ctx = {})
{
    switch (cfg.experiment)
    {
    case Experiment::identities:
        return run_identities(cfg, ctx);
    case Experiment::chain_validate:
        return run_chain_validate(cfg, ctx);
    case Experiment::lifespan_sweep:
        return run_lifespan_sweep(cfg, ctx);
    case Experiment::detune:
        return run_detune(cfg, ctx);
    case Experiment::full_validate:
        return run_full_validate(cfg, ctx);
    case Experiment::virial:
        return run_virial(cfg, ctx);
    }
    throw InvalidArgument("run_experiment: unknown experiment");
}

} // namespace qnls
