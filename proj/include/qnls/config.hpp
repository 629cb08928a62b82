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

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace qnls
{

using json = nlohmann::ordered_json;

enum class Experiment
{
    identities,
    chain_validate,
    lifespan_sweep,
    detune,
    full_validate,
    virial,
};

inline constexpr std::array all_experiments{Experiment::identities,    Experiment::chain_validate,
                                            Experiment::lifespan_sweep, Experiment::detune,
                                            Experiment::full_validate, Experiment::virial};

inline std::string_view to_string(Experiment e)
{
    switch (e)
    {
    case Experiment::identities:
        return "identities";
    case Experiment::chain_validate:
        return "chain_validate";
    case Experiment::lifespan_sweep:
        return "lifespan_sweep";
    case Experiment::detune:
        return "detune";
    case Experiment::full_validate:
        return "full_validate";
    case Experiment::virial:
        return "virial";
    }
    return "identities";
}

inline std::optional<Experiment> experiment_from_string(std::string_view s)
{
    for (auto e : all_experiments)
        if (to_string(e) == s)
            return e;
    return std::nullopt;
}

enum class KeyKind
{
    integer,
    number,
    string,
    integer_list,
    number_list,
};

/// One documented config key. `check` returns an empty string when a value is acceptable and
/// the reason otherwise; list checks see the whole list.
struct KeySpec
{
    std::string name;
    KeyKind kind;
    std::string help;
    std::function<std::string(const json&)> check;
};

namespace detail
{

inline std::string show(const json& v)
{
    if (v.is_number_float())
    {
        std::ostringstream os;
        os.precision(17);
        os << v.get<double>();
        return os.str();
    }
    return v.dump();
}

inline std::function<std::string(const json&)> scalar(std::function<bool(double)> ok, std::string rule)
{
    return [ok, rule](const json& v) { return ok(v.get<double>()) ? std::string() : "must be " + rule; };
}

inline std::function<std::string(const json&)> each(std::function<bool(double)> ok, std::string rule,
                                                    std::size_t min_size = 1)
{
    return [ok, rule, min_size](const json& v) -> std::string {
        if (v.size() < min_size)
            return "needs at least " + std::to_string(min_size) + " entries";
        for (std::size_t i = 0; i < v.size(); ++i)
            if (!ok(v[i].get<double>()))
                return "[" + std::to_string(i) + "] = " + show(v[i]) + " must be " + rule;
        return {};
    };
}

inline bool power_of_two(double v)
{
    const auto n = static_cast<long long>(v);
    return n >= 8 && n <= (1LL << 20) && (n & (n - 1)) == 0;
}

inline std::string distinct(const json& v)
{
    std::vector<double> x;
    for (const auto& e : v)
        x.push_back(e.get<double>());
    std::sort(x.begin(), x.end());
    return std::adjacent_find(x.begin(), x.end()) == x.end() ? std::string() : "entries must be distinct";
}

inline std::string spans_factor(const json& v, double factor)
{
    double lo = v.front().get<double>(), hi = lo;
    for (const auto& e : v)
    {
        lo = std::min(lo, e.get<double>());
        hi = std::max(hi, e.get<double>());
    }
    return hi >= factor * lo ? std::string() : "entries must span a factor of at least " + show(json(factor));
}

inline std::string monotone(const json& v, bool increasing)
{
    for (std::size_t i = 1; i < v.size(); ++i)
    {
        const double a = v[i - 1].get<double>(), b = v[i].get<double>();
        if (increasing ? !(b > a) : !(b < a))
            return std::string("entries must be strictly ") + (increasing ? "increasing" : "decreasing");
    }
    return {};
}

template <class... C>
std::function<std::string(const json&)> all_of(C... checks)
{
    return [=](const json& v) {
        std::string r;
        ((r.empty() ? (void)(r = checks(v)) : (void)0), ...);
        return r;
    };
}

inline std::size_t edit_distance(std::string_view a, std::string_view b)
{
    std::vector<std::size_t> row(b.size() + 1);
    for (std::size_t j = 0; j <= b.size(); ++j)
        row[j] = j;
    for (std::size_t i = 1; i <= a.size(); ++i)
    {
        std::size_t diag = row[0];
        row[0] = i;
        for (std::size_t j = 1; j <= b.size(); ++j)
        {
            const std::size_t up = row[j];
            row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
            diag = up;
        }
    }
    return row[b.size()];
}

} // namespace detail

/// Every key the runner understands, across all experiments.
inline const std::vector<KeySpec>& key_schema()
{
    using detail::each;
    using detail::scalar;
    auto pos = [](double v) { return v > 0.0; };
    auto unit = [](double v) { return v > 0.0 && v <= 1.0; };
    auto finite = [](double v) { return std::isfinite(v); };
    auto case_id = [](double v) { return v >= 1.0 && v <= 4.0; };
    static const std::vector<KeySpec> keys{
        {"experiment", KeyKind::string, "experiment to run (see `list`)", nullptr},
        {"seed", KeyKind::integer, "seed for random test data", scalar([](double v) { return v >= 0.0; }, ">= 0")},
        {"output_dir", KeyKind::string, "directory for CSVs and the manifest", [](const json& v) {
             return v.get<std::string>().empty() ? std::string("must not be empty") : std::string();
         }},
        {"trials", KeyKind::integer, "number of random test fields or triples", scalar([](double v) { return v >= 1.0 && v <= 1000.0; }, "in [1, 1000]")},
        {"eps", KeyKind::number, "data size", scalar(unit, "in (0, 1]")},
        {"eps_list", KeyKind::number_list, "data sizes of a sweep",
         detail::all_of(each(unit, "in (0, 1]", 4), detail::distinct,
                        [](const json& v) { return detail::spans_factor(v, 4.0); })},
        {"cases", KeyKind::integer_list, "nonlinearity cases 1..4", detail::all_of(each(case_id, "in 1..4"), detail::distinct)},
        {"grid_n", KeyKind::integer, "points of the frequency grid", scalar(detail::power_of_two, "a power of two in [8, 2^20]")},
        {"grid_length", KeyKind::number, "length of the frequency grid", scalar(pos, "> 0")},
        {"psi_center", KeyKind::number, "center of the Gaussian profile", scalar(finite, "finite")},
        {"psi_width", KeyKind::number, "width of the Gaussian profile", scalar(pos, "> 0")},
        {"rel_tol", KeyKind::number, "relative tolerance of the profile integrator",
         scalar([](double v) { return v > 0.0 && v <= 1e-2; }, "in (0, 1e-2]")},
        {"horizon", KeyKind::number, "largest time searched for a crossing", scalar([](double v) { return v > 1.0; }, "> 1")},
        {"t_end", KeyKind::number, "end time of the profile trajectory", scalar([](double v) { return v > 10.0; }, "> 10")},
        {"fit_t_min", KeyKind::number, "start of the growth-exponent fit window", scalar([](double v) { return v >= 1.0; }, ">= 1")},
        {"coefficient_t_min", KeyKind::number, "first time of the peak-coefficient check", scalar([](double v) { return v >= 1.0; }, ">= 1")},
        {"oracle_grid_n", KeyKind::integer, "points of the physical grid of the Duhamel oracle", scalar(detail::power_of_two, "a power of two in [8, 2^20]")},
        {"oracle_grid_length", KeyKind::number, "length of the physical grid of the Duhamel oracle", scalar(pos, "> 0")},
        {"oracle_times", KeyKind::number_list, "comparison times of the Duhamel oracle",
         detail::all_of(each([](double v) { return v >= 1.0; }, ">= 1"), [](const json& v) { return detail::monotone(v, true); })},
        {"n_quad", KeyKind::integer, "Duhamel quadrature panels per unit time", scalar([](double v) { return v >= 8.0 && v <= 4096.0; }, "in [8, 4096]")},
        {"deltas", KeyKind::number_list, "relative detunings of m3",
         detail::all_of(each([](double v) { return v > -1.0 && v < 1.0 && v != 0.0; }, "nonzero and in (-1, 1)"), detail::distinct)},
        {"solver_grid_n", KeyKind::integer, "points of the full-solver grid", scalar(detail::power_of_two, "a power of two in [8, 2^20]")},
        {"solver_grid_length", KeyKind::number, "length of the full-solver grid", scalar(pos, "> 0")},
        {"solver_rel_tol", KeyKind::number, "relative tolerance of the adaptive full solver",
         scalar([](double v) { return v > 0.0 && v <= 1e-2; }, "in (0, 1e-2]")},
        {"sigma_cap", KeyKind::number, "sup of sigma at which the full solver stops",
         scalar([](double v) { return v > 0.0 && v < 1.0; }, "in (0, 1)")},
        {"halving_dts", KeyKind::number_list, "fixed steps of the step-halving study",
         detail::all_of(each(pos, "> 0", 2), [](const json& v) { return detail::monotone(v, false); })},
        {"halving_t", KeyKind::number, "end time of the step-halving study", scalar([](double v) { return v >= 1.0; }, ">= 1")},
        {"h1_gaps", KeyKind::number_list, "values of 1 - t/T at which the H^1 norm is sampled",
         detail::all_of(each([](double v) { return v > 0.0 && v < 0.5; }, "in (0, 0.5)"),
                        [](const json& v) { return detail::monotone(v, false); })},
        {"dimensions", KeyKind::integer_list, "space dimensions of the virial runs",
         detail::all_of(each([](double v) { return v == 1.0 || v == 2.0; }, "1 or 2"), detail::distinct)},
        {"grid2_n", KeyKind::integer, "points per axis of the 2D virial grid", scalar(detail::power_of_two, "a power of two in [8, 2^20]")},
        {"grid2_length", KeyKind::number, "length per axis of the 2D virial grid", scalar(pos, "> 0")},
        {"m3_detuned", KeyKind::number, "third mass of the off-resonant virial run",
         scalar([](double v) { return v > 0.0 && v != 3.0; }, "> 0 and different from 3")},
        {"dt", KeyKind::number, "time step", scalar(pos, "> 0")},
        {"snapshot_dt", KeyKind::number, "spacing of recorded states", scalar(pos, "> 0")},
        {"t_max", KeyKind::number, "end time", scalar(pos, "> 0")},
        {"probe_samples", KeyKind::integer, "random profiles per case for the exploratory lower-bound probe",
         scalar([](double v) { return v >= 0.0 && v <= 1000.0; }, "in [0, 1000]")},
    };
    return keys;
}

inline const KeySpec* find_key(std::string_view name)
{
    for (const auto& k : key_schema())
        if (k.name == name)
            return &k;
    return nullptr;
}

struct ExperimentInfo
{
    Experiment id;
    std::string summary;
    std::vector<int> criteria;
    std::string runtime;
    std::vector<std::string> required;
    json defaults;
    std::string note;
};

/// The six experiments with their keys, defaults and expected runtimes on one core.
inline const std::vector<ExperimentInfo>& catalog()
{
    static const std::vector<ExperimentInfo> c{
        {Experiment::identities,
         "operator identities (Leibniz, commutators, factorization, round trips, free-flow rho) and W-deformation decay",
         {1, 2},
         "~1 s",
         {"experiment"},
         json{{"seed", 1}, {"trials", 4}},
         ""},
        {Experiment::chain_validate,
         "profile growth exponents and alpha3 peak coefficient (case 1), profile vs Duhamel chain oracle",
         {3, 4},
         "~5 min",
         {"experiment"},
         json{{"seed", 1},
              {"eps", 0.6},
              {"grid_n", 512},
              {"grid_length", 32.0},
              {"psi_width", 1.0},
              {"rel_tol", 1e-8},
              {"t_end", 1e4},
              {"fit_t_min", 1e2},
              {"coefficient_t_min", 1e3},
              {"cases", {1, 2, 3, 4}},
              {"oracle_grid_n", 4096},
              {"oracle_grid_length", 700.0},
              {"oracle_times", {1.0, 2.0, 5.0, 10.0, 20.0, 35.0, 50.0}},
              {"n_quad", 8}},
         ""},
        {Experiment::lifespan_sweep,
         "lifespan T_eps over an eps sweep, log-log slope and empirical bracket",
         {5},
         "~5 s per case (case 1 or 4), ~15 s per case (case 2 or 3)",
         {"experiment"},
         json{{"seed", 1},
              {"cases", {1}},
              {"eps_list", {0.25, 0.315, 0.4, 0.5, 0.63, 0.8, 1.0}},
              {"grid_n", 512},
              {"grid_length", 32.0},
              {"psi_width", 2.0},
              {"rel_tol", 1e-8},
              {"horizon", 1e7},
              {"probe_samples", 0}},
         "lifespan_sweep scales like ε_min^{-6} for cases 2–3"},
        {Experiment::detune,
         "max ||v3||_inf under detuned m3 up to the resonant lifespan, gauge predicate truth table",
         {8},
         "~4 min",
         {"experiment"},
         json{{"seed", 1},
              {"eps", 0.8},
              {"deltas", {0.2, -0.2}},
              {"grid_n", 4096},
              {"grid_length", 16.0},
              {"psi_center", 1.5},
              {"psi_width", 1.0},
              {"rel_tol", 1e-8}},
         ""},
        {Experiment::full_validate,
         "blow-up data round trip (H^1 growth, system residual) and full-solver cross-validation (case 1)",
         {6, 7},
         "~1 min",
         {"experiment"},
         json{{"seed", 1},
              {"eps", 0.8},
              {"grid_n", 512},
              {"grid_length", 32.0},
              {"psi_width", 1.0},
              {"rel_tol", 1e-8},
              {"solver_grid_n", 8192},
              {"solver_grid_length", 400.0},
              {"solver_rel_tol", 1e-10},
              {"sigma_cap", 0.9},
              {"halving_dts", {0.04, 0.02, 0.01}},
              {"halving_t", 20.0},
              {"h1_gaps", {1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7}}},
         ""},
        {Experiment::virial,
         "energy, variance and dilation identities of the 3-wave system in 1D and 2D, energy sign threshold",
         {9},
         "~40 s",
         {"experiment"},
         json{{"seed", 1},
              {"dimensions", {1, 2}},
              {"grid_n", 512},
              {"grid_length", 40.0},
              {"grid2_n", 128},
              {"grid2_length", 30.0},
              {"m3_detuned", 2.5},
              {"dt", 1e-3},
              {"snapshot_dt", 1e-2},
              {"t_max", 1.0},
              {"trials", 8}},
         ""},
    };
    return c;
}

inline const ExperimentInfo& info(Experiment e)
{
    for (const auto& i : catalog())
        if (i.id == e)
            return i;
    return catalog().front();
}

/// A validated configuration: the experiment plus every key it uses, defaults filled in.
class RunConfig
{
public:
    Experiment experiment = Experiment::identities;
    std::string output_dir;

    /// Effective values in canonical order; this is what the config hash covers.
    const json& values() const { return values_; }

    double number(const std::string& key) const { return at(key).get<double>(); }
    long long integer(const std::string& key) const { return at(key).get<long long>(); }
    std::uint64_t seed() const { return at("seed").get<std::uint64_t>(); }
    std::vector<double> numbers(const std::string& key) const { return at(key).get<std::vector<double>>(); }
    std::vector<int> integers(const std::string& key) const { return at(key).get<std::vector<int>>(); }

    /// Replaces one value after validating it, e.g. a seed given on the command line.
    void set(const std::string& key, const json& value);

    /// {"experiment": ..., sorted keys...} serialized without whitespace.
    std::string canonical() const
    {
        json j;
        j["experiment"] = std::string(to_string(experiment));
        for (const auto& [k, v] : values_.items())
            j[k] = v;
        return j.dump();
    }

private:
    const json& at(const std::string& key) const
    {
        if (!values_.contains(key))
            throw ConfigError(key, "not used by experiment '" + std::string(to_string(experiment)) + "'");
        return values_.at(key);
    }

    json values_ = json::object();
    friend RunConfig parse_config(std::string_view, const std::string&);
};

namespace detail
{

inline json coerce(const KeySpec& spec, const json& v)
{
    auto fail = [&](const std::string& what) { throw ConfigError(spec.name, spec.name + " = " + show(v) + ": " + what); };
    auto as_integer = [&](const json& e) -> json {
        if (e.is_number_integer())
            return e;
        if (e.is_number_float() && std::isfinite(e.get<double>()) && std::floor(e.get<double>()) == e.get<double>() &&
            std::abs(e.get<double>()) < 9e15)
            return static_cast<long long>(e.get<double>());
        fail("expected an integer");
        return {};
    };
    auto as_number = [&](const json& e) -> json {
        if (!e.is_number() || !std::isfinite(e.get<double>()))
            fail("expected a finite number");
        return e.get<double>();
    };
    switch (spec.kind)
    {
    case KeyKind::string:
        if (!v.is_string())
            fail("expected a string");
        return v;
    case KeyKind::integer:
        return as_integer(v);
    case KeyKind::number:
        return as_number(v);
    case KeyKind::integer_list:
    case KeyKind::number_list: {
        if (!v.is_array())
            fail("expected a list");
        json out = json::array();
        for (const auto& e : v)
            out.push_back(spec.kind == KeyKind::integer_list ? as_integer(e) : as_number(e));
        return out;
    }
    }
    return v;
}

inline json validated(const KeySpec& spec, const json& v)
{
    json c = coerce(spec, v);
    if (spec.check)
    {
        const std::string why = spec.check(c);
        if (!why.empty())
        {
            if (why.front() == '[')
                throw ConfigError(spec.name, spec.name + why);
            throw ConfigError(spec.name, spec.name + " = " + show(c) + " " + why);
        }
    }
    return c;
}

inline std::string suggestion(const std::string& key, const json& allowed)
{
    std::string best;
    std::size_t dist = 3;
    for (const auto& [k, v] : allowed.items())
    {
        const std::size_t d = edit_distance(key, k);
        if (d < dist)
        {
            dist = d;
            best = k;
        }
    }
    return best.empty() ? std::string() : " (did you mean '" + best + "'?)";
}

inline void cross_checks(const RunConfig& cfg)
{
    const json& v = cfg.values();
    if (v.contains("fit_t_min") && v.contains("t_end") && !(cfg.number("fit_t_min") * 10.0 <= cfg.number("t_end")))
        throw ConfigError("fit_t_min", "fit_t_min must be at most t_end / 10");
    if (v.contains("coefficient_t_min") && v.contains("t_end") && !(cfg.number("coefficient_t_min") < cfg.number("t_end")))
        throw ConfigError("coefficient_t_min", "coefficient_t_min must be below t_end");
    if (v.contains("snapshot_dt") && v.contains("t_max") && !(cfg.number("t_max") >= 5.0 * cfg.number("snapshot_dt")))
        throw ConfigError("t_max", "t_max must cover at least 5 snapshots");
    if (v.contains("dt") && v.contains("snapshot_dt") && !(cfg.number("dt") <= cfg.number("snapshot_dt")))
        throw ConfigError("dt", "dt must not exceed snapshot_dt");
}

} // namespace detail

inline void RunConfig::set(const std::string& key, const json& value)
{
    const KeySpec* spec = find_key(key);
    if (!spec || !values_.contains(key))
        throw ConfigError(key, "unknown key for experiment '" + std::string(to_string(experiment)) + "'");
    values_[key] = detail::validated(*spec, value);
}

/// Parses a JSON config (comments allowed). `origin` names the source in parse errors.
inline RunConfig parse_config(std::string_view text, const std::string& origin = "config")
{
    json doc;
    try
    {
        doc = json::parse(text.begin(), text.end(), nullptr, true, true);
    }
    catch (const json::parse_error& e)
    {
        throw ConfigError(origin, std::string("not valid JSON: ") + e.what());
    }
    if (!doc.is_object())
        throw ConfigError(origin, "top level must be an object");
    if (!doc.contains("experiment"))
        throw ConfigError("experiment", "required key is missing");
    if (!doc["experiment"].is_string())
        throw ConfigError("experiment", "experiment = " + doc["experiment"].dump() + ": expected a string");
    const auto e = experiment_from_string(doc["experiment"].get<std::string>());
    if (!e)
        throw ConfigError("experiment", "experiment = " + doc["experiment"].dump() + ": unknown experiment");

    const ExperimentInfo& inf = info(*e);
    RunConfig cfg;
    cfg.experiment = *e;
    cfg.output_dir = "results/" + std::string(to_string(*e));
    json values = inf.defaults;
    for (const auto& [key, v] : doc.items())
    {
        if (key == "experiment")
            continue;
        if (key == "output_dir")
        {
            cfg.output_dir = detail::validated(*find_key(key), v).get<std::string>();
            continue;
        }
        if (!inf.defaults.contains(key))
        {
            if (find_key(key))
                throw ConfigError(key, "key is not used by experiment '" + std::string(to_string(*e)) + "'");
            throw ConfigError(key, "unknown key" + detail::suggestion(key, inf.defaults));
        }
        values[key] = detail::validated(*find_key(key), v);
    }
    for (const auto& [key, v] : values.items())
        values[key] = detail::validated(*find_key(key), v);
    cfg.values_ = json::object();
    std::vector<std::string> keys;
    for (const auto& [key, v] : values.items())
        keys.push_back(key);
    std::sort(keys.begin(), keys.end());
    for (const auto& k : keys)
        cfg.values_[k] = values[k];
    detail::cross_checks(cfg);
    return cfg;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError(path, "cannot open config file");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

/// Default config of an experiment as an editable JSON document.
inline std::string default_config_text(Experiment e)
{
    json j;
    j["experiment"] = std::string(to_string(e));
    for (const auto& [k, v] : info(e).defaults.items())
        j[k] = v;
    return j.dump(2) + "\n";
}

} // namespace qnls
