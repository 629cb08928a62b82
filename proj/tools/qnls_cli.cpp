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

// Command-line runner: `qnls list`, `qnls config <experiment>`, `qnls run <config>`.

#include "qnls/config.hpp"
#include "qnls/experiments.hpp"
#include "qnls/report.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>

namespace
{

using namespace qnls;

constexpr int exit_pass = 0;
constexpr int exit_check_failed = 1;
constexpr int exit_error = 2;

std::string kind_name(KeyKind k)
{
    switch (k)
    {
    case KeyKind::integer:
        return "integer";
    case KeyKind::number:
        return "number";
    case KeyKind::string:
        return "string";
    case KeyKind::integer_list:
        return "integer list";
    case KeyKind::number_list:
        return "number list";
    }
    return "value";
}

json catalog_json()
{
    json exps = json::array();
    for (const auto& e : catalog())
    {
        json keys = json::array();
        for (const auto& [k, v] : e.defaults.items())
            keys.push_back(json{{"name", k}, {"kind", kind_name(find_key(k)->kind)}, {"default", v}, {"help", find_key(k)->help}});
        exps.push_back(json{{"name", to_string(e.id)},
                            {"summary", e.summary},
                            {"criteria", e.criteria},
                            {"expected_runtime", e.runtime},
                            {"required_keys", e.required},
                            {"optional_keys", keys},
                            {"cost_note", e.note}});
    }
    return json{{"schema_version", manifest_schema_version}, {"experiments", exps}};
}

void print_catalog()
{
    for (const auto& e : catalog())
    {
        std::string crit;
        for (int c : e.criteria)
            crit += (crit.empty() ? "" : ", ") + std::to_string(c);
        std::printf("%-15s  criteria %-5s  expected runtime %s\n", std::string(to_string(e.id)).c_str(), crit.c_str(),
                    e.runtime.c_str());
        std::printf("    %s\n", e.summary.c_str());
        std::string req;
        for (const auto& r : e.required)
            req += (req.empty() ? "" : ", ") + r;
        std::printf("    required: %s\n", req.c_str());
        std::string opt;
        for (const auto& [k, v] : e.defaults.items())
            opt += (opt.empty() ? "" : ", ") + k + "=" + v.dump();
        std::printf("    optional: %s\n", opt.c_str());
        if (!e.note.empty())
            std::printf("    cost: %s\n", e.note.c_str());
    }
}

int run(const std::string& path, std::optional<unsigned> workers, std::optional<std::string> out_dir,
        std::optional<std::uint64_t> seed, bool quiet)
{
    RunConfig cfg;
    try
    {
        cfg = load_config(path);
        if (seed)
            cfg.set("seed", *seed);
    }
    catch (const ConfigError& e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_error;
    }
    const std::filesystem::path dir = out_dir ? *out_dir : cfg.output_dir;

    RunInfo info;
    info.workers = workers.value_or(1);
    RunContext ctx;
    ctx.workers = info.workers;
    std::mutex log_mutex;
    if (!quiet)
        ctx.log = [&](const std::string& s) {
            std::lock_guard lock(log_mutex);
            std::cerr << "[qnls] " << s << "\n";
        };

    info.started = std::chrono::system_clock::now();
    const auto t0 = std::chrono::steady_clock::now();
    std::optional<ExperimentResult> result;
    try
    {
        result = run_experiment(cfg, ctx);
    }
    catch (const std::exception& e)
    {
        info.error = e.what();
    }
    info.finished = std::chrono::system_clock::now();
    info.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    try
    {
        write_run(dir, cfg, result ? &*result : nullptr, info);
    }
    catch (const std::exception& e)
    {
        std::cerr << "cannot write results to " << dir << ": " << e.what() << "\n";
        return exit_error;
    }
    if (!info.error.empty())
    {
        std::cerr << "run failed: " << info.error << "\n";
        return exit_error;
    }
    for (const auto& c : result->checks)
        std::printf("%-4s  [%s] %-40s %.6g %s %.6g%s%s\n", c.pass ? "PASS" : "FAIL",
                    c.acceptance() ? ("criterion " + std::to_string(c.criterion)).c_str() : "exploratory",
                    c.name.c_str(), c.value, c.relation.c_str(), c.threshold, c.detail.empty() ? "" : "  ",
                    c.detail.c_str());
    std::printf("%s: %s (manifest %s)\n", std::string(to_string(cfg.experiment)).c_str(),
                result->passed() ? "pass" : "fail", (dir / "manifest.json").string().c_str());
    return result->passed() ? exit_pass : exit_check_failed;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Small-data blow-up lab for a quadratic derivative NLS system"};
    app.require_subcommand(1);

    auto* list = app.add_subcommand("list", "list experiments, their keys and expected runtimes");
    bool as_json = false;
    list->add_flag("--json", as_json, "print the catalog as JSON");

    auto* config = app.add_subcommand("config", "print the default config of an experiment");
    std::string experiment;
    config->add_option("experiment", experiment, "experiment name")->required();

    auto* runner = app.add_subcommand("run", "run the experiment described by a config file");
    std::string path;
    std::optional<unsigned> workers;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    runner->add_option("config", path, "config file (JSON, comments allowed)")->required();
    runner->add_option("--workers", workers, "worker threads")->check(CLI::Range(1u, 256u));
    runner->add_option("--out", out_dir, "output directory (overrides output_dir)");
    runner->add_option("--seed", seed, "seed (overrides the config)");
    runner->add_flag("--quiet", quiet, "no progress messages");

    CLI11_PARSE(app, argc, argv);

    if (*list)
    {
        if (as_json)
            std::cout << catalog_json().dump(2) << "\n";
        else
            print_catalog();
        return exit_pass;
    }
    if (*config)
    {
        const auto e = experiment_from_string(experiment);
        if (!e)
        {
            std::cerr << "unknown experiment '" << experiment << "'\n";
            return exit_error;
        }
        std::cout << default_config_text(*e);
        return exit_pass;
    }
    return run(path, workers, out_dir, seed, quiet);
}
