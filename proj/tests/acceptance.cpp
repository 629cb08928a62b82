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

// Runs every experiment with its default config and prints one PASS/FAIL line per
// acceptance criterion. Exit status is nonzero iff a criterion fails.

#include "qnls/config.hpp"
#include "qnls/experiments.hpp"
#include "qnls/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

namespace
{

using namespace qnls;

struct Criterion
{
    std::string title;
    double budget_s;
};

const std::map<int, Criterion> criteria{
    {1, {"operator identity suite", 10}},
    {2, {"W-deformation decay", 30}},
    {3, {"profile asymptotics (case 1)", 300}},
    {4, {"profile vs Duhamel oracle (cases 1-4)", 600}},
    {5, {"lifespan scaling (cases 1-4)", 3600}},
    {6, {"blow-up construction round trip", 300}},
    {7, {"full-solver cross-validation", 600}},
    {8, {"resonance necessity and gauge truth table", 300}},
    {9, {"virial identities", 600}},
};

RunConfig config_for(Experiment e)
{
    json j = json::parse(default_config_text(e));
    if (e == Experiment::lifespan_sweep)
        j["cases"] = {1, 2, 3, 4};
    return parse_config(j.dump());
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance run over all experiments"};
    std::vector<int> only;
    std::string out = "acceptance_out";
    unsigned workers = std::max(1u, std::thread::hardware_concurrency());
    app.add_option("--criteria", only, "run only the experiments covering these criteria")->delimiter(',');
    app.add_option("--out", out, "directory for per-experiment CSVs and manifests");
    app.add_option("--workers", workers, "worker threads")->check(CLI::Range(1u, 256u));
    CLI11_PARSE(app, argc, argv);

    const std::set<int> wanted(only.begin(), only.end());
    const std::vector<Experiment> order{Experiment::identities,    Experiment::virial, Experiment::chain_validate,
                                        Experiment::full_validate, Experiment::detune, Experiment::lifespan_sweep};
    std::map<int, std::vector<Check>> by_criterion;
    std::map<int, std::string> errors;
    std::mutex log_mutex;
    RunContext ctx;
    ctx.workers = workers;
    ctx.log = [&](const std::string& s) {
        std::lock_guard lock(log_mutex);
        std::fprintf(stderr, "[acceptance] %s\n", s.c_str());
    };

    for (Experiment e : order)
    {
        const ExperimentInfo& inf = info(e);
        if (!wanted.empty() && std::none_of(inf.criteria.begin(), inf.criteria.end(), [&](int c) { return wanted.count(c); }))
            continue;
        const RunConfig cfg = config_for(e);
        RunInfo run;
        run.workers = workers;
        run.started = std::chrono::system_clock::now();
        const auto t0 = std::chrono::steady_clock::now();
        std::optional<ExperimentResult> result;
        try
        {
            result = run_experiment(cfg, ctx);
        }
        catch (const std::exception& ex)
        {
            run.error = ex.what();
            for (int c : inf.criteria)
                errors[c] = std::string(to_string(e)) + ": " + ex.what();
        }
        run.finished = std::chrono::system_clock::now();
        run.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        write_run(std::filesystem::path(out) / std::string(to_string(e)), cfg, result ? &*result : nullptr, run);
        if (result)
            for (const auto& c : result->checks)
                if (c.acceptance())
                    by_criterion[c.criterion].push_back(c);
        std::fprintf(stderr, "[acceptance] %s finished in %.1f s\n", std::string(to_string(e)).c_str(), run.wall_seconds);
    }

    bool all_pass = true;
    for (const auto& [k, crit] : criteria)
    {
        if (!wanted.empty() && !wanted.count(k))
            continue;
        const auto& checks = by_criterion[k];
        bool pass = errors.find(k) == errors.end() && !checks.empty();
        std::string failed;
        double runtime = 0.0;
        for (const auto& c : checks)
        {
            pass = pass && c.pass;
            if (!c.pass)
                failed += " " + c.name + "=" + format_double(c.value) + " (needs " + c.relation + " " +
                          format_double(c.threshold) + ")";
            if (c.name.size() > 10 && c.name.compare(c.name.size() - 10, 10, "_runtime_s") == 0)
                runtime = c.value;
        }
        all_pass = all_pass && pass;
        std::printf("CRITERION %d %s  %s  [%zu checks, %.1f s of %.0f s budget]%s%s\n", k, pass ? "PASS" : "FAIL",
                    crit.title.c_str(), checks.size(), runtime, crit.budget_s, failed.c_str(),
                    errors.count(k) ? (" error: " + errors[k]).c_str() : "");
    }
    std::fflush(stdout);
    return all_pass ? 0 : 1;
}
