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

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace qnls
{

inline constexpr std::string_view code_version = "0.1.0";
inline constexpr int manifest_schema_version = 1;

/// One pass/fail check. Criterion 0 marks an exploratory check that never affects the exit status.
struct Check
{
    std::string name;
    int criterion = 0;
    double value = 0.0;
    std::string relation;
    double threshold = 0.0;
    bool pass = false;
    std::string detail;

    bool acceptance() const { return criterion > 0; }
};

/// value `relation` threshold, with relation one of <, <=, >, >=, ==.
inline Check make_check(std::string name, int criterion, double value, std::string relation, double threshold,
                        std::string detail = {})
{
    bool pass = false;
    if (relation == "<")
        pass = value < threshold;
    else if (relation == "<=")
        pass = value <= threshold;
    else if (relation == ">")
        pass = value > threshold;
    else if (relation == ">=")
        pass = value >= threshold;
    else if (relation == "==")
        pass = value == threshold;
    else
        throw InvalidArgument("make_check: unknown relation '" + relation + "'");
    return {std::move(name), criterion, value, std::move(relation), threshold, pass, std::move(detail)};
}

/// Shortest round-trip text for a double.
inline std::string format_double(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    for (int p = 15; p <= 17; ++p)
    {
        std::snprintf(buf, sizeof buf, "%.*g", p, v);
        if (std::strtod(buf, nullptr) == v)
            break;
    }
    return buf;
}

using Cell = std::variant<long long, double, std::string>;

struct Table
{
    std::string file;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows = {};

    void add(std::vector<Cell> row)
    {
        if (row.size() != columns.size())
            throw InvalidArgument("Table::add: row width does not match the header of " + file);
        rows.push_back(std::move(row));
    }

    std::string csv() const
    {
        std::string out;
        auto line = [&](const auto& cells, auto&& text) {
            for (std::size_t i = 0; i < cells.size(); ++i)
            {
                if (i)
                    out += ',';
                out += text(cells[i]);
            }
            out += '\n';
        };
        line(columns, [](const std::string& s) { return s; });
        for (const auto& r : rows)
            line(r, [](const Cell& c) {
                if (const auto* i = std::get_if<long long>(&c))
                    return std::to_string(*i);
                if (const auto* d = std::get_if<double>(&c))
                    return format_double(*d);
                return std::get<std::string>(c);
            });
        return out;
    }
};

struct ExperimentResult
{
    Experiment experiment = Experiment::identities;
    std::vector<Check> checks;
    std::vector<Table> tables;
    json summary = json::object();

    bool passed() const
    {
        for (const auto& c : checks)
            if (c.acceptance() && !c.pass)
                return false;
        return true;
    }
};

inline std::string sha256_hex(std::string_view data)
{
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256: digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned i = 0; i < len; ++i)
    {
        out += hex[md[i] >> 4];
        out += hex[md[i] & 15];
    }
    return out;
}

/// Writes through a temporary file in the same directory and renames it into place.
inline void atomic_write(const std::filesystem::path& path, std::string_view content)
{
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw Error("cannot write " + tmp);
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out)
            throw Error("write failed for " + tmp);
    }
    std::filesystem::rename(tmp, path);
}

inline std::string utc_timestamp(std::chrono::system_clock::time_point t)
{
    const std::time_t tt = std::chrono::system_clock::to_time_t(t);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline json to_json(const Check& c)
{
    return json{{"name", c.name},
                {"criterion", c.criterion},
                {"acceptance", c.acceptance()},
                {"value", c.value},
                {"relation", c.relation},
                {"threshold", c.threshold},
                {"pass", c.pass},
                {"detail", c.detail}};
}

struct RunInfo
{
    unsigned workers = 1;
    std::chrono::system_clock::time_point started;
    std::chrono::system_clock::time_point finished;
    double wall_seconds = 0.0;
    std::string error;
};

/// Writes every table of `result` (if any) and then manifest.json, which lists each file with
/// its hash. Returns the manifest.
inline json write_run(const std::filesystem::path& dir, const RunConfig& cfg, const ExperimentResult* result,
                      const RunInfo& run)
{
    std::filesystem::create_directories(dir);
    json files = json::array();
    if (result)
        for (const auto& t : result->tables)
        {
            const std::string body = t.csv();
            atomic_write(dir / t.file, body);
            files.push_back(json{{"path", t.file},
                                 {"sha256", sha256_hex(body)},
                                 {"bytes", body.size()},
                                 {"rows", t.rows.size()},
                                 {"columns", t.columns}});
        }
    json checks = json::array();
    if (result)
        for (const auto& c : result->checks)
            checks.push_back(to_json(c));
    std::string status = "error";
    if (run.error.empty() && result)
        status = result->passed() ? "pass" : "fail";
    json m{{"schema_version", manifest_schema_version},
           {"code_version", code_version},
           {"experiment", to_string(cfg.experiment)},
           {"config_hash", "sha256:" + sha256_hex(cfg.canonical())},
           {"config", cfg.values()},
           {"seed", cfg.seed()},
           {"workers", run.workers},
           {"started_utc", utc_timestamp(run.started)},
           {"finished_utc", utc_timestamp(run.finished)},
           {"wall_time_s", run.wall_seconds},
           {"status", status},
           {"error", run.error},
           {"checks", checks},
           {"summary", result ? result->summary : json::object()},
           {"files", files}};
    atomic_write(dir / "manifest.json", m.dump(2) + "\n");
    return m;
}

} // namespace qnls
