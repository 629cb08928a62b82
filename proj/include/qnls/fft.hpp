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

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <span>
#include <tuple>
#include <vector>

namespace qnls::fft
{

using cd = std::complex<double>;

enum class Sign : int
{
    forward = FFTW_FORWARD,   // sum_j x_j e^{-2 pi i jk/n}
    backward = FFTW_BACKWARD, // sum_j x_j e^{+2 pi i jk/n}
};

namespace detail
{

// Plans are created in place on a scratch buffer with FFTW_UNALIGNED, so they
// may be executed on any std::complex<double> array of the right shape.
// Planning is serialized; execution through fftw_execute_dft is reentrant.
class PlanCache
{
public:
    static PlanCache& instance()
    {
        static PlanCache cache;
        return cache;
    }

    fftw_plan get(int n0, int n1, Sign sign)
    {
        const auto key = std::make_tuple(n0, n1, static_cast<int>(sign));
        std::lock_guard lock(mutex_);
        if (auto it = plans_.find(key); it != plans_.end())
            return it->second;
        const std::size_t total = static_cast<std::size_t>(n0) * static_cast<std::size_t>(n1 > 0 ? n1 : 1);
        std::vector<cd> scratch(total);
        auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        fftw_plan plan = n1 > 0 ? fftw_plan_dft_2d(n0, n1, buf, buf, static_cast<int>(sign), flags)
                                : fftw_plan_dft_1d(n0, buf, buf, static_cast<int>(sign), flags);
        plans_.emplace(key, plan);
        return plan;
    }

    PlanCache(const PlanCache&) = delete;
    PlanCache& operator=(const PlanCache&) = delete;

private:
    PlanCache() = default;
    ~PlanCache()
    {
        for (auto& [key, plan] : plans_)
            fftw_destroy_plan(plan);
    }

    std::mutex mutex_;
    std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

} // namespace detail

/// Unnormalized in-place 1D DFT.
inline void transform(std::span<cd> data, Sign sign)
{
    if (data.empty())
        return;
    auto plan = detail::PlanCache::instance().get(static_cast<int>(data.size()), 0, sign);
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, p, p);
}

/// Unnormalized in-place 2D DFT on a row-major n0 x n1 array.
inline void transform_2d(std::span<cd> data, int n0, int n1, Sign sign)
{
    auto plan = detail::PlanCache::instance().get(n0, n1, sign);
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, p, p);
}

} // namespace qnls::fft
