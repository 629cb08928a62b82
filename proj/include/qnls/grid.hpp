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

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace qnls
{

using cd = std::complex<double>;
inline constexpr cd I{0.0, 1.0};
inline constexpr double pi = std::numbers::pi;

/// Uniform periodic grid on [-L/2, L/2) with n points, n a power of two >= 8.
///
/// The same type describes the physical x-grid and every frequency grid:
/// the scaled transform F_m maps a grid onto `dual(m)`, whose spacing is
/// 2 pi / (L m). `dual(m).dual(m)` is the original grid.
class Grid
{
public:
    Grid(std::size_t n_points, double box_length) : n_(n_points), length_(box_length)
    {
        if (n_ < 8 || (n_ & (n_ - 1)) != 0)
            throw InvalidArgument("Grid: n_points must be a power of two >= 8, got " + std::to_string(n_));
        if (!(length_ > 0.0) || !std::isfinite(length_))
            throw InvalidArgument("Grid: box_length must be positive");
    }

    std::size_t size() const noexcept { return n_; }
    double length() const noexcept { return length_; }
    double dx() const noexcept { return length_ / static_cast<double>(n_); }
    double dk() const noexcept { return 2.0 * pi / length_; }
    double start() const noexcept { return -0.5 * length_; }

    double x(std::size_t j) const noexcept { return start() + static_cast<double>(j) * dx(); }

    /// DFT wavenumber of FFT-ordered index j (Nyquist mode reported as -n/2).
    double wavenumber(std::size_t j) const noexcept
    {
        const auto jj = static_cast<long>(j);
        const auto n = static_cast<long>(n_);
        return static_cast<double>(jj < n / 2 ? jj : jj - n) * dk();
    }

    double max_wavenumber() const noexcept { return pi / dx(); }

    Grid dual(double m) const { return Grid(n_, 2.0 * pi * static_cast<double>(n_) / (length_ * m)); }

    std::vector<double> points() const
    {
        std::vector<double> p(n_);
        for (std::size_t j = 0; j < n_; ++j)
            p[j] = x(j);
        return p;
    }

    bool operator==(const Grid& other) const noexcept
    {
        return n_ == other.n_ && std::abs(length_ - other.length_) <= 1e-12 * length_;
    }

private:
    std::size_t n_;
    double length_;
};

enum class Side
{
    physical,
    frequency,
};

inline Side opposite(Side s) { return s == Side::physical ? Side::frequency : Side::physical; }

/// Complex samples of a function on a Grid.
class Field
{
public:
    explicit Field(Grid grid, Side side = Side::physical) : grid_(grid), side_(side), values_(grid.size()) {}

    Field(Grid grid, std::vector<cd> values, Side side = Side::physical)
        : grid_(grid), side_(side), values_(std::move(values))
    {
        if (values_.size() != grid_.size())
            throw InvalidArgument("Field: value count does not match grid size");
        for (const auto& v : values_)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw NonFiniteValue("Field: non-finite sample");
    }

    template <class Fn>
    static Field sample(const Grid& grid, Fn&& fn, Side side = Side::physical)
    {
        Field f(grid, side);
        for (std::size_t j = 0; j < grid.size(); ++j)
            f.values_[j] = fn(grid.x(j));
        return f;
    }

    const Grid& grid() const noexcept { return grid_; }
    Side side() const noexcept { return side_; }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<const cd> values() const noexcept { return values_; }
    std::span<cd> values() noexcept { return values_; }
    const std::vector<cd>& data() const noexcept { return values_; }

    cd operator[](std::size_t j) const noexcept { return values_[j]; }
    cd& operator[](std::size_t j) noexcept { return values_[j]; }

    Field with_values(std::vector<cd> v) const { return Field(grid_, std::move(v), side_); }
    Field relabeled(Side s) const
    {
        Field f = *this;
        f.side_ = s;
        return f;
    }

    bool all_finite() const noexcept
    {
        for (const auto& v : values_)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                return false;
        return true;
    }

    Field& operator+=(const Field& o)
    {
        require_same(o);
        for (std::size_t j = 0; j < size(); ++j)
            values_[j] += o.values_[j];
        return *this;
    }
    Field& operator-=(const Field& o)
    {
        require_same(o);
        for (std::size_t j = 0; j < size(); ++j)
            values_[j] -= o.values_[j];
        return *this;
    }
    Field& operator*=(cd a)
    {
        for (auto& v : values_)
            v *= a;
        return *this;
    }

    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(Field a, cd s) { return a *= s; }
    friend Field operator*(cd s, Field a) { return a *= s; }

    /// Pointwise product.
    friend Field operator*(const Field& a, const Field& b)
    {
        a.require_same(b);
        Field r = a;
        for (std::size_t j = 0; j < a.size(); ++j)
            r.values_[j] *= b.values_[j];
        return r;
    }

    void require_same(const Field& o) const
    {
        if (!(grid_ == o.grid_))
            throw GridMismatch("Field: operands live on different grids");
    }

private:
    Grid grid_;
    Side side_;
    std::vector<cd> values_;
};

inline Field conj(const Field& f)
{
    Field r = f;
    for (auto& v : r.values())
        v = std::conj(v);
    return r;
}

struct MassTriple
{
    double m1;
    double m2;
    double m3;

    MassTriple(double a, double b, double c) : m1(a), m2(b), m3(c)
    {
        if (!(m1 > 0.0 && m2 > 0.0 && m3 > 0.0))
            throw InvalidArgument("MassTriple: masses must be strictly positive");
    }

    double operator[](int j) const { return j == 1 ? m1 : (j == 2 ? m2 : m3); }
};

/// Integer Sobolev order s >= 1.
class SobolevIndex
{
public:
    explicit SobolevIndex(int s) : s_(s)
    {
        if (s < 1)
            throw InvalidArgument("SobolevIndex: s must be >= 1");
    }
    int value() const noexcept { return s_; }

private:
    int s_;
};

} // namespace qnls
