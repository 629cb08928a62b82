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

// Scaled Fourier transforms and the operator calculus used throughout:
//
//   (F_m f)(xi)   = sqrt(m / 2 pi) int e^{-i m y xi} f(y) dy
//   U_m(t)        = exp(i t d_x^2 / (2m))            free propagator
//   M_m(t)        = e^{i m x^2 / (2t)}               gauge factor
//   D(t) f(x)     = (it)^{-1/2} f(x / t)             dilation
//   W_m(t)        = F_m M_m(t) F_m^{-1}              deformation
//   J_m(t)        = x + (it / m) d_x
//   A_m(t)        = F_m U_m(t)^{-1}                  spectral profile
//
// All derivatives are spectral. The real line is replaced by the periodic box
// of the Grid; fields are expected to decay well inside it.

#include "qnls/errors.hpp"
#include "qnls/fft.hpp"
#include "qnls/grid.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace qnls
{

enum class Direction
{
    forward,
    inverse,
};

namespace detail
{

inline void require_positive(double v, const char* what)
{
    if (!(v > 0.0) || !std::isfinite(v))
        throw InvalidArgument(std::string(what) + " must be positive");
}

inline std::vector<cd> spectrum(const Field& f)
{
    std::vector<cd> s(f.data());
    fft::transform(s, fft::Sign::forward);
    return s;
}

inline std::vector<cd> from_spectrum(std::vector<cd> s)
{
    fft::transform(s, fft::Sign::backward);
    const double inv = 1.0 / static_cast<double>(s.size());
    for (auto& v : s)
        v *= inv;
    return s;
}

inline cd ipow(cd z, int k)
{
    cd r{1.0, 0.0};
    for (int i = 0; i < k; ++i)
        r *= z;
    return r;
}

// In-place W_m(t) (or its inverse) on samples of a function of xi with spacing dxi.
inline void deform_in_place(std::span<cd> g, double dxi, double m, double t, bool inverse)
{
    const std::size_t n = g.size();
    for (std::size_t j = 1; j < n; j += 2)
        g[j] = -g[j];
    fft::transform(g, fft::Sign::backward);
    const long double scale = 2.0L * std::numbers::pi_v<long double> / (static_cast<long double>(n) * dxi);
    const long double coef = scale * scale / (2.0L * m * t) * (inverse ? -1.0L : 1.0L);
    const long half = static_cast<long>(n / 2);
    for (std::size_t l = 0; l < n; ++l)
    {
        const long q = static_cast<long>(l) - half;
        const long double phase = coef * static_cast<long double>(q * q);
        g[l] *= cd(static_cast<double>(std::cos(phase)), static_cast<double>(std::sin(phase)));
    }
    fft::transform(g, fft::Sign::forward);
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t p = 0; p < n; ++p)
        g[p] *= (p % 2 == 0 ? inv : -inv);
}

inline cd unit_phase(long double phase)
{
    return {static_cast<double>(std::cos(phase)), static_cast<double>(std::sin(phase))};
}

} // namespace detail

// ---------------------------------------------------------------------------
// Norms and monitors
// ---------------------------------------------------------------------------

inline double l2_norm(const Field& f)
{
    double s = 0.0;
    for (const auto& v : f.values())
        s += std::norm(v);
    return std::sqrt(s * f.grid().dx());
}

inline double sup_norm(const Field& f)
{
    double s = 0.0;
    for (const auto& v : f.values())
        s = std::max(s, std::abs(v));
    return s;
}

/// Fraction of the L2 mass in the two end strips of the box (total width `outer`).
inline double edge_mass_fraction(const Field& f, double outer = 0.1)
{
    const double cut = 0.5 * f.grid().length() * (1.0 - outer);
    double total = 0.0;
    double edge = 0.0;
    for (std::size_t j = 0; j < f.size(); ++j)
    {
        const double w = std::norm(f[j]);
        total += w;
        if (std::abs(f.grid().x(j)) > cut)
            edge += w;
    }
    return total > 0.0 ? edge / total : 0.0;
}

/// Throws SupportEscape when more than `tol` of the mass sits in the outer 10% of the box.
inline void check_support(const Field& f, double tol = 1e-8, const std::string& what = "field")
{
    const double frac = edge_mass_fraction(f);
    if (frac > tol)
        throw SupportEscape(what + ": " + std::to_string(frac) + " of the L2 mass reached the box edge", frac);
}

// ---------------------------------------------------------------------------
// Spectral derivatives
// ---------------------------------------------------------------------------

/// d^order f / dq^order with respect to the grid coordinate.
inline Field derivative(const Field& f, int order = 1)
{
    if (order < 0)
        throw InvalidArgument("derivative: order must be nonnegative");
    if (order == 0)
        return f;
    auto s = detail::spectrum(f);
    const std::size_t n = f.size();
    for (std::size_t j = 0; j < n; ++j)
    {
        if (j == n / 2 && order % 2 == 1)
        {
            s[j] = 0.0;
            continue;
        }
        s[j] *= detail::ipow(I * f.grid().wavenumber(j), order);
    }
    return f.with_values(detail::from_spectrum(std::move(s)));
}

/// sum_{k <= s} ||d^k f||_{L2}; s = 0 gives the plain L2 norm.
inline double sobolev_norm(const Field& f, int s)
{
    if (s < 0)
        throw InvalidArgument("sobolev_norm: s must be nonnegative");
    double total = l2_norm(f);
    if (s == 0)
        return total;
    auto spec = detail::spectrum(f);
    const std::size_t n = f.size();
    const double scale = f.grid().dx() / static_cast<double>(n);
    for (int k = 1; k <= s; ++k)
    {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j)
        {
            if (j == n / 2 && k % 2 == 1)
                continue;
            acc += std::norm(spec[j]) * std::pow(f.grid().wavenumber(j), 2 * k);
        }
        total += std::sqrt(acc * scale);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Transforms and operators
// ---------------------------------------------------------------------------

/// F_m (forward) or F_m^{-1} (inverse). The result lives on `f.grid().dual(m)`.
/// With `alias_tol`, throws AliasingError when more than that fraction of the
/// output mass lands in the outer 10% of the dual grid.
inline Field fourier_m(const Field& f, double m, Direction dir, std::optional<double> alias_tol = std::nullopt)
{
    detail::require_positive(m, "fourier_m: mass");
    const std::size_t n = f.size();
    std::vector<cd> v(f.data());
    for (std::size_t j = 1; j < n; j += 2)
        v[j] = -v[j];
    fft::transform(v, dir == Direction::forward ? fft::Sign::forward : fft::Sign::backward);
    const double scale = std::sqrt(m / (2.0 * pi)) * f.grid().dx();
    for (std::size_t l = 0; l < n; ++l)
        v[l] *= (l % 2 == 0 ? scale : -scale);
    Field out(f.grid().dual(m), std::move(v), opposite(f.side()));
    if (alias_tol)
    {
        const double frac = edge_mass_fraction(out);
        if (frac > *alias_tol)
            throw AliasingError("fourier_m: grid too coarse for the m*xi range (edge fraction " +
                                std::to_string(frac) + ")");
    }
    return out;
}

/// U_m(t) f via the multiplier e^{-i t k^2 / (2m)}; t = 0 and t < 0 are allowed.
inline Field free_propagate(const Field& f, double m, double t)
{
    detail::require_positive(m, "free_propagate: mass");
    if (t == 0.0)
        return f;
    auto s = detail::spectrum(f);
    for (std::size_t j = 0; j < s.size(); ++j)
    {
        const long double k = f.grid().wavenumber(j);
        s[j] *= detail::unit_phase(-static_cast<long double>(t) * k * k / (2.0L * m));
    }
    return f.with_values(detail::from_spectrum(std::move(s)));
}

/// M_m(t) f = e^{i m x^2/(2t)} f, or its inverse.
inline Field gauge_factor(const Field& f, double m, double t, bool inverse = false)
{
    detail::require_positive(m, "gauge_factor: mass");
    detail::require_positive(t, "gauge_factor: t");
    Field r = f;
    const long double sgn = inverse ? -1.0L : 1.0L;
    for (std::size_t j = 0; j < r.size(); ++j)
    {
        const long double x = f.grid().x(j);
        r[j] *= detail::unit_phase(sgn * m * x * x / (2.0L * t));
    }
    return r;
}

/// Trigonometric interpolant of a Field, evaluable anywhere (O(n) per point).
/// Outside the box the function is taken to be zero.
class BandLimited
{
public:
    explicit BandLimited(const Field& f) : grid_(f.grid()), coeffs_(detail::spectrum(f))
    {
        const std::size_t n = f.size();
        for (auto& c : coeffs_)
            c /= static_cast<double>(n);
    }

    cd value(double q) const { return eval(q).first; }
    cd derivative(double q) const { return eval(q).second; }

    /// (value, derivative) in one pass.
    std::pair<cd, cd> eval(double q) const
    {
        const double lo = grid_.start();
        if (q < lo || q > lo + grid_.length())
            return {0.0, 0.0};
        const std::size_t n = coeffs_.size();
        const long half = static_cast<long>(n / 2);
        const double u = q - lo;
        const double dk = grid_.dk();
        const cd step = std::polar(1.0, dk * u);
        // k runs over -n/2 .. n/2; the Nyquist coefficient is split evenly
        // between +n/2 and -n/2 so real data interpolates to real values.
        cd z = std::polar(1.0, -static_cast<double>(half) * dk * u);
        cd sum = 0.0, dsum = 0.0;
        for (long k = -half; k <= half; ++k)
        {
            const std::size_t idx = static_cast<std::size_t>((k + static_cast<long>(n)) % static_cast<long>(n));
            cd c = coeffs_[idx];
            if (k == -half || k == half)
                c *= 0.5;
            const cd term = c * z;
            sum += term;
            dsum += term * (static_cast<double>(k) * dk);
            z *= step;
        }
        return {sum, I * dsum};
    }

private:

    Grid grid_;
    std::vector<cd> coeffs_;
};

/// Evaluates the trigonometric interpolant of `f` at q_p = start + p*step,
/// p < count, by a chirp-z (Bluestein) convolution in O((n + count) log).
/// Points outside the box of `f` evaluate to zero.
inline std::vector<cd> evaluate_uniform(const Field& f, double start, double step, std::size_t count)
{
    std::vector<cd> out(count);
    if (count == 0)
        return out;
    const std::size_t n = f.size();
    const long half = static_cast<long>(n / 2);
    auto coeff = detail::spectrum(f);
    for (auto& c : coeff)
        c /= static_cast<double>(n);

    using ld = long double;
    const ld L = f.grid().length();
    const ld q0 = f.grid().start();
    const ld u0 = (static_cast<ld>(start) - q0) / L;
    const ld r = static_cast<ld>(step) / L;
    const ld two_pi = 2.0L * std::numbers::pi_v<ld>;

    std::size_t N = 1;
    while (N < n + 1 + count)
        N <<= 1;

    std::vector<cd> a(N, 0.0);
    for (std::size_t kap = 0; kap <= n; ++kap)
    {
        const long k = static_cast<long>(kap) - half;
        const std::size_t idx = static_cast<std::size_t>((k + static_cast<long>(n)) % static_cast<long>(n));
        cd c = coeff[idx];
        if (k == -half || k == half)
            c *= 0.5;
        const ld kk = static_cast<ld>(kap);
        const ld ph = two_pi * static_cast<ld>(k) * u0 + 0.5L * two_pi * r * kk * kk;
        a[kap] = c * detail::unit_phase(std::fmod(ph, two_pi));
    }
    std::vector<cd> b(N, 0.0);
    const long lo = -static_cast<long>(n);
    const long hi = static_cast<long>(count) - 1;
    for (long mm = lo; mm <= hi; ++mm)
    {
        const ld m2 = static_cast<ld>(mm) * static_cast<ld>(mm);
        const std::size_t idx = mm >= 0 ? static_cast<std::size_t>(mm) : static_cast<std::size_t>(static_cast<long>(N) + mm);
        b[idx] = detail::unit_phase(std::fmod(-0.5L * two_pi * r * m2, two_pi));
    }
    fft::transform(a, fft::Sign::forward);
    fft::transform(b, fft::Sign::forward);
    for (std::size_t j = 0; j < N; ++j)
        a[j] *= b[j];
    fft::transform(a, fft::Sign::backward);

    const double hi_edge = f.grid().start() + f.grid().length();
    for (std::size_t p = 0; p < count; ++p)
    {
        const double q = start + static_cast<double>(p) * step;
        if (q < f.grid().start() || q > hi_edge)
            continue;
        const ld pp = static_cast<ld>(p);
        const ld ph = -two_pi * 0.5L * static_cast<ld>(n) * pp * r + 0.5L * two_pi * r * pp * pp;
        out[p] = a[p] / static_cast<double>(N) * detail::unit_phase(std::fmod(ph, two_pi));
    }
    return out;
}

/// Band-limited resampling of `f` onto `target` (zero outside the source box).
inline Field resample(const Field& f, const Grid& target)
{
    if (f.grid() == target)
        return f;
    return Field(target, evaluate_uniform(f, target.start(), target.dx(), target.size()), f.side());
}

/// D(t) f (x) = (it)^{-1/2} f(x/t), or D(t)^{-1} g (xi) = (it)^{1/2} g(t xi).
/// The result is sampled on `target` (default: the grid of f). The forward
/// map produces a physical-side field, the inverse a frequency-side one.
inline Field dilate(const Field& f, double t, bool inverse = false, std::optional<Grid> target = std::nullopt)
{
    detail::require_positive(t, "dilate: t");
    const Grid out_grid = target.value_or(f.grid());
    const double factor = inverse ? t : 1.0 / t;
    auto vals = evaluate_uniform(f, out_grid.start() * factor, out_grid.dx() * factor, out_grid.size());
    const cd amp = inverse ? std::sqrt(I * t) : 1.0 / std::sqrt(I * t);
    for (auto& v : vals)
        v *= amp;
    return Field(out_grid, std::move(vals), inverse ? Side::frequency : Side::physical);
}

/// W_m(t) f = F_m M_m(t) F_m^{-1} f, or its inverse. f is a function of xi.
inline Field deform_W(const Field& f, double m, double t, bool inverse = false)
{
    detail::require_positive(m, "deform_W: mass");
    detail::require_positive(t, "deform_W: t");
    Field r = f;
    detail::deform_in_place(r.values(), f.grid().dx(), m, t, inverse);
    return r;
}

/// J_m(t) f = x f + (it/m) f'.
inline Field apply_J(const Field& f, double m, double t)
{
    detail::require_positive(m, "apply_J: mass");
    Field d = derivative(f, 1);
    Field r = f;
    const cd c = I * t / m;
    for (std::size_t j = 0; j < r.size(); ++j)
        r[j] = f.grid().x(j) * f[j] + c * d[j];
    return r;
}

/// A_m(t) f = F_m U_m(t)^{-1} f, on the grid dual to that of f.
inline Field profile_A(const Field& f, double m, double t)
{
    detail::require_positive(t, "profile_A: t");
    return fourier_m(free_propagate(f, m, -t), m, Direction::forward);
}

/// rho_{m,s}[f](t) = ||f||_{H^s} + ||J_m(t) f||_{H^{s-1}}.
inline double rho_norm(const Field& f, double m, SobolevIndex s, double t)
{
    return sobolev_norm(f, s.value()) + sobolev_norm(apply_J(f, m, t), s.value() - 1);
}

inline double rho_norm(const Field& f, double m, int s, double t) { return rho_norm(f, m, SobolevIndex(s), t); }

/// Relative L2 distance ||a - b|| / ||b|| (absolute when b = 0).
inline double relative_l2(const Field& a, const Field& b)
{
    const double nb = l2_norm(b);
    const double d = l2_norm(a - b);
    return nb > 0.0 ? d / nb : d;
}

} // namespace qnls
