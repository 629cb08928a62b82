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

#include <array>
#include <cmath>
#include <string>
#include <string_view>

namespace qnls
{

/// The four quadratic couplings Q(u1, u2) driving the third component.
enum class QChoice
{
    u2_squared,  // u2^2
    u1_u2,       // u1 u2
    conj_u1_u2,  // conj(u1) u2
    abs_u2_u2,   // |u2| u2
};

inline constexpr std::array<QChoice, 4> all_q_choices{QChoice::u2_squared, QChoice::u1_u2, QChoice::conj_u1_u2,
                                                      QChoice::abs_u2_u2};

inline std::string_view to_string(QChoice q)
{
    switch (q)
    {
    case QChoice::u2_squared:
        return "u2_squared";
    case QChoice::u1_u2:
        return "u1_u2";
    case QChoice::conj_u1_u2:
        return "conj_u1_u2";
    case QChoice::abs_u2_u2:
        return "abs_u2_u2";
    }
    return "?";
}

inline QChoice q_choice_from_string(std::string_view s)
{
    for (auto q : all_q_choices)
        if (to_string(q) == s)
            return q;
    if (s == "1")
        return QChoice::u2_squared;
    if (s == "2")
        return QChoice::u1_u2;
    if (s == "3")
        return QChoice::conj_u1_u2;
    if (s == "4")
        return QChoice::abs_u2_u2;
    throw InvalidArgument("unknown nonlinearity case '" + std::string(s) + "'");
}

inline int case_number(QChoice q) { return static_cast<int>(q) + 1; }

/// Q(z1, z2) evaluated pointwise.
inline cd evaluate_q(QChoice q, cd z1, cd z2)
{
    switch (q)
    {
    case QChoice::u2_squared:
        return z2 * z2;
    case QChoice::u1_u2:
        return z1 * z2;
    case QChoice::conj_u1_u2:
        return std::conj(z1) * z2;
    case QChoice::abs_u2_u2:
        return std::abs(z2) * z2;
    }
    return 0.0;
}

/// Q~(a1, a2) = e^{i pi/4} Q(e^{-i pi/4} a1, e^{-i pi/4} a2).
inline cd evaluate_q_tilde(QChoice q, cd a1, cd a2)
{
    const cd rot = std::polar(1.0, -pi / 4.0);
    return std::conj(rot) * evaluate_q(q, rot * a1, rot * a2);
}

/// Phase weight mu of Q under mass-weighted rotation:
/// Q(e^{i m1 th} z1, e^{i m2 th} z2) = e^{i mu th} Q(z1, z2) for every th.
inline double phase_mass(QChoice q, const MassTriple& m)
{
    switch (q)
    {
    case QChoice::u2_squared:
        return 2.0 * m.m2;
    case QChoice::u1_u2:
        return m.m1 + m.m2;
    case QChoice::conj_u1_u2:
        return m.m2 - m.m1;
    case QChoice::abs_u2_u2:
        return m.m2;
    }
    return 0.0;
}

/// Mass ratio m1:m2:m3 under which each Q satisfies the gauge condition.
inline MassTriple resonant_masses(QChoice q)
{
    switch (q)
    {
    case QChoice::u2_squared:
        return {1.0, 2.0, 4.0};
    case QChoice::u1_u2:
        return {1.0, 2.0, 3.0};
    case QChoice::conj_u1_u2:
        return {1.0, 2.0, 1.0};
    case QChoice::abs_u2_u2:
        return {1.0, 2.0, 2.0};
    }
    return {1.0, 2.0, 4.0};
}

/// Power of eps carried by v3 (v3 is homogeneous in eps of this degree).
inline int eps_degree_of_v3(QChoice q)
{
    return (q == QChoice::u1_u2 || q == QChoice::conj_u1_u2) ? 3 : 4;
}

/// Expected lifespan order: T_eps ~ eps^{-lifespan_exponent}.
inline int lifespan_exponent(QChoice q) { return eps_degree_of_v3(q) == 4 ? 4 : 6; }

struct NonlinearityCase
{
    QChoice tag;
    MassTriple masses;

    /// Q paired with its resonant masses.
    static NonlinearityCase resonant(QChoice q) { return {q, resonant_masses(q)}; }

    /// Same Q with m3 scaled by (1 + delta).
    NonlinearityCase detuned(double delta) const
    {
        return {tag, MassTriple(masses.m1, masses.m2, masses.m3 * (1.0 + delta))};
    }

    double mu() const { return phase_mass(tag, masses); }

    /// Residual phase mismatch mu - m3 of the third equation.
    double detuning() const { return mu() - masses.m3; }

    std::string name() const
    {
        return std::string(to_string(tag)) + " (" + std::to_string(masses.m1) + ":" + std::to_string(masses.m2) +
               ":" + std::to_string(masses.m3) + ")";
    }
};

} // namespace qnls
