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

#include <stdexcept>
#include <string>
#include <utility>

namespace qnls
{

/// Base class of every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (non-positive mass, t <= 0, ...).
class InvalidArgument : public Error
{
public:
    using Error::Error;
};

/// Two fields that must share a grid do not.
class GridMismatch : public Error
{
public:
    using Error::Error;
};

/// The grid is too coarse for the requested transform or product.
class AliasingError : public Error
{
public:
    using Error::Error;
};

/// Too much L2 mass reached the edge of the periodic box.
class SupportEscape : public Error
{
public:
    SupportEscape(const std::string& what, double fraction) : Error(what), fraction_(fraction) {}
    double fraction() const noexcept { return fraction_; }

private:
    double fraction_;
};

/// Successive quadrature refinements disagree beyond tolerance.
class QuadratureDivergence : public Error
{
public:
    QuadratureDivergence(const std::string& what, double disagreement)
        : Error(what), disagreement_(disagreement)
    {
    }
    double disagreement() const noexcept { return disagreement_; }

private:
    double disagreement_;
};

/// Adaptive time stepping could not meet its tolerance.
class StepUnderflow : public Error
{
public:
    using Error::Error;
};

/// NaN or Inf appeared in a field.
class NonFiniteValue : public Error
{
public:
    using Error::Error;
};

/// |1 - sigma| fell below the branch tolerance: the simulated blow-up signal.
class BlowupReached : public Error
{
public:
    BlowupReached(const std::string& what, double x) : Error(what), x_(x) {}
    /// Grid coordinate where 1 - sigma vanished.
    double location() const noexcept { return x_; }

private:
    double x_;
};

/// The logarithm jumped between branches along a trajectory.
class BranchJump : public Error
{
public:
    using Error::Error;
};

/// exp(2 m3 u3) crossed the overflow guard.
class OverflowEvent : public Error
{
public:
    OverflowEvent(const std::string& what, double t) : Error(what), t_(t) {}
    double time() const noexcept { return t_; }

private:
    double t_;
};

/// A trajectory never reached ||v3||_inf = 1 before the horizon.
class NoCrossing : public Error
{
public:
    NoCrossing(const std::string& what, double horizon, double max_seen)
        : Error(what), horizon_(horizon), max_seen_(max_seen)
    {
    }
    double horizon() const noexcept { return horizon_; }
    double max_seen() const noexcept { return max_seen_; }

private:
    double horizon_;
    double max_seen_;
};

/// Configuration failed validation; `field()` names the offending key. The message is
/// prefixed with the field unless it already starts with it.
class ConfigError : public Error
{
public:
    ConfigError(std::string field, const std::string& message)
        : Error(message.rfind(field, 0) == 0 ? message : field + ": " + message), field_(std::move(field))
    {
    }
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace qnls
