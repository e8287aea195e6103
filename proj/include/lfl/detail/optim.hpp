// Copyright 2026 The lflctr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Pieces shared by the latent and explicit-feature optimizers.

#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "lfl/core.hpp"

namespace lfl::detail {

/// Sufficient-decrease constant for the coordinate line searches.
inline constexpr double kArmijo = 0.01;
inline constexpr int kMaxLineSearchSteps = 30;

/// Newton step for one coordinate of
///   f(x + d) ~ f(x) + grad d + hess d^2 / 2 + l1 |x + d|
/// (l1 = 0 for smooth problems). Returns the minimizing d; the L1 case
/// lands exactly on zero when the minimizer is there.
inline double newton_direction(double x, double grad, double hess, double l1) {
    if (l1 == 0.0) return -grad / hess;
    if (grad + l1 <= hess * x) return -(grad + l1) / hess;
    if (grad - l1 >= hess * x) return -(grad - l1) / hess;
    return -x;
}

/// Inverse-time decay.
inline double step_at(const OptimizerSettings& opt, std::size_t update) {
    return opt.step_size / (1.0 + static_cast<double>(update) / opt.decay_steps);
}

/// Cumulative L1 penalty for stochastic updates: every coordinate receives
/// the total penalty accrued since the start, clipped so that it never
/// crosses zero.
class CumulativeL1 {
public:
    explicit CumulativeL1(std::size_t n) : applied_(n, 0.0) {}

    /// Accrues `amount` (step * lambda) of penalty for every coordinate.
    void accrue(double amount) { total_ += amount; }

    /// Applies the outstanding penalty to coordinate k.
    void apply(std::size_t k, double& w) {
        const double before = w;
        if (w > 0.0) {
            w = std::max(0.0, w - (total_ + applied_[k]));
        } else if (w < 0.0) {
            w = std::min(0.0, w + (total_ - applied_[k]));
        }
        applied_[k] += w - before;
    }

private:
    double total_ = 0.0;
    std::vector<double> applied_;
};

/// True when the relative improvement falls below the tolerance.
inline bool converged(double previous, double current, double tolerance) {
    return previous - current <= tolerance * std::max(1.0, std::fabs(current));
}

}  // namespace lfl::detail
