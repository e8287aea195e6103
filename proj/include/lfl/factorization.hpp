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

// Confidence-weighted latent feature log-linear model over (banner, domain)
// dyads: prediction, regularized loss, gradient and fitting with optional
// fixed per-dyad log-odds offsets.

#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "lfl/core.hpp"

namespace lfl {

/// Fixed log-odds offset per dyad; absent keys read as the fallback value
/// (0 unless constructed otherwise).
class OffsetTable {
public:
    OffsetTable() = default;
    explicit OffsetTable(double fallback) : fallback_(fallback) {}

    double get(DyadKey key) const {
        const auto it = offsets_.find(key);
        return it == offsets_.end() ? fallback_ : it->second;
    }
    /// Throws DataError on non-finite offsets.
    void set(DyadKey key, double offset);

    double fallback() const { return fallback_; }
    std::size_t size() const { return offsets_.size(); }

private:
    std::unordered_map<DyadKey, double, DyadKeyHash> offsets_;
    double fallback_ = 0.0;
};

struct FactorizationProblem {
    std::size_t banners = 0;
    std::size_t domains = 0;
    std::vector<DyadAggregate> aggregates;
    OffsetTable offsets;
    Hyperparameters hyper;

    /// Throws DataError when an aggregate key lies outside banners x domains.
    void validate() const;
};

/// sigma(alpha_i^T beta_j + offset). Throws std::out_of_range for keys
/// outside the factor matrices.
double predict_mf(const LatentFactors& factors, DyadKey key, double offset);

/// Regularizer: lambda_latent on latent slots and lambda_bias on bias slots,
/// squared (L2) or absolute (L1) per the penalty. Constant slots excluded.
double latent_penalty(const LatentFactors& factors, const Hyperparameters& hyper);

/// Negative log-likelihood summed over dyads, each weighted by its click and
/// non-click counts, plus the regularizer. Throws NumericalError naming the
/// dyad whose term is not finite.
double loss_cwf(const FactorizationProblem& problem, const LatentFactors& factors);

/// Gradient in the same row-major layout as the factor matrices.
struct FactorGradient {
    std::vector<double> rows;
    std::vector<double> cols;
};

/// Gradient of the smooth part of loss_cwf: the data term plus the L2
/// regularizer when the penalty is L2 (the L1 term is left to the optimizer).
/// Constant slots are exactly zero.
FactorGradient grad_cwf(const FactorizationProblem& problem, const LatentFactors& factors);

enum class FixedSide { kNone, kRows, kCols };

/// Latent slots uniform in [-scale, scale] / sqrt(order); biases zero.
LatentFactors init_factors(std::size_t banners, std::size_t domains, std::size_t order,
                           double scale, std::uint64_t seed);

struct FitReport {
    std::size_t epochs = 0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    /// Full loss after each epoch.
    std::vector<double> loss_trace;
    bool converged = false;
};

/// Minimizes loss_cwf starting from `init`. Rows (or columns) without any
/// observed dyad have their free slots set to zero, the exact minimizer of
/// their separable part. A fixed side is returned unchanged. Throws
/// NumericalError on divergence.
LatentFactors fit(const FactorizationProblem& problem, const LatentFactors& init, FixedSide fixed,
                  FitReport* report = nullptr);

}  // namespace lfl
