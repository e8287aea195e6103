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

// L1-regularized logistic regression on explicit features, with fixed
// per-event log-odds offsets, per-dyad averaged predictions and the
// intercept correction for negative down-sampling.

#pragma once

#include <map>
#include <span>
#include <vector>

#include "lfl/core.hpp"
#include "lfl/factorization.hpp"
#include "lfl/ingest.hpp"

namespace lfl {

/// Training data for the explicit-feature model. `events` is a view; the
/// caller keeps the records alive for the lifetime of the problem.
struct SideProblem {
    std::span<const EventRecord> events;
    /// Fixed log-odds added inside the sigmoid, one per event.
    std::vector<double> offsets;
    std::size_t features = 0;
    double lambda = 0.0;
    OptimizerSettings optimizer;

    /// Throws DataError on an offset count mismatch, non-finite offsets or
    /// feature indices outside [0, features).
    void validate() const;
};

/// sigma(w^T x + intercept + intercept_correction + offset).
double predict_lr(const SideModel& model, const SparseFeatureVector& x, double offset);

/// lambda |w|_1 plus the negative log-likelihood over the events. The
/// intercept is not penalized.
double lr_loss(const SideProblem& problem, const SideModel& model);

struct SideGradient {
    std::vector<double> weights;
    double intercept = 0.0;
};

/// Gradient of the negative log-likelihood part of lr_loss.
SideGradient lr_gradient(const SideProblem& problem, const SideModel& model);

struct SideFitReport {
    std::size_t epochs = 0;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    std::vector<double> loss_trace;
    bool converged = false;
};

/// Minimizes lr_loss from `init`. L1 produces exact zeros. The returned
/// model keeps the init's intercept correction. Throws NumericalError on
/// divergence.
SideModel fit_lr(const SideProblem& problem, const SideModel& init, SideFitReport* report = nullptr);

/// Per dyad: the mean predicted click probability over the dyad's feature
/// vectors, turned into log-odds after clamping to [1e-12, 1 - 1e-12].
/// Throws std::invalid_argument on an empty group.
OffsetTable dyad_avg_prediction(const SideModel& model,
                                const std::map<DyadKey, std::vector<SparseFeatureVector>>& groups);

/// Same, over event index groups.
OffsetTable dyad_avg_prediction(const SideModel& model, std::span<const EventRecord> events,
                                const DyadIndexGroups& groups);

/// ln(keep rate): the log-odds shift that undoes negative down-sampling.
/// Throws std::invalid_argument unless 0 < rate <= 1.
double intercept_correction(double keep_rate);

}  // namespace lfl
