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

// The fused latent + explicit-feature model and its alternating trainer.
//
// A prediction is a single sigmoid over summed log-odds:
//
//   p = sigma(alpha_i^T beta_j + w^T x + intercept + intercept_correction)
//
// Training alternates between fitting the latent factors with the explicit
// model's per-dyad averaged log-odds held fixed, and fitting the explicit
// model with the latent log-odds of each event held fixed.

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lfl/core.hpp"
#include "lfl/ingest.hpp"
#include "lfl/metrics.hpp"

namespace lfl {

enum class ModelFamily {
    /// Explicit features only.
    kLR,
    /// Latent factors and biases plus a global intercept.
    kLFL,
    /// Both, fitted by alternation.
    kLRLFL,
};

std::string to_string(ModelFamily f);
ModelFamily family_from_string(const std::string& s);

struct CombinedModel {
    ModelFamily family = ModelFamily::kLRLFL;
    LatentFactors factors;
    SideModel side;
    /// Banners and domains that had observations when the factors were fit;
    /// anything else is a cold start and gets no latent contribution.
    std::vector<std::uint8_t> trained_banners;
    std::vector<std::uint8_t> trained_domains;
    std::size_t alternations_run = 0;
    std::int32_t day_trained = 0;

    bool is_trained(DyadKey key) const {
        return key.banner < trained_banners.size() && trained_banners[key.banner] &&
               key.domain < trained_domains.size() && trained_domains[key.domain] &&
               factors.in_range(key);
    }

    /// alpha_i^T beta_j, or 0 for a cold-start dyad.
    double latent_logodds(DyadKey key) const { return is_trained(key) ? factors.dot(key) : 0.0; }

    double side_logodds(const SparseFeatureVector& x) const { return side.logodds(x); }

    friend bool operator==(const CombinedModel&, const CombinedModel&) = default;
};

double predict(const CombinedModel& model, DyadKey key, const SparseFeatureVector& x);

/// Scores every event, tagging each with its banner and day.
ScoredSet score_events(const CombinedModel& model, std::span<const EventRecord> events);

/// Dimensions a model must cover.
struct ModelShape {
    std::size_t banners = 0;
    std::size_t domains = 0;
    std::size_t features = 0;
};

/// Smallest shape covering every key and feature index of the events.
ModelShape shape_of(std::span<const EventRecord> events);

/// Concatenates days in order; the keep rate of the result is the pooled
/// fraction of negatives kept.
DatasetDay merge_days(std::span<const DatasetDay> days);

using AlternationObserver = std::function<void(std::size_t round, const CombinedModel& model)>;

struct TrainOptions {
    ModelFamily family = ModelFamily::kLRLFL;
    /// Grows the model beyond the data's own shape (e.g. to a global
    /// vocabulary).
    ModelShape min_shape;
    /// Seed for the latent initialization of a fresh model.
    std::uint64_t seed = 1;
    /// Called after every completed round with the model as it would be
    /// returned at that point.
    AlternationObserver observer;
};

/// Alternating residual fit on one (possibly multi-day) dataset. A fresh
/// run does `hyper.alternations` rounds; with `init` it warm starts and
/// runs `hyper.warm_alternations` rounds. The returned side model carries
/// the intercept correction for the data's negative keep rate. Throws
/// std::invalid_argument on empty data.
CombinedModel train_alternating(const DatasetDay& data, const Hyperparameters& hyper,
                                const CombinedModel* init, const TrainOptions& options = {});

struct TracePoint {
    std::size_t alternation = 0;
    double auc = 0.0;
    double logloss = 0.0;
};

/// Validation metrics after every alternation of a fresh training run. When
/// no validation events are given, the last `validation_fraction` of the
/// events (in order) is held out.
std::vector<TracePoint> evaluate_alternation_trace(const DatasetDay& data, const Hyperparameters& hyper,
                                                   const TrainOptions& options = {},
                                                   std::span<const EventRecord> validation = {},
                                                   double validation_fraction = 0.1);

}  // namespace lfl
