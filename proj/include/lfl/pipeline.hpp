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

// Day-over-day experiment driver: rolling training windows with next-day
// testing and warm starts, plus the staged hyperparameter sweep.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "lfl/combined.hpp"
#include "lfl/config.hpp"
#include "lfl/ingest.hpp"
#include "lfl/metrics.hpp"

namespace lfl {

struct PipelineOptions {
    std::size_t window = 7;
    ModelFamily family = ModelFamily::kLRLFL;
    /// Negative down-sampling applied to training days (test days are
    /// evaluated as given).
    double downsample = 1.0;
    std::uint64_t seed = 1;
    std::vector<std::uint64_t> min_clicks{1, 10};
    /// Warm start each day from the previous day's model.
    bool warm_start = true;
};

struct SequentialResult {
    /// All test days, banners and daily summaries in day order.
    MetricsReport report;
    /// Pooled AUC and logloss per test day.
    std::vector<TracePoint> pooled;
    /// Model trained for each test day.
    std::vector<CombinedModel> models;
};

/// For every test day t >= window: trains on days [t - window, t) (warm
/// started from the previous test day's model when enabled), scores day t
/// and appends its per-banner metrics. Throws std::invalid_argument with
/// fewer than window + 1 days.
SequentialResult run_sequential(std::span<const DatasetDay> days, const Hyperparameters& hyper,
                                const PipelineOptions& options);

struct SweepGrids {
    std::vector<double> lambda_lr;
    std::vector<double> lambda_bias;
    std::vector<double> lambda_latent;
    std::vector<std::size_t> orders;

    /// lambda_lr 2.0..7.0 by 0.5, lambda_bias around 3.0, lambda_latent
    /// around 1.0, orders {1, 2, 5, 10}.
    static SweepGrids defaults();
    /// Keys lambda_lr, lambda_bias, lambda_latent, orders (comma lists);
    /// missing keys keep the defaults.
    static SweepGrids from_config(const KeyValueConfig& cfg);
};

struct SweepRow {
    int stage = 0;
    ModelFamily family = ModelFamily::kLR;
    double lambda_lr = 0.0;
    double lambda_bias = 0.0;
    double lambda_latent = 0.0;
    std::size_t order = 0;
    Penalty penalty = Penalty::kL2;
    double auc = 0.0;
    double logloss = 0.0;
    double seconds = 0.0;
};

struct SweepResult {
    /// Every configuration run, in execution order.
    std::vector<SweepRow> rows;
    /// Stage-4 rows ordered by validation AUC (descending), logloss breaking ties.
    std::vector<SweepRow> ranked;
    SweepRow best_lr;
    SweepRow best_bias;
    SweepRow best_latent;
};

struct SweepOptions {
    std::size_t window = 7;
    double downsample = 1.0;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
    /// Outward expansions allowed when a stage-4 optimum sits on the edge.
    std::size_t max_expansions = 2;
};

/// Four-stage tuning on the first test day: (1) lambda_lr for LR alone,
/// (2) lambda_bias for LFL_0, (3) lambda_latent x order (K > 0) for LFL_K
/// with the stage-2 lambda_bias, (4) a neighbourhood (x/ 2) of the stage-1
/// and stage-3 optima over every order for LR+LFL_K. Throws
/// std::invalid_argument on an empty grid.
SweepResult staged_sweep(std::span<const DatasetDay> days, const SweepGrids& grids, const Hyperparameters& base,
                         const SweepOptions& options);

/// Columns: stage,family,lambda_lr,lambda_bias,lambda_latent,order,penalty,auc,logloss,train_seconds.
void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows);

}  // namespace lfl
