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

// Command implementations behind the lflctr executable. Each command takes a
// plain options struct so it can be driven from tests as well as from the
// argument parser.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lfl/combined.hpp"
#include "lfl/config.hpp"
#include "lfl/core.hpp"
#include "lfl/ingest.hpp"
#include "lfl/model_io.hpp"

namespace lfl {

/// Training settings read from a hyperparameter config file.
struct TrainingConfig {
    Hyperparameters hyper;
    ModelFamily family = ModelFamily::kLR;
    double downsample = 1.0;

    /// Without an explicit `family`, an absent `order` key selects LR and a
    /// present one selects LR+LFL.
    static TrainingConfig from_config(const KeyValueConfig& cfg);
};

/// Expands a glob pattern, a directory (all *.tsv and *.tsv.gz inside) or a
/// plain path into a sorted file list. Throws DataError when nothing matches.
std::vector<std::string> expand_inputs(const std::string& pattern);

/// Reads and concatenates every file matched by the pattern. Malformed lines
/// are counted into `malformed` when given.
std::vector<RawEvent> read_events(const std::string& pattern, std::size_t* malformed = nullptr);

struct SynthCommand {
    std::string config;  // optional; defaults apply when empty
    std::string out_dir;
    std::optional<std::uint64_t> seed;
};

/// Writes day_<d>.tsv per generated day and truth.model into out_dir.
/// Returns the written paths.
std::vector<std::string> run_synth(const SynthCommand& cmd);

struct TrainCommand {
    std::string data;
    std::string schema;  // optional
    std::string hyper;   // optional
    std::string warm_start;
    std::string out;
    std::uint64_t seed = 1;
};

ModelFile run_train(const TrainCommand& cmd);

struct EvaluateCommand {
    std::string model;
    std::string data;
    std::string schema;  // optional
    std::string baseline;
    std::string out_dir;
    std::vector<std::uint64_t> min_clicks{1, 10};
    std::uint64_t seed = 1;
};

/// Writes metrics.csv and summary.csv into out_dir.
void run_evaluate(const EvaluateCommand& cmd);

struct SweepCommand {
    std::string data;
    std::string schema;
    std::string hyper;
    std::string grids;
    std::string out;
    std::size_t window = 7;
    std::uint64_t seed = 1;
    std::size_t threads = 1;
};

void run_sweep(const SweepCommand& cmd);

}  // namespace lfl
