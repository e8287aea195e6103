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

// lflctr: synthetic data, training, evaluation and sweeps from the shell.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <cstdio>
#include <iostream>
#include <stdexcept>

#include "CLI11.hpp"
#include "lfl/cli.hpp"
#include "lfl/core.hpp"

namespace {

constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kNumerical = 3;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Latent-feature and side-information click-through-rate models"};
    app.require_subcommand(1);

    lfl::SynthCommand synth;
    std::uint64_t synth_seed = 0;
    auto* synth_cmd = app.add_subcommand("synth", "Generate synthetic event logs and the generating model");
    synth_cmd->add_option("config,--config", synth.config, "Generator config (key=value)");
    synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();
    auto* synth_seed_opt = synth_cmd->add_option("--seed", synth_seed, "Overrides the config seed");

    lfl::TrainCommand train;
    auto* train_cmd = app.add_subcommand("train", "Train a model on one or more event logs");
    train_cmd->add_option("--data", train.data, "Event log path, directory or glob")->required();
    train_cmd->add_option("--schema", train.schema, "Feature schema config");
    train_cmd->add_option("--hyper", train.hyper, "Hyperparameter config");
    train_cmd->add_option("--warm-start", train.warm_start, "Model file to start from");
    train_cmd->add_option("--out,--model", train.out, "Output model path")->required();
    train_cmd->add_option("--seed", train.seed, "Random seed");

    lfl::EvaluateCommand evaluate;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a test log and write metrics CSVs");
    eval_cmd->add_option("--model", evaluate.model, "Model file")->required();
    eval_cmd->add_option("--data", evaluate.data, "Test event log path, directory or glob")->required();
    eval_cmd->add_option("--schema", evaluate.schema, "Feature schema config");
    eval_cmd->add_option("--baseline", evaluate.baseline, "Baseline model for the delta columns");
    eval_cmd->add_option("--out", evaluate.out_dir, "Output directory")->required();
    eval_cmd->add_option("--min-clicks", evaluate.min_clicks, "Banner click filters")->delimiter(',');
    eval_cmd->add_option("--seed", evaluate.seed, "Bootstrap seed");

    lfl::SweepCommand sweep;
    auto* sweep_cmd = app.add_subcommand("sweep", "Staged hyperparameter sweep on the first test day");
    sweep_cmd->add_option("--data", sweep.data, "Event logs: directory or glob")->required();
    sweep_cmd->add_option("--schema", sweep.schema, "Feature schema config");
    sweep_cmd->add_option("--hyper", sweep.hyper, "Base hyperparameter config");
    sweep_cmd->add_option("--grids", sweep.grids, "Grid config");
    sweep_cmd->add_option("--out", sweep.out, "Output CSV")->required();
    sweep_cmd->add_option("--window", sweep.window, "Training window in days");
    sweep_cmd->add_option("--seed", sweep.seed, "Random seed");
    sweep_cmd->add_option("--threads", sweep.threads, "Parallel configurations");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kUsage;
    }

    try {
        if (*synth_cmd) {
            if (*synth_seed_opt) synth.seed = synth_seed;
            for (const auto& path : lfl::run_synth(synth)) std::cout << path << '\n';
        } else if (*train_cmd) {
            const auto file = lfl::run_train(train);
            std::cout << "trained " << lfl::to_string(file.model.family) << " model, "
                      << file.model.alternations_run << " alternation(s), written to " << train.out << '\n';
        } else if (*eval_cmd) {
            lfl::run_evaluate(evaluate);
        } else if (*sweep_cmd) {
            lfl::run_sweep(sweep);
        }
    } catch (const lfl::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const lfl::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    }
    return 0;
}
