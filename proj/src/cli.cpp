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

#include "lfl/cli.hpp"

#include <glob.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include "lfl/metrics.hpp"
#include "lfl/pipeline.hpp"
#include "lfl/synth.hpp"

namespace lfl {

namespace fs = std::filesystem;

namespace {

bool is_log_file(const fs::path& p) {
    const std::string name = p.filename().string();
    auto ends_with = [&](const std::string& suffix) {
        return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
    };
    return ends_with(".tsv") || ends_with(".tsv.gz");
}

void make_directory(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw DataError("cannot create output directory " + dir);
    }
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    return out;
}

void close_output(std::ofstream& out, const std::string& path) {
    out.close();
    if (!out) throw DataError("error writing " + path);
}

Schema schema_or_default(const std::string& path) { return path.empty() ? Schema{} : Schema::load(path); }

/// Encodes every key a training schema could have produced. Under a frozen
/// feature vocabulary the extra keys are dropped, so the result matches what
/// the model was trained on without knowing its schema.
Schema scoring_schema(const std::vector<RawEvent>& events) {
    Schema s;
    std::set<std::string> names;
    for (const auto& ev : events) {
        for (const auto& [name, value] : ev.attributes) names.insert(name);
    }
    s.crossed.assign(names.begin(), names.end());
    s.banner_indicator = true;
    s.domain_indicator = true;
    return s;
}

struct Scored {
    MetricsReport report;
    Vocabularies vocab;
};

Scored score_file(const ModelFile& file, const std::vector<RawEvent>& raw, const Schema& schema,
                  std::span<const std::uint64_t> min_clicks) {
    Scored s{{}, file.vocab};
    s.vocab.features.freeze();
    const auto events = encode(raw, s.vocab, schema);
    s.report = per_banner_daily(score_events(file.model, events), min_clicks);
    return s;
}

Vocabularies truth_vocabulary(const GeneratorConfig& config) {
    Vocabularies v;
    for (std::size_t i = 0; i < config.banners; ++i) v.banners.add("b" + std::to_string(i));
    for (std::size_t j = 0; j < config.domains; ++j) v.domains.add("d" + std::to_string(j));
    for (std::size_t g = 0; g < config.attributes; ++g) {
        for (std::size_t k = 0; k < config.attribute_values; ++k) {
            v.features.add(feature_key("a" + std::to_string(g), "v" + std::to_string(k)));
        }
    }
    v.features.freeze();
    return v;
}

}  // namespace

TrainingConfig TrainingConfig::from_config(const KeyValueConfig& cfg) {
    cfg.require_known({"family", "order", "lambda_lr", "lambda_bias", "lambda_latent", "penalty", "alternations",
                       "warm_alternations", "init_scale", "solver", "step_size", "decay_steps", "max_epochs",
                       "batch_size", "tolerance", "downsample"});
    TrainingConfig t;
    Hyperparameters& h = t.hyper;
    h.order = cfg.get_uint("order", 0);
    h.lambda_lr = cfg.get_double("lambda_lr", h.lambda_lr);
    h.lambda_bias = cfg.get_double("lambda_bias", h.lambda_bias);
    h.lambda_latent = cfg.get_double("lambda_latent", h.lambda_latent);
    h.latent_penalty = penalty_from_string(cfg.get_string("penalty", to_string(h.latent_penalty)));
    h.alternations = cfg.get_uint("alternations", h.alternations);
    h.warm_alternations = cfg.get_uint("warm_alternations", h.warm_alternations);
    h.init_scale = cfg.get_double("init_scale", h.init_scale);
    OptimizerSettings opt = h.latent_optimizer;
    opt.solver = solver_from_string(cfg.get_string("solver", to_string(opt.solver)));
    opt.step_size = cfg.get_double("step_size", opt.step_size);
    opt.decay_steps = cfg.get_double("decay_steps", opt.decay_steps);
    opt.max_epochs = cfg.get_uint("max_epochs", opt.max_epochs);
    opt.batch_size = cfg.get_uint("batch_size", opt.batch_size);
    opt.tolerance = cfg.get_double("tolerance", opt.tolerance);
    h.latent_optimizer = opt;
    h.side_optimizer = opt;
    h.validate();

    if (cfg.has("family")) {
        t.family = family_from_string(cfg.get_string("family", ""));
    } else {
        t.family = cfg.has("order") ? ModelFamily::kLRLFL : ModelFamily::kLR;
    }
    t.downsample = cfg.get_double("downsample", 1.0);
    if (!(t.downsample >= 1.0)) throw std::invalid_argument("config key 'downsample' must be >= 1");
    return t;
}

std::vector<std::string> expand_inputs(const std::string& pattern) {
    std::vector<std::string> files;
    std::error_code ec;
    if (fs::is_directory(pattern, ec)) {
        for (const auto& entry : fs::directory_iterator(pattern)) {
            if (entry.is_regular_file() && is_log_file(entry.path())) files.push_back(entry.path().string());
        }
    } else {
        glob_t g{};
        if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
            for (std::size_t k = 0; k < g.gl_pathc; ++k) files.emplace_back(g.gl_pathv[k]);
        }
        ::globfree(&g);
    }
    if (files.empty()) throw DataError("no data files match '" + pattern + "'");
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<RawEvent> read_events(const std::string& pattern, std::size_t* malformed) {
    std::vector<RawEvent> events;
    for (const auto& path : expand_inputs(pattern)) {
        auto parsed = parse_log_file(path);
        if (malformed != nullptr) *malformed += parsed.malformed;
        events.insert(events.end(), std::make_move_iterator(parsed.events.begin()),
                      std::make_move_iterator(parsed.events.end()));
    }
    return events;
}

std::vector<std::string> run_synth(const SynthCommand& cmd) {
    GeneratorConfig config =
        cmd.config.empty() ? GeneratorConfig{} : GeneratorConfig::from_config(KeyValueConfig::load(cmd.config));
    if (cmd.seed) config.seed = *cmd.seed;
    config.validate();
    const SyntheticData data = generate(config);

    make_directory(cmd.out_dir);
    std::vector<std::string> written;
    for (const auto& day : data.days) {
        const std::string path = (fs::path(cmd.out_dir) / ("day_" + std::to_string(day.day) + ".tsv")).string();
        auto out = open_output(path);
        write_log(out, to_raw(day.events, config));
        close_output(out, path);
        written.push_back(path);
    }

    ModelFile truth;
    truth.model = data.truth;
    truth.hyper.order = config.order;
    truth.vocab = truth_vocabulary(config);
    const std::string truth_path = (fs::path(cmd.out_dir) / "truth.model").string();
    save_model_file(truth_path, truth);
    written.push_back(truth_path);
    return written;
}

ModelFile run_train(const TrainCommand& cmd) {
    std::optional<ModelFile> warm;
    if (!cmd.warm_start.empty()) warm = load_model_file(cmd.warm_start);

    TrainingConfig config;
    if (!cmd.hyper.empty()) {
        config = TrainingConfig::from_config(KeyValueConfig::load(cmd.hyper));
    } else if (warm) {
        config.hyper = warm->hyper;
        config.family = warm->model.family;
    }

    const Schema schema = schema_or_default(cmd.schema);
    const auto raw = read_events(cmd.data);
    if (raw.empty()) throw DataError("no events in '" + cmd.data + "'");

    ModelFile file;
    file.hyper = config.hyper;
    file.vocab = warm ? warm->vocab : build_vocabularies(raw, schema);
    file.vocab.features.freeze();
    auto events = encode(raw, file.vocab, schema);
    std::int32_t last_day = events.front().day;
    for (const auto& ev : events) last_day = std::max(last_day, ev.day);

    DatasetDay data = DatasetDay::from_events(last_day, std::move(events));
    if (config.downsample > 1.0) data = data.downsampled(config.downsample, cmd.seed);

    TrainOptions options;
    options.family = config.family;
    options.seed = cmd.seed;
    options.min_shape = {file.vocab.banners.size(), file.vocab.domains.size(), file.vocab.features.size()};
    file.model = train_alternating(data, config.hyper, warm ? &warm->model : nullptr, options);
    if (!cmd.out.empty()) save_model_file(cmd.out, file);
    return file;
}

void run_evaluate(const EvaluateCommand& cmd) {
    const ModelFile model = load_model_file(cmd.model);
    const auto raw = read_events(cmd.data);
    if (raw.empty()) throw DataError("test data '" + cmd.data + "' holds no events");
    const Schema schema = cmd.schema.empty() ? scoring_schema(raw) : Schema::load(cmd.schema);

    const Scored candidate = score_file(model, raw, schema, cmd.min_clicks);
    std::vector<DailyDelta> deltas;
    if (!cmd.baseline.empty()) {
        const Scored base = score_file(load_model_file(cmd.baseline), raw, schema, cmd.min_clicks);
        deltas = relative_report(candidate.report, base.report);
    }

    make_directory(cmd.out_dir);
    const std::string model_id = fs::path(cmd.model).stem().string();
    const std::string metrics_path = (fs::path(cmd.out_dir) / "metrics.csv").string();
    auto metrics = open_output(metrics_path);
    write_metrics_csv(metrics, candidate.report, model_id,
                      [&](std::uint32_t b) { return candidate.vocab.banners.key(b); });
    close_output(metrics, metrics_path);

    BootstrapOptions boot;
    boot.seed = cmd.seed;
    const std::string summary_path = (fs::path(cmd.out_dir) / "summary.csv").string();
    auto summary = open_output(summary_path);
    write_summary_csv(summary, candidate.report, model_id, cmd.baseline.empty() ? nullptr : &deltas, boot);
    close_output(summary, summary_path);
}

void run_sweep(const SweepCommand& cmd) {
    const TrainingConfig config =
        cmd.hyper.empty() ? TrainingConfig{} : TrainingConfig::from_config(KeyValueConfig::load(cmd.hyper));
    const SweepGrids grids =
        cmd.grids.empty() ? SweepGrids::defaults() : SweepGrids::from_config(KeyValueConfig::load(cmd.grids));
    const Schema schema = schema_or_default(cmd.schema);
    const auto raw = read_events(cmd.data);
    Vocabularies vocab = build_vocabularies(raw, schema);
    const auto days = partition_by_day(encode(raw, vocab, schema));

    SweepOptions options;
    options.window = cmd.window;
    options.downsample = config.downsample;
    options.seed = cmd.seed;
    options.threads = std::max<std::size_t>(cmd.threads, 1);
    const SweepResult result = staged_sweep(days, grids, config.hyper, options);

    auto out = open_output(cmd.out);
    write_sweep_csv(out, result.rows);
    close_output(out, cmd.out);
}

}  // namespace lfl
