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

#include "lfl/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <ostream>
#include <set>
#include <stdexcept>
#include <tuple>

namespace lfl {

namespace {

std::vector<DatasetDay> training_window(std::span<const DatasetDay> days, std::size_t end, std::size_t window,
                                        double downsample, std::uint64_t seed) {
    std::vector<DatasetDay> out;
    for (std::size_t t = end - window; t < end; ++t) {
        out.push_back(downsample > 1.0 ? days[t].downsampled(downsample, seed + static_cast<std::uint64_t>(t))
                                       : days[t]);
    }
    return out;
}

/// A contiguous run of sorted grid values around an optimum.
template <typename T>
class Window {
public:
    Window(std::vector<T> grid, T optimum) : grid_(std::move(grid)) {
        std::sort(grid_.begin(), grid_.end());
        grid_.erase(std::unique(grid_.begin(), grid_.end()), grid_.end());
        const double lo = static_cast<double>(optimum) / 2.0;
        const double hi = static_cast<double>(optimum) * 2.0;
        first_ = grid_.size();
        for (std::size_t n = 0; n < grid_.size(); ++n) {
            const double v = static_cast<double>(grid_[n]);
            if (v < lo || v > hi) continue;
            first_ = std::min(first_, n);
            last_ = n;
        }
        if (first_ == grid_.size()) {
            // The optimum came from outside this grid; use it alone.
            grid_ = {optimum};
            first_ = 0;
            last_ = 0;
        }
    }

    std::vector<T> values() const {
        return {grid_.begin() + static_cast<std::ptrdiff_t>(first_),
                grid_.begin() + static_cast<std::ptrdiff_t>(last_) + 1};
    }

    /// Extends by one grid step when `best` sits on an edge; returns whether
    /// anything was added.
    bool widen_towards(T best) {
        bool grew = false;
        if (best == grid_[first_] && first_ > 0) {
            --first_;
            grew = true;
        }
        if (best == grid_[last_] && last_ + 1 < grid_.size()) {
            ++last_;
            grew = true;
        }
        return grew;
    }

private:
    std::vector<T> grid_;
    std::size_t first_ = 0;
    std::size_t last_ = 0;
};

ModelShape shape_of_days(std::span<const DatasetDay> days) {
    ModelShape s;
    for (const auto& d : days) {
        const ModelShape ds = shape_of(d.events);
        s.banners = std::max(s.banners, ds.banners);
        s.domains = std::max(s.domains, ds.domains);
        s.features = std::max(s.features, ds.features);
    }
    return s;
}

struct SweepConfig {
    int stage = 0;
    ModelFamily family = ModelFamily::kLR;
    Hyperparameters hyper;
};

bool better(const SweepRow& a, const SweepRow& b) {
    if (a.auc != b.auc) return a.auc > b.auc;
    return a.logloss < b.logloss;
}

void require_grid(bool empty, const char* name) {
    if (empty) throw std::invalid_argument(std::string("sweep grid '") + name + "' is empty");
}

}  // namespace

SequentialResult run_sequential(std::span<const DatasetDay> days, const Hyperparameters& hyper,
                                const PipelineOptions& options) {
    if (options.window == 0 || days.size() < options.window + 1) {
        throw std::invalid_argument("sequential run needs at least window + 1 = " +
                                    std::to_string(options.window + 1) + " days, got " +
                                    std::to_string(days.size()));
    }
    const ModelShape shape = shape_of_days(days);
    SequentialResult result;
    for (std::size_t t = options.window; t < days.size(); ++t) {
        const auto window = training_window(days, t, options.window, options.downsample, options.seed);
        const DatasetDay train = merge_days(window);
        TrainOptions train_options;
        train_options.family = options.family;
        train_options.min_shape = shape;
        train_options.seed = options.seed;
        const CombinedModel* init =
            options.warm_start && !result.models.empty() ? &result.models.back() : nullptr;
        CombinedModel model = train_alternating(train, hyper, init, train_options);

        const ScoredSet scored = score_events(model, days[t].events);
        MetricsReport day_report = per_banner_daily(scored, options.min_clicks);
        result.report.banners.insert(result.report.banners.end(), day_report.banners.begin(),
                                     day_report.banners.end());
        result.report.daily.insert(result.report.daily.end(), day_report.daily.begin(), day_report.daily.end());
        result.pooled.push_back({t, auc(scored), logloss(scored)});
        result.models.push_back(std::move(model));
    }
    return result;
}

SweepGrids SweepGrids::defaults() {
    SweepGrids g;
    for (int k = 0; k <= 10; ++k) g.lambda_lr.push_back(2.0 + 0.5 * k);
    g.lambda_bias = {1.0, 2.0, 3.0, 4.0, 5.0};
    g.lambda_latent = {0.25, 0.5, 1.0, 2.0, 4.0};
    g.orders = {1, 2, 5, 10};
    return g;
}

SweepGrids SweepGrids::from_config(const KeyValueConfig& cfg) {
    cfg.require_known({"lambda_lr", "lambda_bias", "lambda_latent", "orders"});
    SweepGrids g = defaults();
    if (cfg.has("lambda_lr")) g.lambda_lr = cfg.get_doubles("lambda_lr");
    if (cfg.has("lambda_bias")) g.lambda_bias = cfg.get_doubles("lambda_bias");
    if (cfg.has("lambda_latent")) g.lambda_latent = cfg.get_doubles("lambda_latent");
    if (cfg.has("orders")) {
        g.orders.clear();
        for (const auto& item : cfg.get_list("orders")) g.orders.push_back(parse_uint(item));
    }
    return g;
}

SweepResult staged_sweep(std::span<const DatasetDay> days, const SweepGrids& grids, const Hyperparameters& base,
                         const SweepOptions& options) {
    require_grid(grids.lambda_lr.empty(), "lambda_lr");
    require_grid(grids.lambda_bias.empty(), "lambda_bias");
    require_grid(grids.lambda_latent.empty(), "lambda_latent");
    require_grid(grids.orders.empty(), "orders");
    if (options.window == 0 || days.size() < options.window + 1) {
        throw std::invalid_argument("sweep needs at least window + 1 days");
    }

    const auto window = training_window(days, options.window, options.window, options.downsample, options.seed);
    const DatasetDay train = merge_days(window);
    const DatasetDay& validation = days[options.window];
    const ModelShape shape = shape_of_days(days.first(options.window + 1));

    SweepResult result;
    auto run_one = [&](const SweepConfig& c) {
        const auto start = std::chrono::steady_clock::now();
        TrainOptions to;
        to.family = c.family;
        to.min_shape = shape;
        to.seed = options.seed;
        const CombinedModel model = train_alternating(train, c.hyper, nullptr, to);
        const ScoredSet scored = score_events(model, validation.events);
        SweepRow row;
        row.stage = c.stage;
        row.family = c.family;
        row.lambda_lr = c.hyper.lambda_lr;
        row.lambda_bias = c.hyper.lambda_bias;
        row.lambda_latent = c.hyper.lambda_latent;
        row.order = c.family == ModelFamily::kLR ? 0 : c.hyper.order;
        row.penalty = c.hyper.latent_penalty;
        row.auc = auc(scored);
        row.logloss = logloss(scored);
        row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        return row;
    };
    auto run_batch = [&](const std::vector<SweepConfig>& configs) {
        std::vector<SweepRow> rows(configs.size());
        const std::size_t threads = std::max<std::size_t>(1, options.threads);
        for (std::size_t begin = 0; begin < configs.size(); begin += threads) {
            const std::size_t end = std::min(configs.size(), begin + threads);
            std::vector<std::future<SweepRow>> pending;
            for (std::size_t n = begin; n < end; ++n) {
                pending.push_back(std::async(threads > 1 ? std::launch::async : std::launch::deferred,
                                             run_one, std::cref(configs[n])));
            }
            for (std::size_t n = begin; n < end; ++n) rows[n] = pending[n - begin].get();
        }
        result.rows.insert(result.rows.end(), rows.begin(), rows.end());
        return rows;
    };
    auto best_of = [](const std::vector<SweepRow>& rows) {
        return *std::min_element(rows.begin(), rows.end(), better);
    };

    // Stage 1: explicit features alone.
    std::vector<SweepConfig> stage;
    for (const double l : grids.lambda_lr) {
        SweepConfig c{1, ModelFamily::kLR, base};
        c.hyper.lambda_lr = l;
        stage.push_back(c);
    }
    result.best_lr = best_of(run_batch(stage));

    // Stage 2: biases only.
    stage.clear();
    for (const double l : grids.lambda_bias) {
        SweepConfig c{2, ModelFamily::kLFL, base};
        c.hyper.order = 0;
        c.hyper.lambda_bias = l;
        stage.push_back(c);
    }
    result.best_bias = best_of(run_batch(stage));

    // Stage 3: latent dimensions with the bias weight fixed.
    stage.clear();
    for (const std::size_t k : grids.orders) {
        if (k == 0) continue;
        for (const double l : grids.lambda_latent) {
            SweepConfig c{3, ModelFamily::kLFL, base};
            c.hyper.order = k;
            c.hyper.lambda_bias = result.best_bias.lambda_bias;
            c.hyper.lambda_latent = l;
            stage.push_back(c);
        }
    }
    if (stage.empty()) {
        throw std::invalid_argument("sweep grid 'orders' needs at least one order above 0");
    }
    result.best_latent = best_of(run_batch(stage));

    // Stage 4: grid values within a factor of two of the stage-1 and stage-3
    // optima, widened one grid step when the best lands on the window edge.
    Window<double> lr_window(grids.lambda_lr, result.best_lr.lambda_lr);
    Window<double> latent_window(grids.lambda_latent, result.best_latent.lambda_latent);
    std::vector<std::size_t> positive_orders;
    for (const std::size_t k : grids.orders) {
        if (k > 0) positive_orders.push_back(k);
    }
    Window<std::size_t> order_window(positive_orders, result.best_latent.order);
    std::set<std::tuple<double, double, std::size_t>> done;
    std::vector<SweepRow> stage4;
    for (std::size_t expansion = 0;; ++expansion) {
        stage.clear();
        for (const double lr : lr_window.values()) {
            for (const double lat : latent_window.values()) {
                for (const std::size_t k : order_window.values()) {
                    if (!done.insert({lr, lat, k}).second) continue;
                    SweepConfig c{4, ModelFamily::kLRLFL, base};
                    c.hyper.order = k;
                    c.hyper.lambda_lr = lr;
                    c.hyper.lambda_bias = result.best_bias.lambda_bias;
                    c.hyper.lambda_latent = lat;
                    stage.push_back(c);
                }
            }
        }
        const auto rows = run_batch(stage);
        stage4.insert(stage4.end(), rows.begin(), rows.end());
        if (expansion >= options.max_expansions) break;
        const SweepRow best = best_of(stage4);
        bool grew = lr_window.widen_towards(best.lambda_lr);
        grew = latent_window.widen_towards(best.lambda_latent) || grew;
        grew = order_window.widen_towards(best.order) || grew;
        if (!grew) break;
    }
    result.ranked = stage4;
    std::stable_sort(result.ranked.begin(), result.ranked.end(), better);
    return result;
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
    out << "stage,family,lambda_lr,lambda_bias,lambda_latent,order,penalty,auc,logloss,train_seconds\n";
    for (const auto& r : rows) {
        out << r.stage << ',' << to_string(r.family) << ',' << format_double(r.lambda_lr) << ','
            << format_double(r.lambda_bias) << ',' << format_double(r.lambda_latent) << ',' << r.order << ','
            << to_string(r.penalty) << ',' << format_double(r.auc) << ',' << format_double(r.logloss) << ','
            << format_double(r.seconds) << '\n';
    }
}

}  // namespace lfl
