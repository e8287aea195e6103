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

#include "lfl/combined.hpp"

#include <algorithm>
#include <stdexcept>

#include "lfl/factorization.hpp"
#include "lfl/sidemodel.hpp"

namespace lfl {

namespace {

/// Copy of `f` grown to the given dimensions; new rows are zero.
LatentFactors grow(const LatentFactors& f, std::size_t banners, std::size_t domains) {
    if (f.banners() == banners && f.domains() == domains) return f;
    LatentFactors out(banners, domains, f.order());
    for (std::size_t i = 0; i < std::min(banners, f.banners()); ++i) {
        std::copy(f.row(i).begin(), f.row(i).end(), out.row_mut(i).begin());
    }
    for (std::size_t j = 0; j < std::min(domains, f.domains()); ++j) {
        std::copy(f.col(j).begin(), f.col(j).end(), out.col_mut(j).begin());
    }
    return out;
}

std::vector<EventRecord> strip_features(std::span<const EventRecord> events) {
    std::vector<EventRecord> out;
    out.reserve(events.size());
    for (const auto& ev : events) out.push_back(EventRecord{ev.day, ev.key, ev.clicked, {}});
    return out;
}

double base_rate_logodds(std::span<const EventRecord> events) {
    std::size_t clicks = 0;
    for (const auto& ev : events) clicks += ev.clicked ? 1 : 0;
    return logit(clamp_probability(static_cast<double>(clicks) / static_cast<double>(events.size())));
}

}  // namespace

std::string to_string(ModelFamily f) {
    switch (f) {
        case ModelFamily::kLR: return "LR";
        case ModelFamily::kLFL: return "LFL";
        case ModelFamily::kLRLFL: return "LR+LFL";
    }
    return "LR+LFL";
}

ModelFamily family_from_string(const std::string& s) {
    if (s == "LR") return ModelFamily::kLR;
    if (s == "LFL") return ModelFamily::kLFL;
    if (s == "LR+LFL") return ModelFamily::kLRLFL;
    throw std::invalid_argument("unknown model family '" + s + "' (expected LR, LFL or LR+LFL)");
}

double predict(const CombinedModel& model, DyadKey key, const SparseFeatureVector& x) {
    return sigmoid(model.latent_logodds(key) + model.side_logodds(x));
}

ScoredSet score_events(const CombinedModel& model, std::span<const EventRecord> events) {
    ScoredSet set;
    set.scores.reserve(events.size());
    for (const auto& ev : events) {
        set.add(predict(model, ev.key, ev.features), ev.clicked, ev.key.banner, ev.day);
    }
    return set;
}

ModelShape shape_of(std::span<const EventRecord> events) {
    ModelShape s;
    for (const auto& ev : events) {
        s.banners = std::max<std::size_t>(s.banners, ev.key.banner + 1);
        s.domains = std::max<std::size_t>(s.domains, ev.key.domain + 1);
        s.features = std::max(s.features, ev.features.dimension());
        const auto entries = ev.features.entries();
        if (!entries.empty()) s.features = std::max<std::size_t>(s.features, entries.back().index + 1);
    }
    return s;
}

DatasetDay merge_days(std::span<const DatasetDay> days) {
    std::vector<EventRecord> events;
    double kept_negatives = 0.0;
    double original_negatives = 0.0;
    double factor = 1.0;
    for (const auto& d : days) {
        std::size_t negatives = 0;
        for (const auto& ev : d.events) {
            events.push_back(ev);
            negatives += ev.clicked ? 0 : 1;
        }
        kept_negatives += static_cast<double>(negatives);
        original_negatives += static_cast<double>(negatives) / d.keep_rate;
        factor = std::max(factor, d.downsample_factor);
    }
    DatasetDay merged = DatasetDay::from_events(days.empty() ? 0 : days.back().day, std::move(events));
    merged.downsample_factor = factor;
    merged.keep_rate = original_negatives > 0.0 ? kept_negatives / original_negatives : 1.0;
    if (merged.keep_rate <= 0.0) merged.keep_rate = 1.0 / factor;
    return merged;
}

CombinedModel train_alternating(const DatasetDay& data, const Hyperparameters& hyper,
                                const CombinedModel* init, const TrainOptions& options) {
    hyper.validate();
    if (data.events.empty()) {
        throw std::invalid_argument("training data is empty");
    }
    const ModelFamily family = options.family;
    const bool use_latent = family != ModelFamily::kLR;
    const bool use_side_features = family != ModelFamily::kLFL;

    ModelShape shape = shape_of(data.events);
    shape.banners = std::max(shape.banners, options.min_shape.banners);
    shape.domains = std::max(shape.domains, options.min_shape.domains);
    shape.features = std::max(shape.features, options.min_shape.features);
    if (init != nullptr) {
        if (init->family != family) {
            throw std::invalid_argument("warm-start model family " + to_string(init->family) +
                                        " differs from " + to_string(family));
        }
        if (use_latent && init->factors.order() != hyper.order) {
            throw std::invalid_argument("warm-start model order differs from the hyperparameters");
        }
        shape.banners = std::max(shape.banners, init->factors.banners());
        shape.domains = std::max(shape.domains, init->factors.domains());
        shape.features = std::max(shape.features, init->side.weights.size());
    }
    const std::size_t side_features = use_side_features ? shape.features : 0;

    CombinedModel model;
    model.family = family;
    model.day_trained = data.day;
    if (init != nullptr) {
        model.side = init->side;
        model.side.weights.resize(side_features, 0.0);
        if (use_latent) model.factors = grow(init->factors, shape.banners, shape.domains);
    } else {
        model.side = SideModel(side_features);
        if (use_latent) {
            model.factors = init_factors(shape.banners, shape.domains, hyper.order, hyper.init_scale, options.seed);
        }
    }
    // Training happens in the sampled domain; the correction is re-applied
    // on the way out.
    model.side.intercept_correction = 0.0;

    std::vector<EventRecord> stripped;
    std::span<const EventRecord> side_events = data.events;
    if (!use_side_features) {
        stripped = strip_features(data.events);
        side_events = stripped;
    }

    if (use_latent) {
        model.trained_banners.assign(shape.banners, 0);
        model.trained_domains.assign(shape.domains, 0);
        for (const auto& a : data.aggregates) {
            model.trained_banners[a.key().banner] = 1;
            model.trained_domains[a.key().domain] = 1;
        }
    }

    const DyadIndexGroups groups = use_latent ? group_event_indices(data.events) : DyadIndexGroups{};
    const double correction = intercept_correction(data.keep_rate);
    // Without latent factors there is nothing to alternate with.
    const std::size_t rounds = !use_latent ? 1 : (init != nullptr ? hyper.warm_alternations : hyper.alternations);
    const bool fresh = init == nullptr;

    SideProblem side_problem;
    side_problem.events = side_events;
    side_problem.features = side_features;
    side_problem.lambda = hyper.lambda_lr;
    side_problem.optimizer = hyper.side_optimizer;
    side_problem.offsets.assign(side_events.size(), 0.0);

    for (std::size_t round = 0; round < rounds; ++round) {
        if (use_latent) {
            FactorizationProblem latent;
            latent.banners = shape.banners;
            latent.domains = shape.domains;
            latent.aggregates = data.aggregates;
            latent.hyper = hyper;
            latent.offsets = (round == 0 && fresh)
                                 ? OffsetTable(base_rate_logodds(data.events))
                                 : dyad_avg_prediction(model.side, side_events, groups);
            model.factors = fit(latent, model.factors, FixedSide::kNone);
            for (std::size_t d = 0; d < side_events.size(); ++d) {
                side_problem.offsets[d] = model.factors.dot(side_events[d].key);
            }
        }
        model.side = fit_lr(side_problem, model.side);
        model.alternations_run = round + 1;
        if (options.observer) {
            CombinedModel snapshot = model;
            snapshot.side.intercept_correction = correction;
            options.observer(round, snapshot);
        }
    }
    model.side.intercept_correction = correction;
    return model;
}

std::vector<TracePoint> evaluate_alternation_trace(const DatasetDay& data, const Hyperparameters& hyper,
                                                   const TrainOptions& options,
                                                   std::span<const EventRecord> validation,
                                                   double validation_fraction) {
    DatasetDay train = data;
    std::vector<EventRecord> carved;
    if (validation.empty()) {
        if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
            throw std::invalid_argument("validation fraction must lie in (0, 1)");
        }
        const auto held = static_cast<std::size_t>(
            static_cast<double>(data.events.size()) * validation_fraction);
        const std::size_t split = data.events.size() - held;
        carved.assign(data.events.begin() + static_cast<std::ptrdiff_t>(split), data.events.end());
        std::vector<EventRecord> head(data.events.begin(), data.events.begin() + static_cast<std::ptrdiff_t>(split));
        train = DatasetDay::from_events(data.day, std::move(head));
        train.downsample_factor = data.downsample_factor;
        train.keep_rate = data.keep_rate;
        validation = carved;
    }

    std::vector<TracePoint> trace;
    TrainOptions traced = options;
    traced.observer = [&](std::size_t round, const CombinedModel& model) {
        const ScoredSet scored = score_events(model, validation);
        trace.push_back({round + 1, auc(scored), logloss(scored)});
        if (options.observer) options.observer(round, model);
    };
    train_alternating(train, hyper, nullptr, traced);
    return trace;
}

}  // namespace lfl
