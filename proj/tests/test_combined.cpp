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

#include <cmath>
#include <cstring>

#include "doctest.h"
#include "lfl/combined.hpp"
#include "lfl/factorization.hpp"
#include "lfl/metrics.hpp"
#include "lfl/sidemodel.hpp"
#include "lfl/synth.hpp"

using namespace lfl;

namespace {

GeneratorConfig small_config(std::uint64_t seed = 1) {
    GeneratorConfig c;
    c.banners = 40;
    c.domains = 25;
    c.order = 3;
    c.days = 2;
    c.events_per_day = 20000;
    c.seed = seed;
    return c;
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }

double nll(const CombinedModel& m, std::span<const EventRecord> events) {
    double sum = 0.0;
    for (const auto& e : events) {
        const double p = predict(m, e.key, e.features);
        sum -= e.clicked ? std::log(p) : std::log1p(-p);
    }
    return sum;
}

std::vector<EventRecord> without_features(std::vector<EventRecord> events) {
    for (auto& e : events) e.features = SparseFeatureVector({}, 0);
    return events;
}

}  // namespace

TEST_CASE("predict sums log-odds under one sigmoid") {
    CombinedModel m;
    m.factors = LatentFactors(1, 1, 1);
    m.side = SideModel(2);
    m.trained_banners = {1};
    m.trained_domains = {1};
    const SparseFeatureVector x({{0, 1.0}}, 2);
    CHECK(predict(m, {0, 0}, x) == 0.5);

    m.factors.row_mut(0)[m.factors.row_bias_slot()] = 2.0;
    CHECK(predict(m, {0, 0}, x) == doctest::Approx(sigmoid(2.0)).epsilon(1e-15));

    m.factors.row_mut(0)[m.factors.row_bias_slot()] = 1.0;
    m.side.weights[0] = 1.0;
    CHECK(bit_equal(predict(m, {0, 0}, x), predict_mf(m.factors, {0, 0}, 1.0)));
    CHECK(predict(m, {0, 0}, x) == doctest::Approx(sigmoid(2.0)).epsilon(1e-15));
}

TEST_CASE("features-free data at order 0 matches a direct bias-only fit") {
    const auto data = generate(small_config());
    const DatasetDay day = DatasetDay::from_events(0, without_features(data.days[0].events));
    Hyperparameters h;
    h.order = 0;
    h.lambda_bias = 0.0;
    TrainOptions opt;
    opt.family = ModelFamily::kLRLFL;
    const auto model = train_alternating(day, h, nullptr, opt);

    FactorizationProblem direct;
    direct.banners = model.factors.banners();
    direct.domains = model.factors.domains();
    direct.aggregates = day.aggregates;
    direct.hyper = h;
    const auto f = fit(direct, LatentFactors(direct.banners, direct.domains, 0), FixedSide::kNone);
    const double direct_loss = loss_cwf(direct, f);
    const double combined_loss = nll(model, day.events);
    CHECK(std::fabs(combined_loss - direct_loss) <= 1e-3 * direct_loss);
}

TEST_CASE("data from a pure side model leaves the latent part near zero") {
    // Few dyads with flat popularity, so per-dyad sampling noise stays well
    // below the bound.
    auto cfg = small_config(3);
    cfg.banners = 20;
    cfg.domains = 10;
    cfg.events_per_day = 100000;
    cfg.popularity_exponent = 0.5;
    cfg.latent_scale = 0.0;
    cfg.bias_scale = 0.0;
    const auto data = generate(cfg);
    Hyperparameters h;
    h.order = 2;
    const auto model = train_alternating(data.days[0], h, nullptr);
    double total = 0.0;
    for (const auto& a : data.days[0].aggregates) total += std::fabs(model.latent_logodds(a.key()));
    CHECK(total / static_cast<double>(data.days[0].aggregates.size()) < 0.1);
}

TEST_CASE("warm starting from the generating model does not degrade it") {
    // Averaging side predictions per dyad moves the fixed point away from the
    // truth when side log-odds vary strongly within a dyad, so this uses
    // moderate side weights and plenty of data per parameter.
    auto cfg = small_config(5);
    cfg.banners = 10;
    cfg.domains = 10;
    cfg.order = 2;
    cfg.weight_scale = 0.3;
    cfg.events_per_day = 400000;
    const auto data = generate(cfg);
    Hyperparameters h;
    h.order = cfg.order;
    const auto model = train_alternating(data.days[0], h, &data.truth);
    CHECK(model.alternations_run == 1);
    const double before = logloss(score_events(data.truth, data.days[1].events));
    const double after = logloss(score_events(model, data.days[1].events));
    CHECK(after <= before * 1.001);
}

TEST_CASE("cold-start dyads fall back to the side model exactly") {
    const auto data = generate(small_config(7));
    std::vector<EventRecord> train;
    std::vector<EventRecord> cold;
    for (const auto& e : data.days[0].events) (e.key.banner < 30 ? train : cold).push_back(e);
    Hyperparameters h;
    h.order = 3;
    h.alternations = 2;
    TrainOptions opt;
    opt.min_shape = {40, 25, data.truth.side.weights.size()};
    const auto model = train_alternating(DatasetDay::from_events(0, train), h, nullptr, opt);
    REQUIRE_FALSE(cold.empty());
    for (const auto& e : cold) {
        CHECK_FALSE(model.is_trained(e.key));
        CHECK(model.latent_logodds(e.key) == 0.0);
        CHECK(bit_equal(predict(model, e.key, e.features), predict_lr(model.side, e.features, 0.0)));
    }
    // Banners far outside the matrices behave the same way.
    const auto& e = cold.front();
    const DyadKey outside{1000, e.key.domain};
    CHECK(bit_equal(predict(model, outside, e.features), predict_lr(model.side, e.features, 0.0)));
}

TEST_CASE("predictions are exactly the sigmoid of the component log-odds") {
    const auto data = generate(small_config(9));
    Hyperparameters h;
    h.order = 2;
    h.alternations = 2;
    const auto model = train_alternating(data.days[0], h, nullptr);
    for (std::size_t n = 0; n < 500; ++n) {
        const auto& e = data.days[1].events[n];
        CHECK(bit_equal(predict(model, e.key, e.features),
                        sigmoid(model.latent_logodds(e.key) + model.side_logodds(e.features))));
    }
}

TEST_CASE("one alternation from scratch is latent fit then side fit") {
    const auto data = generate(small_config(11));
    const DatasetDay& day = data.days[0];
    Hyperparameters h;
    h.order = 2;
    h.alternations = 1;
    TrainOptions opt;
    opt.seed = 4;
    const auto model = train_alternating(day, h, nullptr, opt);

    const ModelShape shape = shape_of(day.events);
    double clicks = 0.0;
    for (const auto& e : day.events) clicks += e.clicked;
    FactorizationProblem latent;
    latent.banners = shape.banners;
    latent.domains = shape.domains;
    latent.aggregates = day.aggregates;
    latent.hyper = h;
    latent.offsets = OffsetTable(logit(clicks / static_cast<double>(day.events.size())));
    const auto factors = fit(latent, init_factors(shape.banners, shape.domains, 2, h.init_scale, 4), FixedSide::kNone);
    SideProblem side;
    side.events = day.events;
    side.features = shape.features;
    side.lambda = h.lambda_lr;
    for (const auto& e : day.events) side.offsets.push_back(factors.dot(e.key));
    const auto lr = fit_lr(side, SideModel(shape.features));

    CHECK(model.factors == factors);
    CHECK(model.side.weights == lr.weights);
    CHECK(model.side.intercept == lr.intercept);
}

TEST_CASE("the LR family never touches latent factors") {
    const auto data = generate(small_config(13));
    Hyperparameters h;
    TrainOptions opt;
    opt.family = ModelFamily::kLR;
    const auto model = train_alternating(data.days[0], h, nullptr, opt);
    CHECK(model.factors.empty());
    CHECK(model.alternations_run == 1);
    for (const auto& a : data.days[0].aggregates) CHECK(model.latent_logodds(a.key()) == 0.0);
}

TEST_CASE("the LFL family uses only an intercept on the side") {
    const auto data = generate(small_config(15));
    Hyperparameters h;
    h.order = 1;
    h.alternations = 2;
    TrainOptions opt;
    opt.family = ModelFamily::kLFL;
    const auto model = train_alternating(data.days[0], h, nullptr, opt);
    CHECK(model.side.weights.empty());
    CHECK(model.factors.order() == 1);
}

TEST_CASE("down-sampled training carries the intercept correction") {
    const auto data = generate(small_config(17));
    const DatasetDay sampled = data.days[0].downsampled(10.0, 3);
    Hyperparameters h;
    h.order = 1;
    h.alternations = 1;
    const auto model = train_alternating(sampled, h, nullptr);
    CHECK(model.side.intercept_correction == doctest::Approx(std::log(sampled.keep_rate)).epsilon(1e-15));
    CHECK(sampled.keep_rate < 0.2);
}

TEST_CASE("merging days pools keep rates") {
    const auto data = generate(small_config(19));
    const DatasetDay a = data.days[0].downsampled(4.0, 1);
    const DatasetDay b = data.days[1].downsampled(2.0, 2);
    const DatasetDay days[] = {a, b};
    const DatasetDay merged = merge_days(days);
    CHECK(merged.events.size() == a.events.size() + b.events.size());
    auto negatives = [](const DatasetDay& d) {
        double n = 0.0;
        for (const auto& e : d.events) n += e.clicked ? 0.0 : 1.0;
        return n;
    };
    const double expected = (negatives(a) + negatives(b)) / (negatives(a) / a.keep_rate + negatives(b) / b.keep_rate);
    CHECK(merged.keep_rate == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("alternation traces") {
    const auto data = generate(small_config(21));
    Hyperparameters h;
    h.order = 3;
    const auto trace = evaluate_alternation_trace(data.days[0], h);
    REQUIRE(trace.size() == 7);
    for (std::size_t k = 0; k < 7; ++k) CHECK(trace[k].alternation == k + 1);

    h.alternations = 1;
    const auto single = evaluate_alternation_trace(data.days[0], h, {}, data.days[1].events);
    REQUIRE(single.size() == 1);
    const auto model = train_alternating(data.days[0], h, nullptr);
    const auto scored = score_events(model, data.days[1].events);
    CHECK(single[0].auc == auc(scored));
    CHECK(single[0].logloss == logloss(scored));
}

TEST_CASE("warm starts check family and order") {
    const auto data = generate(small_config(23));
    Hyperparameters h;
    h.order = 2;
    h.alternations = 1;
    const auto model = train_alternating(data.days[0], h, nullptr);
    TrainOptions lr;
    lr.family = ModelFamily::kLR;
    CHECK_THROWS_AS(train_alternating(data.days[1], h, &model, lr), std::invalid_argument);
    h.order = 3;
    CHECK_THROWS_AS(train_alternating(data.days[1], h, &model), std::invalid_argument);
    CHECK_THROWS_AS(train_alternating(DatasetDay{}, h, nullptr), std::invalid_argument);
}

TEST_CASE("family names") {
    for (auto f : {ModelFamily::kLR, ModelFamily::kLFL, ModelFamily::kLRLFL}) {
        CHECK(family_from_string(to_string(f)) == f);
    }
    CHECK_THROWS(family_from_string("GBDT"));
}
