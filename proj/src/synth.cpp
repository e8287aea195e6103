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

#include "lfl/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace lfl {

namespace {

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Power-law popularity over a random permutation of the entities.
std::discrete_distribution<std::size_t> popularity(std::size_t count, double exponent, std::mt19937_64& rng) {
    std::vector<std::size_t> rank(count);
    std::iota(rank.begin(), rank.end(), 0);
    std::shuffle(rank.begin(), rank.end(), rng);
    std::vector<double> weights(count);
    for (std::size_t i = 0; i < count; ++i) {
        weights[i] = std::pow(static_cast<double>(rank[i] + 1), -exponent);
    }
    return std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
}

}  // namespace

void GeneratorConfig::validate() const {
    auto positive = [](std::size_t v, const char* name) {
        if (v == 0) throw std::invalid_argument(std::string("generator config: ") + name + " must be positive");
    };
    positive(banners, "banners");
    positive(domains, "domains");
    positive(attributes, "attributes");
    positive(attribute_values, "attribute_values");
    positive(days, "days");
    positive(events_per_day, "events_per_day");
    auto finite = [](double v, const char* name) {
        if (!std::isfinite(v)) throw std::invalid_argument(std::string("generator config: ") + name + " must be finite");
    };
    finite(latent_scale, "latent_scale");
    finite(bias_scale, "bias_scale");
    finite(weight_scale, "weight_scale");
    finite(intercept, "intercept");
    finite(popularity_exponent, "popularity_exponent");
    if (!(weight_density >= 0.0 && weight_density <= 1.0)) {
        throw std::invalid_argument("generator config: weight_density must lie in [0, 1]");
    }
    if (!(domain_affinity >= 0.0 && domain_affinity <= 1.0)) {
        throw std::invalid_argument("generator config: domain_affinity must lie in [0, 1]");
    }
    if (latent_scale < 0.0 || bias_scale < 0.0 || weight_scale < 0.0) {
        throw std::invalid_argument("generator config: scales must be non-negative");
    }
}

GeneratorConfig GeneratorConfig::from_config(const KeyValueConfig& cfg) {
    cfg.require_known({"banners", "domains", "order", "latent_scale", "bias_scale", "attributes",
                       "attribute_values", "weight_density", "weight_scale", "domain_affinity", "intercept",
                       "days", "events_per_day", "popularity_exponent", "seed"});
    GeneratorConfig c;
    c.banners = cfg.get_uint("banners", c.banners);
    c.domains = cfg.get_uint("domains", c.domains);
    c.order = cfg.get_uint("order", c.order);
    c.latent_scale = cfg.get_double("latent_scale", c.latent_scale);
    c.bias_scale = cfg.get_double("bias_scale", c.bias_scale);
    c.attributes = cfg.get_uint("attributes", c.attributes);
    c.attribute_values = cfg.get_uint("attribute_values", c.attribute_values);
    c.weight_density = cfg.get_double("weight_density", c.weight_density);
    c.weight_scale = cfg.get_double("weight_scale", c.weight_scale);
    c.domain_affinity = cfg.get_double("domain_affinity", c.domain_affinity);
    c.intercept = cfg.get_double("intercept", c.intercept);
    c.days = cfg.get_uint("days", c.days);
    c.events_per_day = cfg.get_uint("events_per_day", c.events_per_day);
    c.popularity_exponent = cfg.get_double("popularity_exponent", c.popularity_exponent);
    c.seed = cfg.get_uint("seed", c.seed);
    c.validate();
    return c;
}

SyntheticData generate(const GeneratorConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    SyntheticData out;
    CombinedModel& truth = out.truth;
    truth.family = ModelFamily::kLRLFL;
    truth.factors = LatentFactors(config.banners, config.domains, config.order);
    const double coord_scale =
        config.order > 0 ? std::sqrt(config.latent_scale / std::sqrt(static_cast<double>(config.order))) : 0.0;
    for (std::size_t i = 0; i < config.banners; ++i) {
        auto r = truth.factors.row_mut(i);
        for (std::size_t k = 0; k < config.order; ++k) r[k] = coord_scale * normal(rng);
        r[truth.factors.row_bias_slot()] = config.bias_scale * normal(rng);
    }
    for (std::size_t j = 0; j < config.domains; ++j) {
        auto c = truth.factors.col_mut(j);
        for (std::size_t k = 0; k < config.order; ++k) c[k] = coord_scale * normal(rng);
        c[truth.factors.col_bias_slot()] = config.bias_scale * normal(rng);
    }
    truth.trained_banners.assign(config.banners, 1);
    truth.trained_domains.assign(config.domains, 1);

    const std::size_t features = config.side_features();
    truth.side = SideModel(features);
    truth.side.intercept = config.intercept;
    for (auto& w : truth.side.weights) {
        const bool active = uniform01(rng) < config.weight_density;
        const double value = config.weight_scale * normal(rng);
        w = active ? value : 0.0;
    }

    std::vector<std::vector<std::uint32_t>> preferred(config.domains,
                                                      std::vector<std::uint32_t>(config.attributes));
    for (auto& prefs : preferred) {
        for (auto& v : prefs) v = static_cast<std::uint32_t>(rng() % config.attribute_values);
    }

    auto banner_dist = popularity(config.banners, config.popularity_exponent, rng);
    auto domain_dist = popularity(config.domains, config.popularity_exponent, rng);

    out.days.reserve(config.days);
    out.probabilities.resize(config.days);
    for (std::size_t day = 0; day < config.days; ++day) {
        std::vector<EventRecord> events;
        events.reserve(config.events_per_day);
        auto& probs = out.probabilities[day];
        probs.reserve(config.events_per_day);
        for (std::size_t n = 0; n < config.events_per_day; ++n) {
            EventRecord ev;
            ev.day = static_cast<std::int32_t>(day);
            ev.key = DyadKey{static_cast<std::uint32_t>(banner_dist(rng)),
                             static_cast<std::uint32_t>(domain_dist(rng))};
            std::vector<FeatureEntry> entries;
            entries.reserve(config.attributes);
            for (std::size_t g = 0; g < config.attributes; ++g) {
                const auto value = uniform01(rng) < config.domain_affinity
                                       ? preferred[ev.key.domain][g]
                                       : static_cast<std::uint32_t>(rng() % config.attribute_values);
                entries.push_back({static_cast<std::uint32_t>(g * config.attribute_values + value), 1.0});
            }
            ev.features = SparseFeatureVector(std::move(entries), features);
            const double p = predict(truth, ev.key, ev.features);
            ev.clicked = uniform01(rng) < p;
            probs.push_back(p);
            events.push_back(std::move(ev));
        }
        out.days.push_back(DatasetDay::from_events(static_cast<std::int32_t>(day), std::move(events)));
    }
    return out;
}

std::vector<RawEvent> to_raw(const std::vector<EventRecord>& events, const GeneratorConfig& config) {
    std::vector<RawEvent> out;
    out.reserve(events.size());
    for (const auto& ev : events) {
        RawEvent raw;
        raw.day = ev.day;
        raw.banner = "b" + std::to_string(ev.key.banner);
        raw.domain = "d" + std::to_string(ev.key.domain);
        raw.clicked = ev.clicked;
        for (const auto& e : ev.features.entries()) {
            raw.attributes.emplace_back("a" + std::to_string(e.index / config.attribute_values),
                                        "v" + std::to_string(e.index % config.attribute_values));
        }
        out.push_back(std::move(raw));
    }
    return out;
}

}  // namespace lfl
