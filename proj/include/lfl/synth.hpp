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

// Ground-truth synthetic click logs drawn from a known combined model.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lfl/combined.hpp"
#include "lfl/config.hpp"
#include "lfl/ingest.hpp"

namespace lfl {

struct GeneratorConfig {
    std::size_t banners = 200;
    std::size_t domains = 100;
    /// True latent order K*.
    std::size_t order = 5;
    /// Standard deviation of the true interaction sum_k alpha_ik beta_jk.
    double latent_scale = 1.0;
    /// Standard deviation of the per-banner and per-domain biases.
    double bias_scale = 0.5;
    /// Categorical attributes per event, each with `attribute_values`
    /// one-of-K values, so P* = attributes * attribute_values.
    std::size_t attributes = 4;
    std::size_t attribute_values = 10;
    /// Fraction of side weights that are non-zero.
    double weight_density = 0.5;
    /// Standard deviation of the non-zero side weights.
    double weight_scale = 1.0;
    /// Probability that an attribute takes the domain's preferred value
    /// instead of a uniform draw; couples side features to dyads.
    double domain_affinity = 0.5;
    double intercept = -3.0;
    std::size_t days = 8;
    std::size_t events_per_day = 100000;
    /// Popularity of the r-th most popular banner (domain) ~ (r + 1)^-exponent.
    double popularity_exponent = 1.1;
    std::uint64_t seed = 1;

    std::size_t side_features() const { return attributes * attribute_values; }

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;

    /// Reads `key = value` pairs named like the fields above; throws
    /// std::invalid_argument naming an unknown key.
    static GeneratorConfig from_config(const KeyValueConfig& cfg);
};

struct SyntheticData {
    std::vector<DatasetDay> days;
    CombinedModel truth;
    /// Generating probability of every event, day by day, event by event.
    std::vector<std::vector<double>> probabilities;
};

SyntheticData generate(const GeneratorConfig& config);

/// Raw-log form of generated events: banner "b<i>", domain "d<j>",
/// attribute g with value v as "a<g>=v<v>".
std::vector<RawEvent> to_raw(const std::vector<EventRecord>& events, const GeneratorConfig& config);

}  // namespace lfl
