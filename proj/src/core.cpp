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

#include "lfl/core.hpp"

#include <algorithm>
#include <string>

namespace lfl {

DyadAggregate::DyadAggregate(DyadKey key, std::uint64_t clicks, std::uint64_t views)
    : key_(key), clicks_(clicks), views_(views) {
    if (views == 0) {
        throw DataError("dyad aggregate with zero views");
    }
    if (clicks > views) {
        throw DataError("dyad aggregate with more clicks than views");
    }
}

double empirical_ctr(const DyadAggregate& agg) {
    return static_cast<double>(agg.clicks()) / static_cast<double>(agg.views());
}

SparseFeatureVector::SparseFeatureVector(std::vector<FeatureEntry> entries, std::size_t dimension)
    : entries_(std::move(entries)), dimension_(dimension) {
    std::sort(entries_.begin(), entries_.end(),
              [](const FeatureEntry& a, const FeatureEntry& b) { return a.index < b.index; });
    for (std::size_t n = 0; n < entries_.size(); ++n) {
        if (entries_[n].index >= dimension_) {
            throw DataError("feature index " + std::to_string(entries_[n].index) +
                            " out of range for dimension " + std::to_string(dimension_));
        }
        if (!std::isfinite(entries_[n].value)) {
            throw DataError("non-finite feature value at index " + std::to_string(entries_[n].index));
        }
        if (n > 0 && entries_[n - 1].index == entries_[n].index) {
            throw DataError("duplicate feature index " + std::to_string(entries_[n].index));
        }
    }
}

double SparseFeatureVector::dot(std::span<const double> weights) const {
    double s = 0.0;
    for (const auto& e : entries_) {
        if (e.index < weights.size()) {
            s += weights[e.index] * e.value;
        }
    }
    return s;
}

LatentFactors::LatentFactors(std::size_t banners, std::size_t domains, std::size_t order)
    : banners_(banners), domains_(domains), order_(order),
      rows_(banners * (order + 2), 0.0), cols_(domains * (order + 2), 0.0) {
    for (std::size_t i = 0; i < banners_; ++i) {
        rows_[i * width() + row_constant_slot()] = 1.0;
    }
    for (std::size_t j = 0; j < domains_; ++j) {
        cols_[j * width() + col_constant_slot()] = 1.0;
    }
}

double LatentFactors::dot(DyadKey key) const {
    const double* a = rows_.data() + key.banner * width();
    const double* b = cols_.data() + key.domain * width();
    double s = 0.0;
    for (std::size_t k = 0; k < width(); ++k) {
        s += a[k] * b[k];
    }
    return s;
}

std::size_t SideModel::nonzero_weights() const {
    return static_cast<std::size_t>(
        std::count_if(weights.begin(), weights.end(), [](double w) { return w != 0.0; }));
}

void Hyperparameters::validate() const {
    if (!(lambda_lr >= 0.0) || !(lambda_bias >= 0.0) || !(lambda_latent >= 0.0)) {
        throw std::invalid_argument("regularization weights must be non-negative");
    }
    if (alternations == 0 || warm_alternations == 0) {
        throw std::invalid_argument("alternations must be at least 1");
    }
    for (const auto* opt : {&latent_optimizer, &side_optimizer}) {
        if (!(opt->step_size > 0.0) || opt->batch_size == 0 || opt->max_epochs == 0) {
            throw std::invalid_argument("optimizer settings must be positive");
        }
    }
}

std::string to_string(Penalty p) { return p == Penalty::kL1 ? "L1" : "L2"; }

Penalty penalty_from_string(const std::string& s) {
    if (s == "L1" || s == "l1") return Penalty::kL1;
    if (s == "L2" || s == "l2") return Penalty::kL2;
    throw std::invalid_argument("unknown penalty '" + s + "' (expected L1 or L2)");
}

std::string to_string(Solver s) { return s == Solver::kBatch ? "batch" : "sgd"; }

Solver solver_from_string(const std::string& s) {
    if (s == "batch") return Solver::kBatch;
    if (s == "sgd") return Solver::kSgd;
    throw std::invalid_argument("unknown solver '" + s + "' (expected batch or sgd)");
}

}  // namespace lfl
