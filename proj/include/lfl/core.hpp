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

// Domain types shared by every module: dyads and their click/view counts,
// sparse feature vectors, bias-augmented latent factors, the explicit
// feature model and the hyperparameter bundle.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lfl {

/// Raised when input data violates a format or domain invariant.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when an optimizer or evaluation produces non-finite values.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Scalar helpers

inline double sigmoid(double z) {
    if (z >= 0.0) {
        return 1.0 / (1.0 + std::exp(-z));
    }
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + e^z) without overflow.
inline double softplus(double z) {
    return (z > 0.0 ? z : 0.0) + std::log1p(std::exp(-std::fabs(z)));
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline constexpr double kProbabilityFloor = 1e-12;

inline double clamp_probability(double p) {
    if (p < kProbabilityFloor) return kProbabilityFloor;
    if (p > 1.0 - kProbabilityFloor) return 1.0 - kProbabilityFloor;
    return p;
}

// ---------------------------------------------------------------------------
// Dyads

struct DyadKey {
    std::uint32_t banner = 0;
    std::uint32_t domain = 0;

    friend bool operator==(const DyadKey&, const DyadKey&) = default;
    friend auto operator<=>(const DyadKey&, const DyadKey&) = default;
};

struct DyadKeyHash {
    std::size_t operator()(const DyadKey& k) const noexcept {
        return std::hash<std::uint64_t>{}((std::uint64_t{k.banner} << 32) | k.domain);
    }
};

/// Click and view counts of one observed dyad.
class DyadAggregate {
public:
    DyadAggregate(DyadKey key, std::uint64_t clicks, std::uint64_t views);

    DyadKey key() const { return key_; }
    std::uint64_t clicks() const { return clicks_; }
    std::uint64_t views() const { return views_; }
    std::uint64_t non_clicks() const { return views_ - clicks_; }

    friend bool operator==(const DyadAggregate&, const DyadAggregate&) = default;

private:
    DyadKey key_;
    std::uint64_t clicks_;
    std::uint64_t views_;
};

/// Empirical click-through rate clicks / views of an observed dyad.
double empirical_ctr(const DyadAggregate& agg);

// ---------------------------------------------------------------------------
// Sparse features

struct FeatureEntry {
    std::uint32_t index = 0;
    double value = 0.0;

    friend bool operator==(const FeatureEntry&, const FeatureEntry&) = default;
};

/// Sorted, duplicate-free list of (feature index, value) pairs.
class SparseFeatureVector {
public:
    SparseFeatureVector() = default;

    /// Sorts the entries; throws DataError on duplicates, out-of-range
    /// indices or non-finite values.
    SparseFeatureVector(std::vector<FeatureEntry> entries, std::size_t dimension);

    std::span<const FeatureEntry> entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }
    std::size_t dimension() const { return dimension_; }

    /// Inner product with a dense weight vector. Indices beyond the weight
    /// vector contribute nothing.
    double dot(std::span<const double> weights) const;

    friend bool operator==(const SparseFeatureVector&, const SparseFeatureVector&) = default;

private:
    std::vector<FeatureEntry> entries_;
    std::size_t dimension_ = 0;
};

/// One impression.
struct EventRecord {
    std::int32_t day = 0;
    DyadKey key;
    bool clicked = false;
    SparseFeatureVector features;

    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

// ---------------------------------------------------------------------------
// Latent factors

/// Row factors A (banners) and column factors B (domains) of order K,
/// stored with two extra bias slots per row:
///
///   alpha_i = [alpha_i1 .. alpha_iK, alpha_i0, 1]
///   beta_j  = [beta_j1  .. beta_jK,  1,        beta_j0]
///
/// so that dot(i, j) = sum_k alpha_ik beta_jk + alpha_i0 + beta_j0.
/// The constant slots are written at construction and must stay 1.
class LatentFactors {
public:
    LatentFactors() = default;
    LatentFactors(std::size_t banners, std::size_t domains, std::size_t order);

    std::size_t order() const { return order_; }
    std::size_t width() const { return order_ + 2; }
    std::size_t banners() const { return banners_; }
    std::size_t domains() const { return domains_; }
    bool empty() const { return banners_ == 0 && domains_ == 0; }

    std::size_t row_bias_slot() const { return order_; }
    std::size_t row_constant_slot() const { return order_ + 1; }
    std::size_t col_constant_slot() const { return order_; }
    std::size_t col_bias_slot() const { return order_ + 1; }

    std::span<const double> row(std::size_t i) const { return {rows_.data() + i * width(), width()}; }
    std::span<const double> col(std::size_t j) const { return {cols_.data() + j * width(), width()}; }

    // Mutable access for optimizers; callers keep the constant slots at 1.
    std::span<double> row_mut(std::size_t i) { return {rows_.data() + i * width(), width()}; }
    std::span<double> col_mut(std::size_t j) { return {cols_.data() + j * width(), width()}; }

    /// alpha_i^T beta_j for in-range indices.
    double dot(DyadKey key) const;

    bool in_range(DyadKey key) const { return key.banner < banners_ && key.domain < domains_; }

    std::span<const double> row_data() const { return rows_; }
    std::span<const double> col_data() const { return cols_; }

    friend bool operator==(const LatentFactors&, const LatentFactors&) = default;

private:
    std::size_t banners_ = 0;
    std::size_t domains_ = 0;
    std::size_t order_ = 0;
    std::vector<double> rows_;
    std::vector<double> cols_;
};

// ---------------------------------------------------------------------------
// Explicit feature model

struct SideModel {
    std::vector<double> weights;
    double intercept = 0.0;
    /// Added to the log-odds at prediction time only; ln(keep rate) of the
    /// negative down-sampling used for training, 0 otherwise.
    double intercept_correction = 0.0;

    explicit SideModel(std::size_t features = 0) : weights(features, 0.0) {}

    /// w^T x + intercept + intercept_correction.
    double logodds(const SparseFeatureVector& x) const {
        return x.dot(weights) + intercept + intercept_correction;
    }

    std::size_t nonzero_weights() const;

    friend bool operator==(const SideModel&, const SideModel&) = default;
};

// ---------------------------------------------------------------------------
// Hyperparameters

enum class Penalty { kL1, kL2 };

enum class Solver {
    /// Deterministic full-data coordinate-descent Newton with line search.
    kBatch,
    /// Mini-batch stochastic gradient with inverse-time step decay and
    /// cumulative L1 clipping.
    kSgd,
};

struct OptimizerSettings {
    Solver solver = Solver::kBatch;
    double step_size = 0.05;
    /// Step at update t is step_size / (1 + t / decay_steps).
    double decay_steps = 1000.0;
    std::size_t max_epochs = 100;
    std::size_t batch_size = 256;
    /// Stop when the relative full-loss improvement of an epoch drops below
    /// this value.
    double tolerance = 1e-7;
    std::uint64_t seed = 1;
};

struct Hyperparameters {
    double lambda_lr = 4.0;
    double lambda_bias = 3.0;
    double lambda_latent = 1.0;
    Penalty latent_penalty = Penalty::kL2;
    std::size_t order = 0;
    std::size_t alternations = 7;
    std::size_t warm_alternations = 1;
    /// Latent coordinates start uniform in [-init_scale, init_scale] / sqrt(K).
    double init_scale = 0.01;
    OptimizerSettings latent_optimizer;
    OptimizerSettings side_optimizer;

    /// Throws std::invalid_argument when a weight is negative or
    /// alternations is zero.
    void validate() const;
};

std::string to_string(Penalty p);
Penalty penalty_from_string(const std::string& s);
std::string to_string(Solver s);
Solver solver_from_string(const std::string& s);

}  // namespace lfl
