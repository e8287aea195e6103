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

// Evaluation metrics: AUC, logistic loss, per-banner daily averages,
// deltas against a baseline and bootstrap confidence intervals for medians.

#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lfl {

/// Raised when a metric is undefined for the given set (e.g. AUC with a
/// single class).
class UndefinedMetric : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Parallel lists of predicted probabilities and binary labels, optionally
/// tagged with banner index and day.
struct ScoredSet {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    std::vector<std::uint32_t> banners;
    std::vector<std::int32_t> days;

    std::size_t size() const { return scores.size(); }
    void add(double score, bool label) {
        scores.push_back(score);
        labels.push_back(label ? 1 : 0);
    }
    void add(double score, bool label, std::uint32_t banner, std::int32_t day) {
        add(score, label);
        banners.push_back(banner);
        days.push_back(day);
    }
};

/// Mann-Whitney AUC with midranks for ties. Throws UndefinedMetric unless
/// both classes are present.
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels);
double auc(const ScoredSet& set);

/// Mean negative log-likelihood, probabilities clamped to [1e-12, 1 - 1e-12].
/// Throws UndefinedMetric on an empty set.
double logloss(std::span<const double> scores, std::span<const std::uint8_t> labels);
double logloss(const ScoredSet& set);

struct BannerMetrics {
    std::int32_t day = 0;
    std::uint32_t banner = 0;
    std::uint64_t clicks = 0;
    std::uint64_t views = 0;
    /// Absent when the banner has no clicks or no non-clicks that day.
    std::optional<double> auc;
    double logloss = 0.0;
};

/// Unweighted means over the banners passing a click filter on one day.
struct DailySummary {
    std::int32_t day = 0;
    std::uint64_t min_clicks = 0;
    /// NaN when no banner qualifies.
    double mean_auc = 0.0;
    double mean_logloss = 0.0;
    std::size_t auc_banners = 0;
    std::size_t logloss_banners = 0;
};

struct MetricsReport {
    std::vector<BannerMetrics> banners;
    std::vector<DailySummary> daily;

    const DailySummary* find(std::int32_t day, std::uint64_t min_clicks) const;
};

/// Per day and banner metrics, then per day and filter unweighted means.
/// A banner enters the AUC mean with at least max(min_clicks, 1) clicks and
/// one non-click; it enters the logloss mean with at least min_clicks
/// clicks, so min_clicks = 0 includes clickless banners. The set must carry
/// banner and day tags.
MetricsReport per_banner_daily(const ScoredSet& set, std::span<const std::uint64_t> min_clicks);

struct DailyDelta {
    std::int32_t day = 0;
    std::uint64_t min_clicks = 0;
    /// candidate - baseline; positive is better.
    double auc = 0.0;
    /// candidate - baseline; negative is better.
    double logloss = 0.0;
};

/// Per day and filter differences of the daily means. Throws
/// std::invalid_argument when the reports do not cover the same days and
/// filters.
std::vector<DailyDelta> relative_report(const MetricsReport& candidate, const MetricsReport& baseline);

struct BootstrapOptions {
    std::size_t samples = 5000;
    double lo = 0.05;
    double hi = 0.95;
    std::uint64_t seed = 1;
};

struct MedianInterval {
    double median = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// Linear-interpolation quantile of unsorted values.
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

/// Sample median with the [lo, hi] empirical quantiles of the medians of
/// `samples` resamples drawn with replacement. Deterministic in the seed.
/// Throws std::invalid_argument on empty input.
MedianInterval bootstrap_median_ci(std::span<const double> values, const BootstrapOptions& options = {});

using BannerNamer = std::function<std::string(std::uint32_t)>;

/// Columns: day,banner_id,n_clicks,n_views,auc,logloss,model_id.
void write_metrics_csv(std::ostream& out, const MetricsReport& report, const std::string& model_id,
                       const BannerNamer& namer = {});

/// Columns: day,model_id,filter,mean_auc,mean_logloss,delta_auc,delta_logloss,
/// ci_auc_lo,ci_auc_hi,ci_logloss_lo,ci_logloss_hi. One row per day and
/// filter, then one `median` row per filter holding the medians over days
/// and their bootstrap intervals (of the deltas when a baseline is given,
/// of the means otherwise).
void write_summary_csv(std::ostream& out, const MetricsReport& report, const std::string& model_id,
                       const std::vector<DailyDelta>* deltas, const BootstrapOptions& options = {});

}  // namespace lfl
