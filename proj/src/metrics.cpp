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

#include "lfl/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <tuple>

#include "lfl/config.hpp"

namespace lfl {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double mean_or_nan(const std::vector<double>& v) {
    if (v.empty()) return kNaN;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string cell(double v) { return std::isnan(v) ? std::string() : format_double(v); }

std::vector<double> finite_only(std::vector<double> v) {
    v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return std::isnan(x); }), v.end());
    return v;
}

}  // namespace

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("scores and labels differ in length");
    }
    const std::size_t n = scores.size();
    std::size_t positives = 0;
    for (const auto y : labels) positives += y ? 1 : 0;
    const std::size_t negatives = n - positives;
    if (positives == 0 || negatives == 0) {
        throw UndefinedMetric("AUC needs at least one positive and one negative");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Sum of 1-based midranks of the positives.
    double rank_sum = 0.0;
    std::size_t start = 0;
    while (start < n) {
        std::size_t end = start + 1;
        while (end < n && scores[order[end]] == scores[order[start]]) ++end;
        const double midrank = 0.5 * static_cast<double>(start + 1 + end);
        for (std::size_t k = start; k < end; ++k) {
            if (labels[order[k]]) rank_sum += midrank;
        }
        start = end;
    }
    const double p = static_cast<double>(positives);
    return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(negatives));
}

double auc(const ScoredSet& set) { return auc(set.scores, set.labels); }

double logloss(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size()) {
        throw std::invalid_argument("scores and labels differ in length");
    }
    if (scores.empty()) {
        throw UndefinedMetric("logloss of an empty set");
    }
    double total = 0.0;
    for (std::size_t n = 0; n < scores.size(); ++n) {
        const double p = std::min(std::max(scores[n], 1e-12), 1.0 - 1e-12);
        total -= labels[n] ? std::log(p) : std::log1p(-p);
    }
    return total / static_cast<double>(scores.size());
}

double logloss(const ScoredSet& set) { return logloss(set.scores, set.labels); }

const DailySummary* MetricsReport::find(std::int32_t day, std::uint64_t min_clicks) const {
    for (const auto& d : daily) {
        if (d.day == day && d.min_clicks == min_clicks) return &d;
    }
    return nullptr;
}

MetricsReport per_banner_daily(const ScoredSet& set, std::span<const std::uint64_t> min_clicks) {
    if (set.banners.size() != set.size() || set.days.size() != set.size()) {
        throw std::invalid_argument("per-banner metrics need banner and day tags on every score");
    }
    std::map<std::pair<std::int32_t, std::uint32_t>, std::vector<std::size_t>> groups;
    for (std::size_t n = 0; n < set.size(); ++n) groups[{set.days[n], set.banners[n]}].push_back(n);

    MetricsReport report;
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (const auto& [key, members] : groups) {
        scores.clear();
        labels.clear();
        BannerMetrics m;
        m.day = key.first;
        m.banner = key.second;
        for (const auto n : members) {
            scores.push_back(set.scores[n]);
            labels.push_back(set.labels[n]);
            m.clicks += set.labels[n];
        }
        m.views = members.size();
        if (m.clicks > 0 && m.clicks < m.views) m.auc = auc(scores, labels);
        m.logloss = logloss(scores, labels);
        report.banners.push_back(m);
    }

    std::map<std::int32_t, std::vector<const BannerMetrics*>> by_day;
    for (const auto& m : report.banners) by_day[m.day].push_back(&m);
    for (const auto& [day, banners] : by_day) {
        for (const auto filter : min_clicks) {
            std::vector<double> aucs, losses;
            for (const auto* m : banners) {
                if (m->auc && m->clicks >= std::max<std::uint64_t>(filter, 1)) aucs.push_back(*m->auc);
                if (m->clicks >= filter) losses.push_back(m->logloss);
            }
            DailySummary s;
            s.day = day;
            s.min_clicks = filter;
            s.mean_auc = mean_or_nan(aucs);
            s.mean_logloss = mean_or_nan(losses);
            s.auc_banners = aucs.size();
            s.logloss_banners = losses.size();
            report.daily.push_back(s);
        }
    }
    return report;
}

std::vector<DailyDelta> relative_report(const MetricsReport& candidate, const MetricsReport& baseline) {
    if (candidate.daily.size() != baseline.daily.size()) {
        throw std::invalid_argument("reports cover different days or filters");
    }
    std::vector<DailyDelta> out;
    for (const auto& c : candidate.daily) {
        const DailySummary* b = baseline.find(c.day, c.min_clicks);
        if (b == nullptr) {
            throw std::invalid_argument("baseline report has no day " + std::to_string(c.day) +
                                        " with min_clicks " + std::to_string(c.min_clicks));
        }
        out.push_back({c.day, c.min_clicks, c.mean_auc - b->mean_auc, c.mean_logloss - b->mean_logloss});
    }
    return out;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw std::invalid_argument("quantile of an empty sample");
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto below = static_cast<std::size_t>(std::floor(pos));
    const std::size_t above = std::min(below + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(below);
    return values[below] + frac * (values[above] - values[below]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

MedianInterval bootstrap_median_ci(std::span<const double> values, const BootstrapOptions& options) {
    if (values.empty()) {
        throw std::invalid_argument("bootstrap of an empty sample");
    }
    if (options.samples == 0 || !(options.lo >= 0.0 && options.lo <= options.hi && options.hi <= 1.0)) {
        throw std::invalid_argument("invalid bootstrap options");
    }
    MedianInterval out;
    out.median = median(std::vector<double>(values.begin(), values.end()));

    // Resamples are tallied as draw counts over the sorted sample, so the
    // median is found by a cumulative walk instead of a selection.
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = values.size();
    const std::size_t mid = n / 2;
    std::mt19937_64 rng(options.seed);
    std::vector<std::uint32_t> counts(n);
    std::vector<double> medians;
    medians.reserve(options.samples);
    for (std::size_t s = 0; s < options.samples; ++s) {
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t k = 0; k < n; ++k) ++counts[rng() % n];
        // Values at ranks mid - 1 and mid of the sorted resample.
        double below = 0.0;
        double at = 0.0;
        std::size_t seen = 0;
        for (std::size_t k = 0; k < n; ++k) {
            const std::size_t next = seen + counts[k];
            if (mid >= 1 && seen <= mid - 1 && mid - 1 < next) below = sorted[k];
            if (seen <= mid && mid < next) {
                at = sorted[k];
                break;
            }
            seen = next;
        }
        medians.push_back(n % 2 == 0 ? 0.5 * (below + at) : at);
    }
    out.lo = quantile(medians, options.lo);
    out.hi = quantile(std::move(medians), options.hi);
    return out;
}

void write_metrics_csv(std::ostream& out, const MetricsReport& report, const std::string& model_id,
                       const BannerNamer& namer) {
    out << "day,banner_id,n_clicks,n_views,auc,logloss,model_id\n";
    for (const auto& m : report.banners) {
        out << m.day << ',' << (namer ? namer(m.banner) : std::to_string(m.banner)) << ',' << m.clicks
            << ',' << m.views << ',' << (m.auc ? format_double(*m.auc) : std::string()) << ','
            << format_double(m.logloss) << ',' << model_id << '\n';
    }
}

void write_summary_csv(std::ostream& out, const MetricsReport& report, const std::string& model_id,
                       const std::vector<DailyDelta>* deltas, const BootstrapOptions& options) {
    out << "day,model_id,filter,mean_auc,mean_logloss,delta_auc,delta_logloss,"
           "ci_auc_lo,ci_auc_hi,ci_logloss_lo,ci_logloss_hi\n";
    auto find_delta = [deltas](std::int32_t day, std::uint64_t filter) -> const DailyDelta* {
        if (deltas == nullptr) return nullptr;
        for (const auto& d : *deltas) {
            if (d.day == day && d.min_clicks == filter) return &d;
        }
        return nullptr;
    };

    std::map<std::uint64_t, std::tuple<std::vector<double>, std::vector<double>, std::vector<double>,
                                       std::vector<double>>>
        per_filter;
    for (const auto& s : report.daily) {
        const DailyDelta* d = find_delta(s.day, s.min_clicks);
        out << s.day << ',' << model_id << ',' << s.min_clicks << ',' << cell(s.mean_auc) << ','
            << cell(s.mean_logloss) << ',' << (d ? cell(d->auc) : std::string()) << ','
            << (d ? cell(d->logloss) : std::string()) << ",,,,\n";
        auto& [aucs, losses, dauc, dloss] = per_filter[s.min_clicks];
        aucs.push_back(s.mean_auc);
        losses.push_back(s.mean_logloss);
        dauc.push_back(d ? d->auc : kNaN);
        dloss.push_back(d ? d->logloss : kNaN);
    }
    for (auto& [filter, columns] : per_filter) {
        auto& [aucs, losses, dauc, dloss] = columns;
        auto med = [](const std::vector<double>& v) {
            const auto f = finite_only(v);
            return f.empty() ? kNaN : median(f);
        };
        auto ci = [&options](const std::vector<double>& v) {
            const auto f = finite_only(v);
            if (f.empty()) return MedianInterval{kNaN, kNaN, kNaN};
            return bootstrap_median_ci(f, options);
        };
        const bool with_deltas = deltas != nullptr;
        const MedianInterval auc_ci = ci(with_deltas ? dauc : aucs);
        const MedianInterval loss_ci = ci(with_deltas ? dloss : losses);
        out << "median," << model_id << ',' << filter << ',' << cell(med(aucs)) << ',' << cell(med(losses))
            << ',' << (with_deltas ? cell(med(dauc)) : std::string()) << ','
            << (with_deltas ? cell(med(dloss)) : std::string()) << ',' << cell(auc_ci.lo) << ','
            << cell(auc_ci.hi) << ',' << cell(loss_ci.lo) << ',' << cell(loss_ci.hi) << '\n';
    }
}

}  // namespace lfl
