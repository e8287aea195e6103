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

#include "lfl/sidemodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "lfl/detail/optim.hpp"

namespace lfl {

namespace {

double event_nll(double eta, bool clicked) { return softplus(eta) - (clicked ? eta : 0.0); }

void check_divergence(double loss) {
    if (!std::isfinite(loss)) {
        throw NumericalError("side model fit diverged (non-finite loss); use a smaller step size");
    }
}

/// Column-major copy of the event features.
struct Columns {
    std::vector<std::size_t> start;
    std::vector<std::size_t> rows;
    std::vector<double> values;

    Columns(std::span<const EventRecord> events, std::size_t features) : start(features + 1, 0) {
        for (const auto& ev : events) {
            for (const auto& e : ev.features.entries()) ++start[e.index + 1];
        }
        std::partial_sum(start.begin(), start.end(), start.begin());
        rows.resize(start.back());
        values.resize(start.back());
        std::vector<std::size_t> fill(start.begin(), start.end() - 1);
        for (std::size_t d = 0; d < events.size(); ++d) {
            for (const auto& e : events[d].features.entries()) {
                rows[fill[e.index]] = d;
                values[fill[e.index]++] = e.value;
            }
        }
    }
};

/// Proximal Newton over all weights at once: coordinate descent on the
/// quadratic model of the smooth loss (with the L1 term kept exact), then a
/// backtracking line search along the resulting direction.
class NewtonSolver {
public:
    NewtonSolver(const SideProblem& problem, SideModel& model)
        : problem_(problem), model_(model), columns_(problem.events, problem.features),
          eta_(problem.events.size()), curvature_(problem.events.size()), moved_(problem.events.size()),
          grad_(problem.features), dir_(problem.features) {
        for (std::size_t d = 0; d < eta_.size(); ++d) {
            eta_[d] = model_.logodds(problem.events[d].features) + problem.offsets[d];
        }
        // Features nobody uses only see the penalty.
        for (std::size_t j = 0; j < problem.features; ++j) {
            if (columns_.start[j] == columns_.start[j + 1] && problem.lambda > 0.0) model_.weights[j] = 0.0;
        }
    }

    /// One outer iteration; returns false when no descent direction exists.
    bool step() {
        const double lambda = problem_.lambda;
        const std::size_t count = eta_.size();
        double grad_intercept = 0.0;
        double hess_intercept = 0.0;
        for (std::size_t d = 0; d < count; ++d) {
            const double p = sigmoid(eta_[d]);
            const double r = p - (problem_.events[d].clicked ? 1.0 : 0.0);
            eta_residual(d) = r;
            curvature_[d] = std::max(p * (1.0 - p), 1e-12);
            grad_intercept += r;
            hess_intercept += curvature_[d];
        }
        for (std::size_t j = 0; j < problem_.features; ++j) {
            double g = 0.0;
            for (std::size_t n = columns_.start[j]; n < columns_.start[j + 1]; ++n) {
                g += residual_[columns_.rows[n]] * columns_.values[n];
            }
            grad_[j] = g;
        }

        std::fill(dir_.begin(), dir_.end(), 0.0);
        std::fill(moved_.begin(), moved_.end(), 0.0);
        double dir_intercept = 0.0;
        for (int pass = 0; pass < kInnerPasses; ++pass) {
            double biggest = 0.0;
            {
                // Intercept: every event has value 1.
                double g = grad_intercept;
                for (std::size_t d = 0; d < count; ++d) g += curvature_[d] * moved_[d];
                const double z = -g / hess_intercept;
                if (std::isfinite(z) && z != 0.0) {
                    dir_intercept += z;
                    for (auto& v : moved_) v += z;
                    biggest = std::max(biggest, std::fabs(z));
                }
            }
            for (std::size_t j = 0; j < problem_.features; ++j) {
                const std::size_t begin = columns_.start[j];
                const std::size_t end = columns_.start[j + 1];
                if (begin == end) continue;
                // Skip coordinates pinned at zero on the first pass.
                if (pass == 0 && model_.weights[j] == 0.0 && std::fabs(grad_[j]) < lambda) continue;
                double g = grad_[j];
                double h = 1e-12;
                for (std::size_t n = begin; n < end; ++n) {
                    const std::size_t d = columns_.rows[n];
                    const double v = columns_.values[n];
                    g += curvature_[d] * moved_[d] * v;
                    h += curvature_[d] * v * v;
                }
                const double z = detail::newton_direction(model_.weights[j] + dir_[j], g, h, lambda);
                if (z == 0.0 || !std::isfinite(z)) continue;
                dir_[j] += z;
                for (std::size_t n = begin; n < end; ++n) moved_[columns_.rows[n]] += z * columns_.values[n];
                biggest = std::max(biggest, std::fabs(z));
            }
            if (biggest < 1e-10) break;
        }

        double predicted = grad_intercept * dir_intercept;
        for (std::size_t j = 0; j < problem_.features; ++j) {
            if (dir_[j] == 0.0) continue;
            const double w = model_.weights[j];
            predicted += grad_[j] * dir_[j] + lambda * (std::fabs(w + dir_[j]) - std::fabs(w));
        }
        if (!(predicted < 0.0)) return false;

        double t = 1.0;
        for (int k = 0; k < detail::kMaxLineSearchSteps; ++k, t *= 0.5) {
            double change = 0.0;
            for (std::size_t j = 0; j < problem_.features; ++j) {
                if (dir_[j] == 0.0) continue;
                const double w = model_.weights[j];
                change += lambda * (std::fabs(w + t * dir_[j]) - std::fabs(w));
            }
            for (std::size_t d = 0; d < count; ++d) {
                if (moved_[d] == 0.0) continue;
                const bool y = problem_.events[d].clicked;
                change += event_nll(eta_[d] + t * moved_[d], y) - event_nll(eta_[d], y);
            }
            if (change <= detail::kArmijo * t * predicted) {
                model_.intercept += t * dir_intercept;
                for (std::size_t j = 0; j < problem_.features; ++j) {
                    if (dir_[j] == 0.0) continue;
                    const double next = model_.weights[j] + t * dir_[j];
                    // A full step that clips to zero lands on exactly zero.
                    model_.weights[j] = (t == 1.0 && next == 0.0) ? 0.0 : next;
                }
                for (std::size_t d = 0; d < count; ++d) eta_[d] += t * moved_[d];
                return true;
            }
        }
        return false;
    }

private:
    static constexpr int kInnerPasses = 20;

    double& eta_residual(std::size_t d) {
        if (residual_.size() != eta_.size()) residual_.resize(eta_.size());
        return residual_[d];
    }

    const SideProblem& problem_;
    SideModel& model_;
    Columns columns_;
    std::vector<double> eta_;
    std::vector<double> residual_;
    std::vector<double> curvature_;
    /// X * direction, per event.
    std::vector<double> moved_;
    std::vector<double> grad_;
    std::vector<double> dir_;
};

void fit_batch(const SideProblem& problem, SideModel& model, SideFitReport& report) {
    NewtonSolver solver(problem, model);
    double previous = report.initial_loss;
    for (std::size_t epoch = 0; epoch < problem.optimizer.max_epochs; ++epoch) {
        const bool moved = solver.step();
        const double current = lr_loss(problem, model);
        check_divergence(current);
        report.loss_trace.push_back(current);
        report.epochs = epoch + 1;
        if (!moved || detail::converged(previous, current, problem.optimizer.tolerance)) {
            report.converged = true;
            return;
        }
        previous = current;
    }
}

SideModel fit_sgd(const SideProblem& problem, SideModel model, SideFitReport& report) {
    const auto& opt = problem.optimizer;
    const std::size_t count = problem.events.size();
    if (count == 0) return model;
    const double per_event_lambda = problem.lambda / static_cast<double>(count);

    detail::CumulativeL1 cumulative(problem.features);
    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(opt.seed);
    std::vector<double> grad(problem.features, 0.0);
    std::vector<std::uint32_t> touched;
    std::vector<char> is_touched(problem.features, 0);

    SideModel best = model;
    double best_loss = report.initial_loss;
    double previous = report.initial_loss;
    std::size_t updates = 0;
    for (std::size_t epoch = 0; epoch < opt.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t begin = 0; begin < count; begin += opt.batch_size) {
            const std::size_t end = std::min(count, begin + opt.batch_size);
            const double scale = 1.0 / static_cast<double>(end - begin);
            const double step = detail::step_at(opt, updates++);
            double grad_intercept = 0.0;
            for (std::size_t b = begin; b < end; ++b) {
                const std::size_t d = order[b];
                const auto& ev = problem.events[d];
                const double r =
                    scale * (predict_lr(model, ev.features, problem.offsets[d]) - (ev.clicked ? 1.0 : 0.0));
                grad_intercept += r;
                for (const auto& e : ev.features.entries()) {
                    if (!is_touched[e.index]) {
                        is_touched[e.index] = 1;
                        touched.push_back(e.index);
                    }
                    grad[e.index] += r * e.value;
                }
            }
            model.intercept -= step * grad_intercept;
            cumulative.accrue(step * per_event_lambda);
            for (const auto k : touched) {
                model.weights[k] -= step * grad[k];
                cumulative.apply(k, model.weights[k]);
                grad[k] = 0.0;
                is_touched[k] = 0;
            }
            touched.clear();
        }
        const double current = lr_loss(problem, model);
        check_divergence(current);
        report.loss_trace.push_back(current);
        report.epochs = epoch + 1;
        if (current < best_loss) {
            best_loss = current;
            best = model;
        }
        if (current <= previous && detail::converged(previous, current, opt.tolerance)) {
            report.converged = true;
            break;
        }
        previous = current;
    }
    return best;
}

}  // namespace

void SideProblem::validate() const {
    if (offsets.size() != events.size()) {
        throw DataError("side problem needs one offset per event (" + std::to_string(offsets.size()) +
                        " offsets, " + std::to_string(events.size()) + " events)");
    }
    for (std::size_t d = 0; d < events.size(); ++d) {
        if (!std::isfinite(offsets[d])) {
            throw DataError("non-finite offset for event " + std::to_string(d));
        }
        const auto entries = events[d].features.entries();
        if (!entries.empty() && entries.back().index >= features) {
            throw DataError("event " + std::to_string(d) + " has feature index " +
                            std::to_string(entries.back().index) + " >= " + std::to_string(features));
        }
    }
    if (!(lambda >= 0.0)) {
        throw std::invalid_argument("lambda must be non-negative");
    }
}

double predict_lr(const SideModel& model, const SparseFeatureVector& x, double offset) {
    return sigmoid(model.logodds(x) + offset);
}

double lr_loss(const SideProblem& problem, const SideModel& model) {
    double total = 0.0;
    for (std::size_t d = 0; d < problem.events.size(); ++d) {
        const auto& ev = problem.events[d];
        total += event_nll(model.logodds(ev.features) + problem.offsets[d], ev.clicked);
    }
    double l1 = 0.0;
    for (const double w : model.weights) l1 += std::fabs(w);
    return total + problem.lambda * l1;
}

SideGradient lr_gradient(const SideProblem& problem, const SideModel& model) {
    SideGradient g{std::vector<double>(model.weights.size(), 0.0), 0.0};
    for (std::size_t d = 0; d < problem.events.size(); ++d) {
        const auto& ev = problem.events[d];
        const double r = predict_lr(model, ev.features, problem.offsets[d]) - (ev.clicked ? 1.0 : 0.0);
        g.intercept += r;
        for (const auto& e : ev.features.entries()) g.weights[e.index] += r * e.value;
    }
    return g;
}

SideModel fit_lr(const SideProblem& problem, const SideModel& init, SideFitReport* report) {
    problem.validate();
    if (init.weights.size() != problem.features) {
        throw std::invalid_argument("initial side model has " + std::to_string(init.weights.size()) +
                                    " weights, problem has " + std::to_string(problem.features) +
                                    " features");
    }
    SideFitReport local;
    SideFitReport& rep = report ? *report : local;
    rep = SideFitReport{};
    rep.initial_loss = lr_loss(problem, init);
    check_divergence(rep.initial_loss);

    SideModel model = init;
    if (problem.optimizer.solver == Solver::kBatch) {
        fit_batch(problem, model, rep);
    } else {
        model = fit_sgd(problem, std::move(model), rep);
    }
    rep.final_loss = lr_loss(problem, model);
    if (rep.final_loss > rep.initial_loss) {
        rep.final_loss = rep.initial_loss;
        return init;
    }
    return model;
}

OffsetTable dyad_avg_prediction(const SideModel& model,
                                const std::map<DyadKey, std::vector<SparseFeatureVector>>& groups) {
    OffsetTable table;
    for (const auto& [key, vectors] : groups) {
        if (vectors.empty()) {
            throw std::invalid_argument("empty feature group for a dyad");
        }
        double sum = 0.0;
        for (const auto& x : vectors) sum += predict_lr(model, x, 0.0);
        const double mean = clamp_probability(sum / static_cast<double>(vectors.size()));
        table.set(key, logit(mean));
    }
    return table;
}

OffsetTable dyad_avg_prediction(const SideModel& model, std::span<const EventRecord> events,
                                const DyadIndexGroups& groups) {
    OffsetTable table;
    for (std::size_t g = 0; g < groups.keys.size(); ++g) {
        const auto& members = groups.members[g];
        if (members.empty()) {
            throw std::invalid_argument("empty feature group for a dyad");
        }
        double sum = 0.0;
        for (const auto d : members) sum += predict_lr(model, events[d].features, 0.0);
        const double mean = clamp_probability(sum / static_cast<double>(members.size()));
        table.set(groups.keys[g], logit(mean));
    }
    return table;
}

double intercept_correction(double keep_rate) {
    if (!(keep_rate > 0.0) || keep_rate > 1.0) {
        throw std::invalid_argument("keep rate must lie in (0, 1]");
    }
    return std::log(keep_rate);
}

}  // namespace lfl
