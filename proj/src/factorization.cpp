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

#include "lfl/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "lfl/detail/optim.hpp"

namespace lfl {

namespace {

std::string describe(DyadKey key) {
    return "(" + std::to_string(key.banner) + ", " + std::to_string(key.domain) + ")";
}

/// Negative log-likelihood of one dyad with log-odds eta:
/// V log(1 + e^eta) - C eta.
double dyad_nll(double eta, double clicks, double views) {
    return views * softplus(eta) - clicks * eta;
}

bool is_bias_slot(const LatentFactors& f, bool row_side, std::size_t s) {
    return s == (row_side ? f.row_bias_slot() : f.col_bias_slot());
}

bool is_constant_slot(const LatentFactors& f, bool row_side, std::size_t s) {
    return s == (row_side ? f.row_constant_slot() : f.col_constant_slot());
}

double slot_lambda(const LatentFactors& f, const Hyperparameters& h, bool row_side, std::size_t s) {
    return is_bias_slot(f, row_side, s) ? h.lambda_bias : h.lambda_latent;
}

double slot_penalty(double x, double lambda, Penalty p) {
    return p == Penalty::kL2 ? lambda * x * x : lambda * std::fabs(x);
}

/// Adjacency between factor rows (or columns) and the aggregates touching
/// them, in CSR form.
struct Adjacency {
    std::vector<std::size_t> start;
    std::vector<std::size_t> items;

    Adjacency(std::size_t n, const std::vector<DyadAggregate>& aggs, bool by_row) : start(n + 1, 0) {
        for (const auto& a : aggs) ++start[(by_row ? a.key().banner : a.key().domain) + 1];
        std::partial_sum(start.begin(), start.end(), start.begin());
        items.resize(aggs.size());
        std::vector<std::size_t> fill(start.begin(), start.end() - 1);
        for (std::size_t n2 = 0; n2 < aggs.size(); ++n2) {
            const auto owner = by_row ? aggs[n2].key().banner : aggs[n2].key().domain;
            items[fill[owner]++] = n2;
        }
    }

    std::size_t degree(std::size_t i) const { return start[i + 1] - start[i]; }
};

/// Block proximal Newton: every row (or column) in turn takes one Newton
/// step on its own convex subproblem, with the L1 term handled by
/// coordinate descent on the quadratic model and a backtracking line search
/// on the true subproblem.
class BatchSolver {
public:
    BatchSolver(const FactorizationProblem& problem, LatentFactors& f)
        : problem_(problem), hyper_(problem.hyper), f_(f),
          rows_adj_(f.banners(), problem.aggregates, true),
          cols_adj_(f.domains(), problem.aggregates, false) {
        const auto& aggs = problem.aggregates;
        clicks_.resize(aggs.size());
        views_.resize(aggs.size());
        offsets_.resize(aggs.size());
        eta_.resize(aggs.size());
        for (std::size_t n = 0; n < aggs.size(); ++n) {
            clicks_[n] = static_cast<double>(aggs[n].clicks());
            views_[n] = static_cast<double>(aggs[n].views());
            offsets_[n] = problem.offsets.get(aggs[n].key());
        }
        refresh_eta();
    }

    void refresh_eta() {
        const auto& aggs = problem_.aggregates;
        for (std::size_t n = 0; n < aggs.size(); ++n) eta_[n] = f_.dot(aggs[n].key()) + offsets_[n];
    }

    void sweep_side(bool row_side) {
        const std::size_t count = row_side ? f_.banners() : f_.domains();
        for (std::size_t i = 0; i < count; ++i) {
            if ((row_side ? rows_adj_ : cols_adj_).degree(i) > 0) update_block(row_side, i);
        }
    }

private:
    void update_block(bool row_side, std::size_t i) {
        const Adjacency& adj = row_side ? rows_adj_ : cols_adj_;
        const auto& aggs = problem_.aggregates;
        const std::size_t width = f_.width();
        const std::size_t constant = row_side ? f_.row_constant_slot() : f_.col_constant_slot();
        const bool l1 = hyper_.latent_penalty == Penalty::kL1;
        auto x = row_side ? f_.row_mut(i) : f_.col_mut(i);

        // Free slots in order; m = width - 1.
        slots_.clear();
        for (std::size_t s = 0; s < width; ++s) {
            if (s != constant) slots_.push_back(s);
        }
        const std::size_t m = slots_.size();
        grad_.assign(m, 0.0);
        hess_.assign(m * m, 0.0);
        lambda_.resize(m);
        for (std::size_t a = 0; a < m; ++a) lambda_[a] = slot_lambda(f_, hyper_, row_side, slots_[a]);

        const std::size_t degree = adj.degree(i);
        partner_.resize(degree * m);
        for (std::size_t e = adj.start[i], k = 0; e < adj.start[i + 1]; ++e, ++k) {
            const std::size_t n = adj.items[e];
            const DyadKey key = aggs[n].key();
            const auto other = row_side ? f_.col(key.domain) : f_.row(key.banner);
            double* b = partner_.data() + k * m;
            for (std::size_t a = 0; a < m; ++a) b[a] = other[slots_[a]];
            const double p = sigmoid(eta_[n]);
            const double r = views_[n] * p - clicks_[n];
            const double w = views_[n] * p * (1.0 - p);
            for (std::size_t a = 0; a < m; ++a) {
                grad_[a] += r * b[a];
                const double wb = w * b[a];
                for (std::size_t c = 0; c <= a; ++c) hess_[a * m + c] += wb * b[c];
            }
        }
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t c = 0; c < a; ++c) hess_[c * m + a] = hess_[a * m + c];
            if (!l1) {
                grad_[a] += 2.0 * lambda_[a] * x[slots_[a]];
                hess_[a * m + a] += 2.0 * lambda_[a];
            }
            hess_[a * m + a] += 1e-10;
        }

        // Coordinate descent on the quadratic model for the direction d.
        dir_.assign(m, 0.0);
        hd_.assign(m, 0.0);
        for (int pass = 0; pass < 50; ++pass) {
            double biggest = 0.0;
            for (std::size_t a = 0; a < m; ++a) {
                const double h = hess_[a * m + a];
                const double g = grad_[a] + hd_[a];
                const double z = detail::newton_direction(x[slots_[a]] + dir_[a], g, h, l1 ? lambda_[a] : 0.0);
                if (z == 0.0) continue;
                dir_[a] += z;
                for (std::size_t c = 0; c < m; ++c) hd_[c] += z * hess_[c * m + a];
                biggest = std::max(biggest, std::fabs(z));
            }
            if (biggest < 1e-12) break;
        }

        double predicted = 0.0;
        double penalty_now = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            predicted += grad_[a] * dir_[a];
            penalty_now += slot_penalty(x[slots_[a]], lambda_[a], hyper_.latent_penalty);
            if (l1) predicted += slot_penalty(x[slots_[a]] + dir_[a], lambda_[a], Penalty::kL1);
        }
        if (l1) predicted -= penalty_now;
        if (!(predicted < 0.0)) return;

        delta_.resize(degree);
        for (std::size_t k = 0; k < degree; ++k) {
            double s = 0.0;
            for (std::size_t a = 0; a < m; ++a) s += dir_[a] * partner_[k * m + a];
            delta_[k] = s;
        }
        double t = 1.0;
        for (int step = 0; step < detail::kMaxLineSearchSteps; ++step, t *= 0.5) {
            double change = -penalty_now;
            for (std::size_t a = 0; a < m; ++a) {
                change += slot_penalty(x[slots_[a]] + t * dir_[a], lambda_[a], hyper_.latent_penalty);
            }
            for (std::size_t e = adj.start[i], k = 0; e < adj.start[i + 1]; ++e, ++k) {
                const std::size_t n = adj.items[e];
                change += dyad_nll(eta_[n] + t * delta_[k], clicks_[n], views_[n]) -
                          dyad_nll(eta_[n], clicks_[n], views_[n]);
            }
            if (change <= detail::kArmijo * t * predicted) {
                for (std::size_t a = 0; a < m; ++a) {
                    const double next = x[slots_[a]] + t * dir_[a];
                    // A full step that clips to zero lands on exactly zero.
                    x[slots_[a]] = (t == 1.0 && next == 0.0) ? 0.0 : next;
                }
                for (std::size_t e = adj.start[i], k = 0; e < adj.start[i + 1]; ++e, ++k) {
                    eta_[adj.items[e]] += t * delta_[k];
                }
                return;
            }
        }
    }

    const FactorizationProblem& problem_;
    const Hyperparameters& hyper_;
    LatentFactors& f_;
    Adjacency rows_adj_;
    Adjacency cols_adj_;
    std::vector<double> clicks_;
    std::vector<double> views_;
    std::vector<double> offsets_;
    std::vector<double> eta_;
    std::vector<std::size_t> slots_;
    std::vector<double> grad_, hess_, lambda_, partner_, dir_, hd_, delta_;
};

void zero_unobserved(LatentFactors& f, const FactorizationProblem& problem, FixedSide fixed) {
    std::vector<char> row_seen(f.banners(), 0);
    std::vector<char> col_seen(f.domains(), 0);
    for (const auto& a : problem.aggregates) {
        row_seen[a.key().banner] = 1;
        col_seen[a.key().domain] = 1;
    }
    if (fixed != FixedSide::kRows) {
        for (std::size_t i = 0; i < f.banners(); ++i) {
            if (row_seen[i]) continue;
            auto r = f.row_mut(i);
            for (std::size_t s = 0; s < f.width(); ++s) {
                if (s != f.row_constant_slot()) r[s] = 0.0;
            }
        }
    }
    if (fixed != FixedSide::kCols) {
        for (std::size_t j = 0; j < f.domains(); ++j) {
            if (col_seen[j]) continue;
            auto c = f.col_mut(j);
            for (std::size_t s = 0; s < f.width(); ++s) {
                if (s != f.col_constant_slot()) c[s] = 0.0;
            }
        }
    }
}

void check_divergence(double loss) {
    if (!std::isfinite(loss)) {
        throw NumericalError("latent factor fit diverged (non-finite loss); use a smaller step size");
    }
}

LatentFactors fit_batch(const FactorizationProblem& problem, LatentFactors f, FixedSide fixed,
                        FitReport& report) {
    BatchSolver solver(problem, f);
    double previous = report.initial_loss;
    for (std::size_t epoch = 0; epoch < problem.hyper.latent_optimizer.max_epochs; ++epoch) {
        if (fixed != FixedSide::kRows) solver.sweep_side(true);
        if (fixed != FixedSide::kCols) solver.sweep_side(false);
        solver.refresh_eta();
        const double current = loss_cwf(problem, f);
        check_divergence(current);
        report.loss_trace.push_back(current);
        report.epochs = epoch + 1;
        if (detail::converged(previous, current, problem.hyper.latent_optimizer.tolerance)) {
            report.converged = true;
            break;
        }
        previous = current;
    }
    return f;
}

LatentFactors fit_sgd(const FactorizationProblem& problem, LatentFactors f, FixedSide fixed,
                      FitReport& report) {
    const auto& opt = problem.hyper.latent_optimizer;
    const auto& hyper = problem.hyper;
    const auto& aggs = problem.aggregates;
    if (aggs.empty()) return f;

    const std::size_t width = f.width();
    double total_views = 0.0;
    for (const auto& a : aggs) total_views += static_cast<double>(a.views());
    const bool l1 = hyper.latent_penalty == Penalty::kL1;
    const bool update_rows = fixed != FixedSide::kRows;
    const bool update_cols = fixed != FixedSide::kCols;

    // One accumulator per shared weight and side; penalties are scaled like
    // the data term (per view).
    detail::CumulativeL1 latent_rows(f.banners() * width), bias_rows(f.banners() * width);
    detail::CumulativeL1 latent_cols(f.domains() * width), bias_cols(f.domains() * width);

    std::vector<std::size_t> order(aggs.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(opt.seed);
    std::vector<double> grad_rows(f.banners() * width), grad_cols(f.domains() * width);
    std::vector<double> offsets(aggs.size());
    for (std::size_t n = 0; n < aggs.size(); ++n) offsets[n] = problem.offsets.get(aggs[n].key());

    LatentFactors best = f;
    double best_loss = report.initial_loss;
    double previous = report.initial_loss;
    std::size_t updates = 0;
    const double batch_scale_base = static_cast<double>(aggs.size()) / total_views;

    for (std::size_t epoch = 0; epoch < opt.max_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t begin = 0; begin < order.size(); begin += opt.batch_size) {
            const std::size_t end = std::min(order.size(), begin + opt.batch_size);
            const double scale = batch_scale_base / static_cast<double>(end - begin);
            const double eta_step = detail::step_at(opt, updates++);
            std::fill(grad_rows.begin(), grad_rows.end(), 0.0);
            std::fill(grad_cols.begin(), grad_cols.end(), 0.0);
            for (std::size_t b = begin; b < end; ++b) {
                const std::size_t n = order[b];
                const DyadKey key = aggs[n].key();
                const double p = sigmoid(f.dot(key) + offsets[n]);
                const double r = scale * (static_cast<double>(aggs[n].views()) * p -
                                          static_cast<double>(aggs[n].clicks()));
                const auto a = f.row(key.banner);
                const auto c = f.col(key.domain);
                for (std::size_t s = 0; s < width; ++s) {
                    grad_rows[key.banner * width + s] += r * c[s];
                    grad_cols[key.domain * width + s] += r * a[s];
                }
            }
            auto step_side = [&](bool row_side, const std::vector<double>& grad,
                                 detail::CumulativeL1& latent_cum, detail::CumulativeL1& bias_cum) {
                const std::size_t count = row_side ? f.banners() : f.domains();
                for (std::size_t i = 0; i < count; ++i) {
                    auto v = row_side ? f.row_mut(i) : f.col_mut(i);
                    for (std::size_t s = 0; s < width; ++s) {
                        if (is_constant_slot(f, row_side, s)) continue;
                        double g = grad[i * width + s];
                        if (!l1) g += 2.0 * slot_lambda(f, hyper, row_side, s) / total_views * v[s];
                        v[s] -= eta_step * g;
                        if (l1) {
                            (is_bias_slot(f, row_side, s) ? bias_cum : latent_cum).apply(i * width + s, v[s]);
                        }
                    }
                }
            };
            if (l1) {
                latent_rows.accrue(eta_step * hyper.lambda_latent / total_views);
                latent_cols.accrue(eta_step * hyper.lambda_latent / total_views);
                bias_rows.accrue(eta_step * hyper.lambda_bias / total_views);
                bias_cols.accrue(eta_step * hyper.lambda_bias / total_views);
            }
            if (update_rows) step_side(true, grad_rows, latent_rows, bias_rows);
            if (update_cols) step_side(false, grad_cols, latent_cols, bias_cols);
        }
        zero_unobserved(f, problem, fixed);
        const double current = loss_cwf(problem, f);
        check_divergence(current);
        report.loss_trace.push_back(current);
        report.epochs = epoch + 1;
        if (current < best_loss) {
            best_loss = current;
            best = f;
        }
        if (detail::converged(previous, current, opt.tolerance) && current <= previous) {
            report.converged = true;
            break;
        }
        previous = current;
    }
    return best;
}

}  // namespace

void OffsetTable::set(DyadKey key, double offset) {
    if (!std::isfinite(offset)) {
        throw DataError("non-finite offset for dyad " + describe(key));
    }
    offsets_[key] = offset;
}

void FactorizationProblem::validate() const {
    for (const auto& a : aggregates) {
        if (a.key().banner >= banners || a.key().domain >= domains) {
            throw DataError("dyad " + describe(a.key()) + " outside " + std::to_string(banners) + " x " +
                            std::to_string(domains));
        }
    }
}

double predict_mf(const LatentFactors& factors, DyadKey key, double offset) {
    if (!factors.in_range(key)) {
        throw std::out_of_range("dyad " + describe(key) + " outside the factor matrices");
    }
    return sigmoid(factors.dot(key) + offset);
}

double latent_penalty(const LatentFactors& f, const Hyperparameters& h) {
    double total = 0.0;
    for (std::size_t i = 0; i < f.banners(); ++i) {
        const auto r = f.row(i);
        for (std::size_t s = 0; s < f.width(); ++s) {
            if (s == f.row_constant_slot()) continue;
            total += slot_penalty(r[s], slot_lambda(f, h, true, s), h.latent_penalty);
        }
    }
    for (std::size_t j = 0; j < f.domains(); ++j) {
        const auto c = f.col(j);
        for (std::size_t s = 0; s < f.width(); ++s) {
            if (s == f.col_constant_slot()) continue;
            total += slot_penalty(c[s], slot_lambda(f, h, false, s), h.latent_penalty);
        }
    }
    return total;
}

double loss_cwf(const FactorizationProblem& problem, const LatentFactors& factors) {
    double total = 0.0;
    for (const auto& a : problem.aggregates) {
        const double eta = factors.dot(a.key()) + problem.offsets.get(a.key());
        const double term =
            dyad_nll(eta, static_cast<double>(a.clicks()), static_cast<double>(a.views()));
        if (!std::isfinite(term)) {
            throw NumericalError("non-finite loss term at dyad " + describe(a.key()));
        }
        total += term;
    }
    return total + latent_penalty(factors, problem.hyper);
}

FactorGradient grad_cwf(const FactorizationProblem& problem, const LatentFactors& f) {
    const std::size_t width = f.width();
    FactorGradient g{std::vector<double>(f.banners() * width, 0.0),
                     std::vector<double>(f.domains() * width, 0.0)};
    for (const auto& a : problem.aggregates) {
        const DyadKey key = a.key();
        const double p = sigmoid(f.dot(key) + problem.offsets.get(key));
        const double r = static_cast<double>(a.views()) * p - static_cast<double>(a.clicks());
        const auto row = f.row(key.banner);
        const auto col = f.col(key.domain);
        for (std::size_t s = 0; s < width; ++s) {
            g.rows[key.banner * width + s] += r * col[s];
            g.cols[key.domain * width + s] += r * row[s];
        }
    }
    const bool l2 = problem.hyper.latent_penalty == Penalty::kL2;
    for (std::size_t i = 0; i < f.banners(); ++i) {
        const auto row = f.row(i);
        for (std::size_t s = 0; s < width; ++s) {
            double& gs = g.rows[i * width + s];
            if (s == f.row_constant_slot()) {
                gs = 0.0;
            } else if (l2) {
                gs += 2.0 * slot_lambda(f, problem.hyper, true, s) * row[s];
            }
        }
    }
    for (std::size_t j = 0; j < f.domains(); ++j) {
        const auto col = f.col(j);
        for (std::size_t s = 0; s < width; ++s) {
            double& gs = g.cols[j * width + s];
            if (s == f.col_constant_slot()) {
                gs = 0.0;
            } else if (l2) {
                gs += 2.0 * slot_lambda(f, problem.hyper, false, s) * col[s];
            }
        }
    }
    return g;
}

LatentFactors init_factors(std::size_t banners, std::size_t domains, std::size_t order, double scale,
                           std::uint64_t seed) {
    LatentFactors f(banners, domains, order);
    if (order == 0) return f;
    std::mt19937_64 rng(seed);
    const double bound = scale / std::sqrt(static_cast<double>(order));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < banners; ++i) {
        auto r = f.row_mut(i);
        for (std::size_t k = 0; k < order; ++k) r[k] = dist(rng);
    }
    for (std::size_t j = 0; j < domains; ++j) {
        auto c = f.col_mut(j);
        for (std::size_t k = 0; k < order; ++k) c[k] = dist(rng);
    }
    return f;
}

LatentFactors fit(const FactorizationProblem& problem, const LatentFactors& init, FixedSide fixed,
                  FitReport* report) {
    if (init.banners() != problem.banners || init.domains() != problem.domains ||
        init.order() != problem.hyper.order) {
        throw std::invalid_argument("initial factors do not match the problem dimensions");
    }
    problem.validate();
    FitReport local;
    FitReport& rep = report ? *report : local;
    rep = FitReport{};

    LatentFactors f = init;
    zero_unobserved(f, problem, fixed);
    rep.initial_loss = loss_cwf(problem, init);
    check_divergence(rep.initial_loss);

    if (problem.hyper.latent_optimizer.solver == Solver::kBatch) {
        f = fit_batch(problem, std::move(f), fixed, rep);
    } else {
        f = fit_sgd(problem, std::move(f), fixed, rep);
    }
    rep.final_loss = loss_cwf(problem, f);
    if (rep.final_loss > rep.initial_loss) {
        // Zeroing unobserved rows can only lower the loss, so this is a
        // stochastic run that never improved; keep the start point.
        rep.final_loss = rep.initial_loss;
        return init;
    }
    return f;
}

}  // namespace lfl
