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
#include <algorithm>
#include <limits>
#include <map>
#include <random>

#include "doctest.h"
#include "lfl/factorization.hpp"

using namespace lfl;

namespace {

/// A random problem with at most 10 dyads and 50 events, plus the events it
/// summarizes so the aggregate loss can be checked against the raw sum.
struct Instance {
    FactorizationProblem problem;
    LatentFactors factors;
    std::vector<std::pair<DyadKey, bool>> events;
};

Instance random_instance(std::uint64_t seed, std::size_t order, Penalty penalty, bool regularize) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::uint32_t> rows(1, 4);
    std::uniform_int_distribution<std::uint32_t> cols(1, 4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Instance inst;
    auto& p = inst.problem;
    p.banners = rows(rng);
    p.domains = cols(rng);
    p.hyper.order = order;
    p.hyper.latent_penalty = penalty;
    p.hyper.lambda_bias = regularize ? 0.7 : 0.0;
    p.hyper.lambda_latent = regularize ? 1.3 : 0.0;

    std::map<DyadKey, std::pair<std::uint64_t, std::uint64_t>> counts;
    std::uniform_int_distribution<std::size_t> n_events(1, 50);
    const std::size_t n = n_events(rng);
    std::vector<DyadKey> keys;
    for (std::uint32_t i = 0; i < p.banners; ++i) {
        for (std::uint32_t j = 0; j < p.domains; ++j) keys.push_back({i, j});
    }
    std::shuffle(keys.begin(), keys.end(), rng);
    keys.resize(std::min<std::size_t>(keys.size(), 10));
    std::uniform_int_distribution<std::size_t> pick(0, keys.size() - 1);
    for (std::size_t d = 0; d < n; ++d) {
        const DyadKey k = keys[pick(rng)];
        const bool y = u(rng) > 0.3;
        inst.events.emplace_back(k, y);
        counts[k].first += y;
        counts[k].second += 1;
    }
    for (const auto& [k, cv] : counts) {
        p.aggregates.emplace_back(k, cv.first, cv.second);
        p.offsets.set(k, 0.5 * u(rng));
    }
    inst.factors = LatentFactors(p.banners, p.domains, order);
    for (std::size_t i = 0; i < p.banners; ++i) {
        auto r = inst.factors.row_mut(i);
        for (std::size_t s = 0; s < order + 1; ++s) r[s] = u(rng);
    }
    for (std::size_t j = 0; j < p.domains; ++j) {
        auto c = inst.factors.col_mut(j);
        for (std::size_t s = 0; s < order; ++s) c[s] = u(rng);
        c[inst.factors.col_bias_slot()] = u(rng);
    }
    return inst;
}

double expanded_loss(const Instance& inst) {
    double sum = 0.0;
    for (const auto& [k, y] : inst.events) {
        const double p = predict_mf(inst.factors, k, inst.problem.offsets.get(k));
        sum -= y ? std::log(p) : std::log(1.0 - p);
    }
    return sum;
}

/// Relative error between the analytic gradient and central differences of
/// `objective`, over every free coordinate.
template <typename Objective>
double gradient_error(const Instance& inst, const FactorGradient& g, Objective objective) {
    const double h = 1e-5;
    const std::size_t w = inst.factors.width();
    double diff = 0.0;
    double norm = 0.0;
    auto probe = [&](bool row, std::size_t idx, std::size_t slot, double analytic) {
        LatentFactors plus = inst.factors;
        LatentFactors minus = inst.factors;
        (row ? plus.row_mut(idx) : plus.col_mut(idx))[slot] += h;
        (row ? minus.row_mut(idx) : minus.col_mut(idx))[slot] -= h;
        const double fd = (objective(plus) - objective(minus)) / (2.0 * h);
        diff += (fd - analytic) * (fd - analytic);
        norm += fd * fd;
    };
    for (std::size_t i = 0; i < inst.factors.banners(); ++i) {
        for (std::size_t s = 0; s < w; ++s) {
            if (s == inst.factors.row_constant_slot()) continue;
            probe(true, i, s, g.rows[i * w + s]);
        }
    }
    for (std::size_t j = 0; j < inst.factors.domains(); ++j) {
        for (std::size_t s = 0; s < w; ++s) {
            if (s == inst.factors.col_constant_slot()) continue;
            probe(false, j, s, g.cols[j * w + s]);
        }
    }
    return std::sqrt(diff) / std::max(std::sqrt(norm), 1e-8);
}

FactorizationProblem single_dyad(std::uint64_t clicks, std::uint64_t views, std::size_t order) {
    FactorizationProblem p;
    p.banners = 1;
    p.domains = 1;
    p.hyper.order = order;
    p.hyper.lambda_bias = 0.0;
    p.hyper.lambda_latent = 0.0;
    p.aggregates.emplace_back(DyadKey{0, 0}, clicks, views);
    return p;
}

}  // namespace

TEST_CASE("predict_mf") {
    LatentFactors f(1, 1, 2);
    CHECK(predict_mf(f, {0, 0}, 0.0) == 0.5);
    f.row_mut(0)[f.row_bias_slot()] = 1.0;
    f.col_mut(0)[f.col_bias_slot()] = 1.0;
    CHECK(predict_mf(f, {0, 0}, 0.0) == doctest::Approx(0.880797077977882).epsilon(1e-12));
    LatentFactors z(1, 1, 0);
    const double p = predict_mf(z, {0, 0}, 40.0);
    CHECK(std::isfinite(p));
    CHECK(std::fabs(p - 1.0) <= 1e-15);
    CHECK(predict_mf(z, {0, 0}, -800.0) >= 0.0);
    CHECK_THROWS_AS(predict_mf(z, {1, 0}, 0.0), std::out_of_range);
}

TEST_CASE("loss of a single dyad at p = 0.5") {
    const auto p = single_dyad(1, 3, 2);
    CHECK(loss_cwf(p, LatentFactors(1, 1, 2)) == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("loss of empty data with zero factors is zero") {
    FactorizationProblem p;
    p.banners = 3;
    p.domains = 2;
    p.hyper.order = 2;
    p.hyper.lambda_latent = 1.0;
    CHECK(loss_cwf(p, LatentFactors(3, 2, 2)) == 0.0);
}

TEST_CASE("aggregate loss equals the expanded per-event loss") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const auto inst = random_instance(seed, seed % 4, Penalty::kL2, false);
        const double agg = loss_cwf(inst.problem, inst.factors);
        const double raw = expanded_loss(inst);
        CHECK(std::fabs(agg - raw) <= 1e-10 * std::fabs(raw));
    }
}

TEST_CASE("regularizer skips constant slots and splits bias and latent weights") {
    LatentFactors f(1, 1, 1);
    f.row_mut(0)[0] = 2.0;
    f.col_mut(0)[0] = -1.0;
    f.row_mut(0)[f.row_bias_slot()] = 3.0;
    f.col_mut(0)[f.col_bias_slot()] = -0.5;
    Hyperparameters h;
    h.order = 1;
    h.lambda_latent = 0.5;
    h.lambda_bias = 2.0;
    h.latent_penalty = Penalty::kL2;
    CHECK(latent_penalty(f, h) == doctest::Approx(0.5 * (4.0 + 1.0) + 2.0 * (9.0 + 0.25)));
    h.latent_penalty = Penalty::kL1;
    CHECK(latent_penalty(f, h) == doctest::Approx(0.5 * (2.0 + 1.0) + 2.0 * (3.0 + 0.5)));
}

TEST_CASE("L2 gradient matches finite differences") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const auto inst = random_instance(100 + seed, 1 + seed % 3, Penalty::kL2, true);
        const auto g = grad_cwf(inst.problem, inst.factors);
        const double err = gradient_error(inst, g, [&](const LatentFactors& f) { return loss_cwf(inst.problem, f); });
        CHECK(err < 1e-5);
    }
}

TEST_CASE("L1 smooth-part gradient matches finite differences") {
    for (std::uint64_t seed = 1; seed <= 25; ++seed) {
        const auto inst = random_instance(200 + seed, 1 + seed % 3, Penalty::kL1, true);
        const auto g = grad_cwf(inst.problem, inst.factors);
        const double err = gradient_error(inst, g, [&](const LatentFactors& f) {
            return loss_cwf(inst.problem, f) - latent_penalty(f, inst.problem.hyper);
        });
        CHECK(err < 1e-5);
    }
}

TEST_CASE("gradient of zero data is the regularizer gradient") {
    FactorizationProblem p;
    p.banners = 2;
    p.domains = 2;
    p.hyper.order = 2;
    p.hyper.lambda_latent = 1.5;
    p.hyper.lambda_bias = 0.5;
    LatentFactors f = init_factors(2, 2, 2, 1.0, 3);
    f.row_mut(1)[f.row_bias_slot()] = 0.4;
    const auto g = grad_cwf(p, f);
    const std::size_t w = f.width();
    for (std::size_t i = 0; i < 2; ++i) {
        for (std::size_t s = 0; s < 2; ++s) CHECK(g.rows[i * w + s] == doctest::Approx(2.0 * 1.5 * f.row(i)[s]));
        CHECK(g.rows[i * w + f.row_bias_slot()] == doctest::Approx(2.0 * 0.5 * f.row(i)[f.row_bias_slot()]));
        CHECK(g.rows[i * w + f.row_constant_slot()] == 0.0);
        CHECK(g.cols[i * w + f.col_constant_slot()] == 0.0);
    }
}

TEST_CASE("gradient vanishes on an exactly fitted rank-1 instance") {
    // logit(3/4) = ln 3, so alpha = beta = [s, -s] with s^2 = ln 3 fits the
    // counts exactly.
    FactorizationProblem p;
    p.banners = 2;
    p.domains = 2;
    p.hyper.order = 1;
    p.hyper.lambda_bias = 0.0;
    p.hyper.lambda_latent = 0.0;
    p.aggregates.emplace_back(DyadKey{0, 0}, 3, 4);
    p.aggregates.emplace_back(DyadKey{0, 1}, 1, 4);
    p.aggregates.emplace_back(DyadKey{1, 0}, 1, 4);
    p.aggregates.emplace_back(DyadKey{1, 1}, 3, 4);
    LatentFactors f(2, 2, 1);
    const double s = std::sqrt(std::log(3.0));
    f.row_mut(0)[0] = s;
    f.row_mut(1)[0] = -s;
    f.col_mut(0)[0] = s;
    f.col_mut(1)[0] = -s;
    const auto g = grad_cwf(p, f);
    double norm = 0.0;
    for (double v : g.rows) norm += v * v;
    for (double v : g.cols) norm += v * v;
    CHECK(std::sqrt(norm) < 1e-8);
}

TEST_CASE("fitting one dyad recovers the Bernoulli rate") {
    for (Solver solver : {Solver::kBatch, Solver::kSgd}) {
        auto p = single_dyad(3, 10, 0);
        p.hyper.latent_optimizer.solver = solver;
        p.hyper.latent_optimizer.max_epochs = 2000;
        p.hyper.latent_optimizer.batch_size = 1;
        p.hyper.latent_optimizer.step_size = 0.05;
        p.hyper.latent_optimizer.tolerance = 1e-12;
        const auto f = fit(p, LatentFactors(1, 1, 0), FixedSide::kNone);
        CHECK(predict_mf(f, {0, 0}, 0.0) == doctest::Approx(0.3).epsilon(1e-3 / 0.3));
    }
}

TEST_CASE("fitting from a fitted model changes nothing") {
    auto inst = random_instance(7, 2, Penalty::kL2, true);
    FitReport first;
    const auto once = fit(inst.problem, inst.factors, FixedSide::kNone, &first);
    FitReport second;
    const auto twice = fit(inst.problem, once, FixedSide::kNone, &second);
    CHECK(second.final_loss <= first.final_loss * (1.0 + 1e-6));
    CHECK(std::fabs(second.final_loss - first.final_loss) <= 1e-6 * first.final_loss);
    (void)twice;
}

TEST_CASE("a huge L1 latent weight zeroes the latent coordinates") {
    FactorizationProblem p;
    p.banners = 6;
    p.domains = 5;
    p.hyper.order = 3;
    p.hyper.latent_penalty = Penalty::kL1;
    p.hyper.lambda_latent = 1e6;
    p.hyper.lambda_bias = 0.0;
    std::mt19937_64 rng(5);
    for (std::uint32_t i = 0; i < 6; ++i) {
        for (std::uint32_t j = 0; j < 5; ++j) {
            const std::uint64_t v = 5 + rng() % 20;
            p.aggregates.emplace_back(DyadKey{i, j}, rng() % (v + 1), v);
        }
    }
    const auto f = fit(p, init_factors(6, 5, 3, 0.5, 11), FixedSide::kNone);
    for (std::size_t i = 0; i < 6; ++i) {
        for (std::size_t s = 0; s < 3; ++s) CHECK(f.row(i)[s] == 0.0);
    }
    for (std::size_t j = 0; j < 5; ++j) {
        for (std::size_t s = 0; s < 3; ++s) CHECK(f.col(j)[s] == 0.0);
    }

    FactorizationProblem biases = p;
    biases.hyper.order = 0;
    const auto b = fit(biases, LatentFactors(6, 5, 0), FixedSide::kNone);
    const double loss_k = loss_cwf(p, f) - latent_penalty(f, p.hyper);
    const double loss_0 = loss_cwf(biases, b);
    CHECK(std::fabs(loss_k - loss_0) <= 1e-6 * loss_0);
}

TEST_CASE("fit leaves constant slots and the fixed side alone") {
    auto inst = random_instance(31, 2, Penalty::kL2, true);
    for (FixedSide side : {FixedSide::kNone, FixedSide::kRows, FixedSide::kCols}) {
        const auto f = fit(inst.problem, inst.factors, side);
        for (std::size_t i = 0; i < f.banners(); ++i) CHECK(f.row(i)[f.row_constant_slot()] == 1.0);
        for (std::size_t j = 0; j < f.domains(); ++j) CHECK(f.col(j)[f.col_constant_slot()] == 1.0);
        if (side == FixedSide::kRows) {
            CHECK(std::equal(f.row_data().begin(), f.row_data().end(), inst.factors.row_data().begin()));
        }
        if (side == FixedSide::kCols) {
            CHECK(std::equal(f.col_data().begin(), f.col_data().end(), inst.factors.col_data().begin()));
        }
    }
}

TEST_CASE("the half-problem with columns fixed is convex") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto inst = random_instance(300 + seed, 3, Penalty::kL2, true);
        inst.problem.hyper.latent_optimizer.tolerance = 1e-12;
        inst.problem.hyper.latent_optimizer.max_epochs = 500;
        LatentFactors a = init_factors(inst.problem.banners, inst.problem.domains, 3, 2.0, seed);
        LatentFactors b = init_factors(inst.problem.banners, inst.problem.domains, 3, 2.0, seed + 1000);
        for (std::size_t j = 0; j < inst.problem.domains; ++j) {
            std::copy(inst.factors.col(j).begin(), inst.factors.col(j).end(), a.col_mut(j).begin());
            std::copy(inst.factors.col(j).begin(), inst.factors.col(j).end(), b.col_mut(j).begin());
        }
        const double la = loss_cwf(inst.problem, fit(inst.problem, a, FixedSide::kCols));
        const double lb = loss_cwf(inst.problem, fit(inst.problem, b, FixedSide::kCols));
        CHECK(std::fabs(la - lb) <= 1e-4 * std::max(la, lb));
    }
}

TEST_CASE("batch fitting decreases the loss monotonically") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        for (Penalty pen : {Penalty::kL1, Penalty::kL2}) {
            auto inst = random_instance(400 + seed, 2, pen, true);
            FitReport rep;
            fit(inst.problem, inst.factors, FixedSide::kNone, &rep);
            double prev = rep.initial_loss;
            for (double l : rep.loss_trace) {
                CHECK(l <= prev * (1.0 + 1e-12));
                prev = l;
            }
            CHECK(rep.final_loss <= rep.initial_loss);
        }
    }
}

TEST_CASE("stochastic fitting never ends above the initial loss") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        for (Penalty pen : {Penalty::kL1, Penalty::kL2}) {
            auto inst = random_instance(500 + seed, 2, pen, true);
            inst.problem.hyper.latent_optimizer.solver = Solver::kSgd;
            inst.problem.hyper.latent_optimizer.batch_size = 4;
            FitReport rep;
            const auto f = fit(inst.problem, inst.factors, FixedSide::kNone, &rep);
            CHECK(loss_cwf(inst.problem, f) <= rep.initial_loss);
        }
    }
}

TEST_CASE("stochastic L1 produces exact zeros") {
    auto inst = random_instance(77, 3, Penalty::kL1, true);
    inst.problem.hyper.lambda_latent = 1e4;
    inst.problem.hyper.latent_optimizer.solver = Solver::kSgd;
    const auto f = fit(inst.problem, inst.factors, FixedSide::kNone);
    for (std::size_t i = 0; i < f.banners(); ++i) {
        for (std::size_t s = 0; s < 3; ++s) CHECK(f.row(i)[s] == 0.0);
    }
}

TEST_CASE("non-finite factors are reported with the dyad") {
    auto p = single_dyad(1, 2, 1);
    LatentFactors f(1, 1, 1);
    f.row_mut(0)[0] = std::numeric_limits<double>::quiet_NaN();
    f.col_mut(0)[0] = 1.0;
    try {
        loss_cwf(p, f);
        FAIL("expected a numerical error");
    } catch (const NumericalError& e) {
        CHECK(std::string(e.what()).find("(0, 0)") != std::string::npos);
    }
}

TEST_CASE("problem validation and offsets") {
    auto p = single_dyad(1, 2, 0);
    p.banners = 0;
    CHECK_THROWS_AS(p.validate(), DataError);
    OffsetTable t(-2.0);
    CHECK(t.get({4, 4}) == -2.0);
    t.set({4, 4}, 1.0);
    CHECK(t.get({4, 4}) == 1.0);
    CHECK_THROWS(t.set({0, 0}, std::numeric_limits<double>::infinity()));
    CHECK_THROWS_AS(fit(single_dyad(1, 2, 0), LatentFactors(2, 1, 0), FixedSide::kNone), std::invalid_argument);
}

TEST_CASE("init_factors is deterministic and bounded") {
    const auto a = init_factors(5, 4, 4, 0.01, 9);
    CHECK(a == init_factors(5, 4, 4, 0.01, 9));
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t s = 0; s < 4; ++s) CHECK(std::fabs(a.row(i)[s]) <= 0.01 / 2.0);
        CHECK(a.row(i)[a.row_bias_slot()] == 0.0);
    }
}
