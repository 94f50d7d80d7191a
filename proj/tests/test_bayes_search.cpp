#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "advforge/bayes_search.hpp"
#include "advforge/errors.hpp"
#include "advforge/rng.hpp"

using namespace advforge;

namespace {

// Reference posterior built on explicit Gauss-Jordan inversion so the
// library's Cholesky path is checked against a fully independent route.
std::vector<std::vector<double>> gauss_jordan_inverse(std::vector<std::vector<double>> m) {
    const std::size_t n = m.size();
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        inv[i][i] = 1.0;
    }
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(m[r][col]) > std::abs(m[pivot][col])) {
                pivot = r;
            }
        }
        std::swap(m[col], m[pivot]);
        std::swap(inv[col], inv[pivot]);
        const double diag = m[col][col];
        REQUIRE(std::abs(diag) > 0.0);
        for (std::size_t c = 0; c < n; ++c) {
            m[col][c] /= diag;
            inv[col][c] /= diag;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) {
                continue;
            }
            const double factor = m[r][col];
            if (factor == 0.0) {
                continue;
            }
            for (std::size_t c = 0; c < n; ++c) {
                m[r][c] -= factor * m[col][c];
                inv[r][c] -= factor * inv[col][c];
            }
        }
    }
    return inv;
}

double rbf(const std::vector<double>& a, const std::vector<double>& b,
           double signal, double ell) {
    double sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
    }
    return signal * std::exp(-sq / (2.0 * ell * ell));
}

std::pair<double, double> oracle_posterior(const std::vector<std::vector<double>>& xs,
                                           const std::vector<double>& ys,
                                           const std::vector<double>& query,
                                           const GpConfig& cfg) {
    const std::size_t n = xs.size();
    const double mu0 =
        cfg.prior_mean ? *cfg.prior_mean
                       : std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);
    std::vector<std::vector<double>> gram(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            gram[i][j] = rbf(xs[i], xs[j], cfg.signal_variance, cfg.lengthscale);
        }
        gram[i][i] += cfg.noise_variance;
    }
    const auto inv = gauss_jordan_inverse(std::move(gram));

    std::vector<double> kstar(n);
    for (std::size_t i = 0; i < n; ++i) {
        kstar[i] = rbf(xs[i], query, cfg.signal_variance, cfg.lengthscale);
    }
    double mean = mu0;
    double quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        double rowk = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            row += inv[i][j] * (ys[j] - mu0);
            rowk += inv[i][j] * kstar[j];
        }
        mean += kstar[i] * row;
        quad += kstar[i] * rowk;
    }
    return {mean, cfg.signal_variance - quad};
}

std::vector<double> random_point(std::size_t dim, Rng& rng) {
    std::vector<double> x(dim);
    for (double& v : x) {
        v = rng.uniform();
    }
    return x;
}

} // namespace

TEST_CASE("empty state returns the prior") {
    GpState state(2);
    const auto [mean, variance] = state.posterior({0.4, 0.6});
    CHECK(mean == 0.0);
    CHECK(variance == 1.0);

    GpConfig shifted;
    shifted.prior_mean = -1.5;
    shifted.signal_variance = 2.0;
    GpState other(1, shifted);
    const auto [m2, v2] = other.posterior({0.5});
    CHECK(m2 == -1.5);
    CHECK(v2 == 2.0);
}

TEST_CASE("single observation matches the closed form") {
    GpConfig cfg;
    cfg.prior_mean = 0.0;
    cfg.noise_variance = 0.1;
    GpState state(1, cfg);
    state.add({0.3}, 1.0);

    const auto [mean, variance] = state.posterior({0.3});
    CHECK(mean == doctest::Approx(1.0 / 1.1).epsilon(1e-12));
    CHECK(variance == doctest::Approx(1.0 - 1.0 / 1.1).epsilon(1e-12));
}

TEST_CASE("prior recenters on the observed mean by default") {
    GpState state(1);
    state.add({0.5}, 3.0);
    const auto [mean, variance] = state.posterior({0.5});
    CHECK(mean == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(variance == doctest::Approx(1.0 - 1.0 / 1.01).epsilon(1e-9));
}

TEST_CASE("construction and input validation") {
    CHECK_THROWS_AS(GpState(0), ConfigError);
    GpConfig bad;
    bad.lengthscale = 0.0;
    CHECK_THROWS_AS(GpState(2, bad), ConfigError);
    bad = GpConfig{};
    bad.noise_variance = -1.0;
    CHECK_THROWS_AS(GpState(2, bad), ConfigError);

    GpState state(2);
    CHECK_THROWS_AS(state.add({0.1}, 1.0), PreconditionError);
    CHECK_THROWS_AS(state.add({0.1, 0.2}, std::nan("")), PreconditionError);
    CHECK_THROWS_AS(state.posterior({0.1, 0.2, 0.3}), PreconditionError);
}

TEST_CASE("posterior agrees with the direct-inverse reference") {
    Rng rng(777);
    for (int instance = 0; instance < 100; ++instance) {
        const std::size_t dim = 1 + rng.uniform_below(5);
        const std::size_t count = 1 + rng.uniform_below(30);
        GpConfig cfg;
        cfg.lengthscale = 0.15 + 0.05 * static_cast<double>(rng.uniform_below(4));
        cfg.noise_variance = instance % 2 == 0 ? 0.01 : 0.05;
        if (instance % 3 == 0) {
            cfg.prior_mean = rng.uniform() - 0.5;
        }

        GpState state(dim, cfg);
        std::vector<std::vector<double>> xs;
        std::vector<double> ys;
        for (std::size_t i = 0; i < count; ++i) {
            auto x = random_point(dim, rng);
            const double y = 4.0 * rng.uniform() - 2.0;
            xs.push_back(x);
            ys.push_back(y);
            state.add(std::move(x), y);
        }

        for (int q = 0; q < 3; ++q) {
            const auto query = random_point(dim, rng);
            const auto [mean, variance] = state.posterior(query);
            const auto [omean, ovar] = oracle_posterior(xs, ys, query, cfg);
            CHECK(std::abs(mean - omean) <= 1e-8);
            CHECK(std::abs(variance - std::max(0.0, ovar)) <= 1e-8);
        }
    }
}

TEST_CASE("near-zero noise interpolates the observations") {
    GpConfig cfg;
    cfg.noise_variance = 1e-8;
    GpState state(1, cfg);
    const std::vector<double> sites = {0.05, 0.25, 0.45, 0.6, 0.8, 0.95};
    for (double s : sites) {
        state.add({s}, std::sin(6.0 * s));
    }
    for (double s : sites) {
        const auto [mean, variance] = state.posterior({s});
        CHECK(std::abs(mean - std::sin(6.0 * s)) < 1e-4);
        CHECK(variance < 1.0);
    }
}

TEST_CASE("observing a point shrinks its variance below the prior") {
    Rng rng(11);
    GpState state(3);
    std::vector<std::vector<double>> xs;
    for (int i = 0; i < 5; ++i) {
        auto x = random_point(3, rng);
        xs.push_back(x);
        state.add(std::move(x), rng.uniform());
    }
    for (const auto& x : xs) {
        const auto [mean, variance] = state.posterior(x);
        (void)mean;
        CHECK(variance < state.config().signal_variance);
        CHECK(variance >= 0.0);
    }
}

TEST_CASE("factorization failure reports a numerical error") {
    GpConfig cfg;
    cfg.signal_variance = 1e30;
    cfg.noise_variance = 1e-30;
    GpState state(1, cfg);
    state.add({0.5}, 1.0);
    state.add({0.5}, 1.0);
    state.add({0.5}, 1.0);
    CHECK_THROWS_WITH_AS(state.posterior({0.5}),
                         doctest::Contains("condition"), NumericalError);
}

TEST_CASE("ucb combines mean and spread") {
    CHECK(ucb(0.5, 0.04, 2.0) == doctest::Approx(0.9).epsilon(1e-12));
    CHECK(ucb(0.7, 0.09, 0.0) == 0.7);
    CHECK(ucb(-0.2, 0.0, 5.0) == -0.2);
    CHECK(ucb(0.1, -1e-18, 1.0) == doctest::Approx(0.1));
    CHECK_THROWS_AS(ucb(0.0, 1.0, -0.1), PreconditionError);
}

TEST_CASE("proposal climbs toward a single high observation") {
    GpConfig cfg;
    cfg.prior_mean = 0.0;
    GpState state(1, cfg);
    state.add({0.3}, 1.0);

    UcbConfig acq;
    acq.kappa = 0.1;
    Rng rng(5);
    const auto proposal = propose_next(state, acq, rng);
    REQUIRE(proposal.size() == 1);
    CHECK(std::abs(proposal[0] - 0.3) < 0.1);

    // Dense scan of the acquisition as an independent check on the climb.
    double grid_best = -1e300;
    double grid_x = 0.0;
    for (int i = 0; i <= 1000; ++i) {
        const double x = static_cast<double>(i) / 1000.0;
        const auto [mean, variance] = state.posterior({x});
        const double a = ucb(mean, variance, acq.kappa);
        if (a > grid_best) {
            grid_best = a;
            grid_x = x;
        }
    }
    CHECK(std::abs(grid_x - 0.3) < 0.05);
    const auto [pm, pv] = state.posterior(proposal);
    CHECK(ucb(pm, pv, acq.kappa) >= grid_best - 1e-6);
}

TEST_CASE("proposals stay inside the unit cube") {
    GpState state(3);
    state.add({0.0, 0.0, 1.0}, 5.0);
    state.add({1.0, 1.0, 0.0}, 4.0);
    state.add({0.5, 0.0, 1.0}, 3.0);

    UcbConfig acq;
    acq.candidates = 4;
    acq.refine_steps = 10;
    for (int call = 0; call < 1000; ++call) {
        Rng rng(static_cast<uint64_t>(call));
        const auto proposal = propose_next(state, acq, rng);
        REQUIRE(proposal.size() == 3);
        for (double v : proposal) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("proposal is deterministic for a fixed seed") {
    GpState state(2);
    Rng fill(3);
    for (int i = 0; i < 6; ++i) {
        state.add(random_point(2, fill), fill.uniform());
    }
    Rng a(42);
    Rng b(42);
    CHECK(propose_next(state, {}, a) == propose_next(state, {}, b));
    CHECK_THROWS_AS(propose_next(state, UcbConfig{2.0, 0, 5}, a), ConfigError);
}

TEST_CASE("quadratic search concentrates near the peak") {
    const Objective objective = [](const std::vector<double>& x) {
        return -(x[0] - 0.3) * (x[0] - 0.3);
    };

    int converged = 0;
    int calmed = 0;
    for (uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const auto result = optimize(objective, 1, rng, 50, 20);
        REQUIRE(result.trace.steps.size() == 50);
        if (std::abs(result.best_x[0] - 0.3) < 0.05) {
            ++converged;
        }

        const auto distances = neighbor_distances(result.trace);
        const auto smoothed = moving_average(distances, 10);
        REQUIRE(smoothed.size() == 49);
        const double head =
            std::accumulate(smoothed.begin(), smoothed.begin() + 30, 0.0) / 30.0;
        const double tail =
            std::accumulate(smoothed.end() - 30, smoothed.end(), 0.0) / 30.0;
        if (tail < head) {
            ++calmed;
        }
    }
    CHECK(converged >= 9);
    CHECK(calmed >= 8);
}

TEST_CASE("constant objective fills the trace") {
    const Objective objective = [](const std::vector<double>&) { return 0.7; };
    Rng rng(1);
    const auto result = optimize(objective, 2, rng, 25, 5);
    CHECK(result.trace.steps.size() == 25);
    CHECK(result.best_reward == 0.7);
    for (const auto& step : result.trace.steps) {
        CHECK(step.reward == 0.7);
    }
}

TEST_CASE("two-dimensional search reaches the optimum") {
    const Objective objective = [](const std::vector<double>& x) {
        const double a = x[0] - 0.2;
        const double b = x[1] - 0.7;
        return -(a * a + b * b);
    };
    Rng rng(7);
    const auto result = optimize(objective, 2, rng, 100, 20);
    CHECK(result.best_reward > -0.01);
}

TEST_CASE("failing evaluations record the worst reward seen") {
    int call = 0;
    const Objective objective = [&call](const std::vector<double>&) -> double {
        const int t = call++;
        if (t == 1 || t == 3) {
            throw std::runtime_error("evaluation failed");
        }
        return t == 0 ? 2.0 : 1.0;
    };
    Rng rng(9);
    const auto result = optimize(objective, 1, rng, 4, 4);
    REQUIRE(result.trace.steps.size() == 4);
    CHECK(result.trace.steps[0].reward == 2.0);
    CHECK(result.trace.steps[1].reward == 2.0);
    CHECK(result.trace.steps[2].reward == 1.0);
    CHECK(result.trace.steps[3].reward == 1.0);
    CHECK(result.best_reward == 2.0);

    const Objective always_fail = [](const std::vector<double>&) -> double {
        throw std::runtime_error("down");
    };
    Rng rng2(9);
    const auto fallback = optimize(always_fail, 1, rng2, 2, 2);
    CHECK(fallback.trace.steps[0].reward == 0.0);
    CHECK(fallback.trace.steps[1].reward == 0.0);
}

TEST_CASE("optimize validates its schedule") {
    const Objective objective = [](const std::vector<double>&) { return 0.0; };
    Rng rng(1);
    CHECK_THROWS_AS(optimize(objective, 1, rng, 5, 0), PreconditionError);
    CHECK_THROWS_AS(optimize(objective, 1, rng, 5, 6), PreconditionError);
    CHECK_THROWS_AS(optimize(Objective{}, 1, rng, 5, 2), PreconditionError);
}

TEST_CASE("trace summaries") {
    SearchTrace trace;
    trace.steps = {{{0.0, 0.0}, 1.0}, {{3.0, 4.0}, 0.5}, {{3.0, 4.0}, 2.0}};
    CHECK(best_so_far(trace) == std::vector<double>{1.0, 1.0, 2.0});
    CHECK(neighbor_distances(trace) == std::vector<double>{5.0, 0.0});

    const std::vector<double> values = {1.0, 2.0, 3.0, 4.0};
    CHECK(moving_average(values, 2) == std::vector<double>{1.0, 1.5, 2.5, 3.5});
    CHECK(moving_average(values, 1) == values);
    CHECK(moving_average(values, 10) ==
          std::vector<double>{1.0, 1.5, 2.0, 2.5});
    CHECK_THROWS_AS(moving_average(values, 0), ConfigError);
    CHECK(neighbor_distances(SearchTrace{}).empty());
}

TEST_CASE("trace serialization round-trips") {
    const Objective objective = [](const std::vector<double>& x) {
        return -(x[0] - 0.4) * (x[0] - 0.4);
    };
    Rng rng(21);
    const auto result = optimize(objective, 1, rng, 12, 4);

    const std::string text = serialize_trace(result);
    const auto back = parse_trace(text);
    CHECK(back == result);

    CHECK_THROWS_AS(parse_trace("not json"), ParseError);
    CHECK_THROWS_AS(parse_trace("{}"), ParseError);
    CHECK_THROWS_AS(parse_trace("{\"trace\":[{\"x\":1}],\"best_x\":[],\"best_reward\":0}"),
                    ParseError);
}

TEST_CASE("identical seeds give byte-identical traces") {
    const Objective objective = [](const std::vector<double>& x) {
        return -(x[0] - 0.25) * (x[0] - 0.25) - (x[1] - 0.6) * (x[1] - 0.6);
    };
    Rng a(101);
    Rng b(101);
    const auto first = optimize(objective, 2, a, 30, 10);
    const auto second = optimize(objective, 2, b, 30, 10);
    CHECK(serialize_trace(first) == serialize_trace(second));
}
