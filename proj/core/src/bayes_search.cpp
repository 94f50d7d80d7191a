#include "advforge/bayes_search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <json.hpp>

#include "advforge/errors.hpp"

namespace advforge {

namespace {

constexpr double kMaxJitter = 1e-4;

void check_point(const std::vector<double>& x, std::size_t dim) {
    if (x.size() != dim) {
        throw PreconditionError("point has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(dim));
    }
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw PreconditionError("point has a non-finite coordinate");
        }
    }
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

} // namespace

GpState::GpState(std::size_t dim, GpConfig cfg) : dim_(dim), cfg_(cfg) {
    if (dim_ == 0) {
        throw ConfigError("GP dimension must be positive");
    }
    if (!(cfg_.signal_variance > 0.0) || !(cfg_.lengthscale > 0.0) ||
        !(cfg_.noise_variance > 0.0)) {
        throw ConfigError("GP hyperparameters must be positive");
    }
}

double GpState::kernel(const std::vector<double>& a, const std::vector<double>& b) const {
    double sq = 0.0;
    for (std::size_t i = 0; i < dim_; ++i) {
        const double d = a[i] - b[i];
        sq += d * d;
    }
    const double ell = cfg_.lengthscale;
    return cfg_.signal_variance * std::exp(-sq / (2.0 * ell * ell));
}

void GpState::add(std::vector<double> x, double y) {
    check_point(x, dim_);
    if (!std::isfinite(y)) {
        throw PreconditionError("observation value is not finite");
    }
    xs_.push_back(std::move(x));
    ys_.push_back(y);
    dirty_ = true;
}

void GpState::refit() const {
    const std::size_t n = ys_.size();
    mu0_ = cfg_.prior_mean
               ? *cfg_.prior_mean
               : std::accumulate(ys_.begin(), ys_.end(), 0.0) / static_cast<double>(n);

    Eigen::MatrixXd cov(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double k = kernel(xs_[i], xs_[j]);
            cov(i, j) = k;
            cov(j, i) = k;
        }
    }
    cov.diagonal().array() += cfg_.noise_variance;

    Eigen::VectorXd centered(n);
    for (std::size_t i = 0; i < n; ++i) {
        centered(i) = ys_[i] - mu0_;
    }

    double jitter = 0.0;
    while (true) {
        Eigen::MatrixXd shifted = cov;
        shifted.diagonal().array() += jitter;
        Eigen::LLT<Eigen::MatrixXd> llt(shifted);
        if (llt.info() == Eigen::Success) {
            Eigen::MatrixXd lower = llt.matrixL();
            chol_.assign(n * n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j <= i; ++j) {
                    chol_[i * n + j] = lower(i, j);
                }
            }
            Eigen::VectorXd solved = llt.solve(centered);
            alpha_.assign(solved.data(), solved.data() + n);
            dirty_ = false;
            return;
        }
        if (jitter >= kMaxJitter) {
            break;
        }
        jitter = jitter == 0.0 ? 1e-10 : jitter * 10.0;
        jitter = std::min(jitter, kMaxJitter);
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eigs(cov);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (Eigen::Index i = 0; i < eigs.eigenvalues().size(); ++i) {
        const double ev = std::abs(eigs.eigenvalues()(i));
        lo = std::min(lo, ev);
        hi = std::max(hi, ev);
    }
    std::ostringstream msg;
    msg << "covariance factorization failed for " << n
        << " observations despite jitter up to " << kMaxJitter
        << " (condition estimate "
        << (lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()) << ")";
    throw NumericalError(msg.str());
}

std::pair<double, double> GpState::posterior(const std::vector<double>& x) const {
    check_point(x, dim_);
    const std::size_t n = ys_.size();
    if (n == 0) {
        return {cfg_.prior_mean.value_or(0.0), cfg_.signal_variance};
    }
    if (dirty_) {
        refit();
    }

    std::vector<double> kstar(n);
    for (std::size_t i = 0; i < n; ++i) {
        kstar[i] = kernel(xs_[i], x);
    }

    double mean = mu0_;
    for (std::size_t i = 0; i < n; ++i) {
        mean += kstar[i] * alpha_[i];
    }

    // Forward-substitute w = L^{-1} k*; then k*^T (K + sigma^2 I)^{-1} k* = |w|^2.
    std::vector<double> w(n);
    double reduction = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double v = kstar[i];
        for (std::size_t j = 0; j < i; ++j) {
            v -= chol_[i * n + j] * w[j];
        }
        w[i] = v / chol_[i * n + i];
        reduction += w[i] * w[i];
    }

    const double variance = std::max(0.0, cfg_.signal_variance - reduction);
    return {mean, variance};
}

double ucb(double mean, double variance, double kappa) {
    if (kappa < 0.0) {
        throw PreconditionError("UCB exploration weight must be non-negative");
    }
    return mean + kappa * std::sqrt(std::max(0.0, variance));
}

std::vector<double> propose_next(const GpState& state, const UcbConfig& cfg, Rng& rng) {
    if (cfg.candidates == 0) {
        throw ConfigError("candidate count must be positive");
    }
    const std::size_t dim = state.dimension();
    const auto score = [&](const std::vector<double>& x) {
        const auto [mean, variance] = state.posterior(x);
        return ucb(mean, variance, cfg.kappa);
    };

    std::vector<double> best_x;
    double best_score = -std::numeric_limits<double>::infinity();

    for (std::size_t c = 0; c < cfg.candidates; ++c) {
        std::vector<double> x(dim);
        for (double& v : x) {
            v = rng.uniform();
        }
        double current = score(x);

        double step = 0.25;
        for (std::size_t sweep = 0; sweep < cfg.refine_steps; ++sweep) {
            for (std::size_t i = 0; i < dim; ++i) {
                for (const double delta : {step, -step}) {
                    const double moved = clamp01(x[i] + delta);
                    if (moved == x[i]) {
                        continue;
                    }
                    const double saved = x[i];
                    x[i] = moved;
                    const double trial = score(x);
                    if (trial > current) {
                        current = trial;
                    } else {
                        x[i] = saved;
                    }
                }
            }
            step *= 0.5;
        }

        if (current > best_score) {
            best_score = current;
            best_x = std::move(x);
        }
    }
    return best_x;
}

std::vector<double> best_so_far(const SearchTrace& trace) {
    std::vector<double> out;
    out.reserve(trace.steps.size());
    double best = -std::numeric_limits<double>::infinity();
    for (const TraceStep& step : trace.steps) {
        best = std::max(best, step.reward);
        out.push_back(best);
    }
    return out;
}

std::vector<double> neighbor_distances(const SearchTrace& trace) {
    std::vector<double> out;
    if (trace.steps.size() < 2) {
        return out;
    }
    out.reserve(trace.steps.size() - 1);
    for (std::size_t t = 1; t < trace.steps.size(); ++t) {
        const auto& a = trace.steps[t - 1].x;
        const auto& b = trace.steps[t].x;
        double sq = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double d = a[i] - b[i];
            sq += d * d;
        }
        out.push_back(std::sqrt(sq));
    }
    return out;
}

std::vector<double> moving_average(const std::vector<double>& values,
                                   std::size_t window) {
    if (window == 0) {
        throw ConfigError("moving average window must be positive");
    }
    std::vector<double> out(values.size());
    double running = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        running += values[i];
        if (i >= window) {
            running -= values[i - window];
        }
        const std::size_t count = std::min(i + 1, window);
        out[i] = running / static_cast<double>(count);
    }
    return out;
}

SearchResult optimize(const Objective& objective, std::size_t dim, Rng& rng,
                      std::size_t iterations, std::size_t init_random,
                      const UcbConfig& ucb_cfg, const GpConfig& gp_cfg) {
    if (!objective) {
        throw PreconditionError("objective must be callable");
    }
    if (init_random < 1 || iterations < init_random) {
        throw PreconditionError("need iterations >= init_random >= 1");
    }

    GpState state(dim, gp_cfg);
    SearchResult result;
    result.best_reward = -std::numeric_limits<double>::infinity();
    double worst = 0.0;

    for (std::size_t t = 0; t < iterations; ++t) {
        std::vector<double> x;
        if (t < init_random) {
            x.resize(dim);
            for (double& v : x) {
                v = rng.uniform();
            }
        } else {
            x = propose_next(state, ucb_cfg, rng);
        }

        double reward = 0.0;
        try {
            reward = objective(x);
            if (!std::isfinite(reward)) {
                throw NumericalError("objective returned a non-finite reward");
            }
        } catch (const std::exception&) {
            reward = worst;
        }

        worst = result.trace.steps.empty() ? reward : std::min(worst, reward);
        state.add(x, reward);
        result.trace.steps.push_back(TraceStep{x, reward});
        if (reward > result.best_reward) {
            result.best_reward = reward;
            result.best_x = x;
        }
    }
    return result;
}

std::string serialize_trace(const SearchResult& result) {
    nlohmann::json doc;
    doc["trace"] = nlohmann::json::array();
    for (const TraceStep& step : result.trace.steps) {
        doc["trace"].push_back({{"x", step.x}, {"reward", step.reward}});
    }
    doc["best_x"] = result.best_x;
    doc["best_reward"] = result.best_reward;
    return doc.dump(2) + "\n";
}

SearchResult parse_trace(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("trace is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("trace") || !doc["trace"].is_array() ||
        !doc.contains("best_x") || !doc.contains("best_reward")) {
        throw ParseError("trace document must hold trace, best_x, and best_reward");
    }
    SearchResult result;
    for (const auto& item : doc["trace"]) {
        if (!item.is_object() || !item.contains("x") || !item["x"].is_array() ||
            !item.contains("reward") || !item["reward"].is_number()) {
            throw ParseError("trace step must hold an x array and a numeric reward");
        }
        TraceStep step;
        step.x = item["x"].get<std::vector<double>>();
        step.reward = item["reward"].get<double>();
        result.trace.steps.push_back(std::move(step));
    }
    result.best_x = doc["best_x"].get<std::vector<double>>();
    result.best_reward = doc["best_reward"].get<double>();
    return result;
}

} // namespace advforge
