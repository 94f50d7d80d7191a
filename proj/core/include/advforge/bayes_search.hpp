#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "advforge/rng.hpp"

namespace advforge {

/// RBF kernel and noise hyperparameters. When prior_mean is unset the prior
/// is re-centered on the mean of the observations at every refit.
struct GpConfig {
    double signal_variance = 1.0;
    double lengthscale = 0.2;
    double noise_variance = 0.01;
    std::optional<double> prior_mean;
};

/// Gaussian-process regressor over [0,1]^d with an isotropic RBF kernel.
/// The Cholesky factor is rebuilt lazily after observations change; jitter
/// grows by decades up to 1e-4 before a NumericalError is raised.
class GpState {
public:
    explicit GpState(std::size_t dim, GpConfig cfg = {});

    std::size_t dimension() const { return dim_; }
    std::size_t size() const { return ys_.size(); }
    const GpConfig& config() const { return cfg_; }
    const std::vector<std::vector<double>>& points() const { return xs_; }
    const std::vector<double>& values() const { return ys_; }

    void add(std::vector<double> x, double y);

    /// Posterior (mean, variance) of the latent function at x; the variance
    /// is clamped at zero. With no observations this is the prior.
    std::pair<double, double> posterior(const std::vector<double>& x) const;

private:
    void refit() const;
    double kernel(const std::vector<double>& a, const std::vector<double>& b) const;

    std::size_t dim_;
    GpConfig cfg_;
    std::vector<std::vector<double>> xs_;
    std::vector<double> ys_;

    mutable bool dirty_ = false;
    mutable double mu0_ = 0.0;
    mutable std::vector<double> chol_;   // lower factor of K + sigma^2 I, row-major
    mutable std::vector<double> alpha_;  // (K + sigma^2 I)^{-1} (y - mu0)
};

/// Acquisition tuning: exploration weight, number of random starts, and
/// hill-climbing sweeps per start.
struct UcbConfig {
    double kappa = 2.0;
    std::size_t candidates = 64;
    std::size_t refine_steps = 20;
};

/// Optimistic upper bound: mean + kappa * sqrt(variance).
double ucb(double mean, double variance, double kappa);

/// Argmax of the acquisition over seeded random starts, each refined by
/// coordinate-wise hill climbing with a halving step; result is inside the
/// unit cube and deterministic for a given rng state.
std::vector<double> propose_next(const GpState& state, const UcbConfig& cfg, Rng& rng);

struct TraceStep {
    std::vector<double> x;
    double reward = 0.0;

    bool operator==(const TraceStep&) const = default;
};

struct SearchTrace {
    std::vector<TraceStep> steps;

    bool operator==(const SearchTrace&) const = default;
};

/// Running maximum of the rewards, one entry per step.
std::vector<double> best_so_far(const SearchTrace& trace);

/// Euclidean distances between consecutive evaluation points (size n-1).
std::vector<double> neighbor_distances(const SearchTrace& trace);

/// Trailing moving average; early entries average the available prefix.
std::vector<double> moving_average(const std::vector<double>& values,
                                   std::size_t window);

struct SearchResult {
    std::vector<double> best_x;
    double best_reward = 0.0;
    SearchTrace trace;

    bool operator==(const SearchResult&) const = default;
};

using Objective = std::function<double(const std::vector<double>&)>;

/// Evaluates init_random uniform points, then GP-guided proposals, and
/// returns the best evaluation. An objective that throws records the worst
/// reward seen so far and the search continues.
SearchResult optimize(const Objective& objective, std::size_t dim, Rng& rng,
                      std::size_t iterations = 100, std::size_t init_random = 20,
                      const UcbConfig& ucb_cfg = {}, const GpConfig& gp_cfg = {});

std::string serialize_trace(const SearchResult& result);
SearchResult parse_trace(const std::string& json_text);

} // namespace advforge
