#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "advforge/aug_policy.hpp"
#include "advforge/bayes_search.hpp"
#include "advforge/rng.hpp"

namespace advforge {

inline constexpr std::size_t kControllerHidden = 100;
inline constexpr std::size_t kControllerEmbed = 16;

/// Categorical head widths in unroll order: negative choice (none + 4),
/// positive choice (none + 2), probability bin (6).
inline constexpr std::array<std::size_t, 3> kHeadSizes = {5, 3, 6};

/// Parameter tensors of the controller. The LSTM gate block is laid out as
/// four stacked slabs (input, forget, candidate, output), each of height
/// kControllerHidden. Heads and choice embeddings are shared across blocks
/// and indexed neg, pos, prob.
struct ControllerTensors {
    std::vector<double> wx;                     // 4H x E
    std::vector<double> wh;                     // 4H x H
    std::vector<double> b;                      // 4H
    std::array<std::vector<double>, 3> head_w;  // head size x H
    std::array<std::vector<double>, 3> head_b;  // head size
    std::array<std::vector<double>, 3> embed;   // head size x E

    bool operator==(const ControllerTensors&) const = default;
};

struct ControllerState {
    std::size_t blocks = 3;
    double beta = 0.9;
    double baseline = 0.0;
    std::size_t skipped_updates = 0;
    ControllerTensors params;

    bool operator==(const ControllerState&) const = default;
};

/// Fresh controller with all weights drawn uniformly from [-0.08, 0.08].
ControllerState make_controller(std::size_t blocks = 3, uint64_t seed = 0);

struct SampledPolicy {
    DiscretePolicy policy;
    double log_prob = 0.0;
    std::vector<std::size_t> choices;  // 3 * blocks head indices

    bool operator==(const SampledPolicy&) const = default;
};

/// Autoregressive unroll of 3n steps; each step feeds the embedding of the
/// previous draw (zero vector first) and draws from the step's head.
SampledPolicy sample_policy(const ControllerState& state, Rng& rng);

/// Log probability of a stored choice sequence under the current weights.
double log_prob_of(const ControllerState& state, const std::vector<std::size_t>& choices);

/// Gradient of log_prob_of with respect to every parameter tensor, by exact
/// backpropagation through the unrolled recurrence.
std::pair<double, ControllerTensors> log_prob_grad(const ControllerState& state,
                                                   const std::vector<std::size_t>& choices);

/// Per-step head distributions along a forced choice path.
std::vector<std::vector<double>> step_distributions(const ControllerState& state,
                                                    const std::vector<std::size_t>& choices);

/// Maps a choice sequence to the policy it denotes.
DiscretePolicy choices_to_policy(const std::vector<std::size_t>& choices);

/// Embeds choices into [0,1]^(3n) so traces can share the search diagnostics.
std::vector<double> encode_choices(const std::vector<std::size_t>& choices);

/// One REINFORCE step: parameters move by lr * (reward - baseline) * grad,
/// then the baseline EMA absorbs the reward. Returns false when a non-finite
/// gradient forced the parameter step to be skipped.
bool reinforce_update(ControllerState& state, const SampledPolicy& sampled,
                      double reward, double lr = 0.05);

using PolicyObjective = std::function<double(const DiscretePolicy&)>;

struct PolicyStep {
    SampledPolicy sampled;
    double reward = 0.0;

    bool operator==(const PolicyStep&) const = default;
};

struct ControllerSearchResult {
    DiscretePolicy best_policy;
    double best_reward = 0.0;
    std::vector<PolicyStep> steps;
    std::size_t failed_evaluations = 0;

    bool operator==(const ControllerSearchResult&) const = default;
};

/// Sample / evaluate / update loop. A throwing objective records the worst
/// reward seen so far and the loop continues.
ControllerSearchResult run_controller_search(ControllerState& state,
                                             const PolicyObjective& objective,
                                             std::size_t iterations, Rng& rng,
                                             double lr = 0.05);

/// Re-expresses a controller run in the shared trace shape, with choices
/// encoded into the unit cube.
SearchTrace to_search_trace(const ControllerSearchResult& result);

std::string serialize_controller(const ControllerState& state);
ControllerState parse_controller(const std::string& json_text);
void save_controller(const ControllerState& state, const std::string& path);
ControllerState load_controller(const std::string& path);

} // namespace advforge
