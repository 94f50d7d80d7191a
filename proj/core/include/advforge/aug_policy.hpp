#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "advforge/adversary_forge.hpp"
#include "advforge/qa_corpus.hpp"
#include "advforge/rng.hpp"

namespace advforge {

/// Probability grid used by the discrete search space.
inline constexpr std::array<double, 6> kProbBins = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};

/// One slot of a discrete policy: an optional negative kind, an optional
/// positive kind, and the probability of applying the pair.
struct SubPolicy {
    std::optional<AdversaryKind> neg;
    std::optional<AdversaryKind> pos;
    double prob = 0.0;

    bool operator==(const SubPolicy&) const = default;
};

/// All 90 sub-policies: 5 negative choices x 3 positive choices x 6 bins.
std::vector<SubPolicy> enumerate_subpolicies();

/// Number of distinct policies with n sub-policy slots (90^n).
std::uint64_t discrete_space_size(std::size_t n);

struct DiscretePolicy {
    std::vector<SubPolicy> sub_policies;

    bool operator==(const DiscretePolicy&) const = default;
};

/// A transformation combination drawn by continuous policies: one negative
/// kind, one positive kind, or a negative-positive pair.
struct Combination {
    std::optional<AdversaryKind> neg;
    std::optional<AdversaryKind> pos;

    bool operator==(const Combination&) const = default;
};

/// Short name such as "AddS", "PA", or "AddKS-PQ".
std::string combination_name(const Combination& combo);
std::optional<Combination> parse_combination(std::string_view name);

/// The 12 combinations a continuous policy ranges over: 6 singletons plus the
/// negative-positive pairs that do not involve InvalidateAnswer.
const std::vector<Combination>& full_roster();

/// The same roster without InvalidateAnswer, for corpora where every question
/// must stay answerable.
const std::vector<Combination>& roster_without_invalidate();

/// Per-combination application probabilities. The key set is the policy's
/// combination roster; combinations never listed are never drawn.
struct ContinuousPolicy {
    std::map<std::string, double> probs;

    bool operator==(const ContinuousPolicy&) const = default;
};

/// All-zero policy over the standard roster.
ContinuousPolicy make_continuous_policy(bool include_invalidate = true);

using Policy = std::variant<DiscretePolicy, ContinuousPolicy>;

/// Throws ConfigError on out-of-range probabilities, bad slot counts (the
/// discrete form allows 1..8), wrong polarity, or unknown combination names.
void validate_policy(const DiscretePolicy& policy);
void validate_policy(const ContinuousPolicy& policy);

std::string serialize_policy(const Policy& policy);
Policy parse_policy(const std::string& json_text);

/// One augmentation decision: which combination was drawn for a sample and
/// whether an adversarial copy was actually added.
struct AugmentRecord {
    std::string sample_id;
    std::string combination;
    bool applied = false;
    std::string note;

    bool operator==(const AugmentRecord&) const = default;
};

struct AugmentedCorpus {
    Corpus corpus;
    std::size_t ratio = 1;
    std::vector<AugmentRecord> log;
};

/// For each original sample, draws one sub-policy uniformly and applies it
/// with its probability. Adversarial copies are appended after their source
/// with ids "<id>#adv<i>" and provenance naming the applied transformations.
/// Failures are logged and leave the sample unaugmented. All randomness is
/// derived per sample from the rng's seed, so sample order does not matter.
AugmentedCorpus apply_discrete(const Corpus& corpus, const DiscretePolicy& policy,
                               const ResourceBundle& res, Rng& rng,
                               std::size_t ratio = 1);

/// `ratio` rounds per sample; each round draws a combination uniformly from
/// the policy's roster and applies it with its probability.
AugmentedCorpus apply_continuous(const Corpus& corpus, const ContinuousPolicy& policy,
                                 const ResourceBundle& res, Rng& rng,
                                 std::size_t ratio = 1);

/// Baseline: every sample gains one adversary of a uniformly drawn kind
/// (k=2 for AddKSentDiverse), failures aside.
AugmentedCorpus uniform_augment(const Corpus& corpus, const ResourceBundle& res,
                                Rng& rng);

} // namespace advforge
