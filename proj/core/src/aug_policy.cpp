#include "advforge/aug_policy.hpp"

#include <cmath>

#include <json.hpp>

#include "advforge/errors.hpp"

namespace advforge {

namespace {

const std::array<std::optional<AdversaryKind>, 5>& negative_choices() {
    static const std::array<std::optional<AdversaryKind>, 5> choices = {
        std::nullopt, AdversaryKind::AddSentDiverse, AdversaryKind::AddKSentDiverse,
        AdversaryKind::AddAnswerPosition, AdversaryKind::InvalidateAnswer};
    return choices;
}

const std::array<std::optional<AdversaryKind>, 3>& positive_choices() {
    static const std::array<std::optional<AdversaryKind>, 3> choices = {
        std::nullopt, AdversaryKind::PerturbAnswer, AdversaryKind::PerturbQuestion};
    return choices;
}

std::string short_name(AdversaryKind kind) {
    switch (kind) {
        case AdversaryKind::AddSentDiverse: return "AddS";
        case AdversaryKind::AddKSentDiverse: return "AddKS";
        case AdversaryKind::AddAnswerPosition: return "AddA";
        case AdversaryKind::InvalidateAnswer: return "IA";
        case AdversaryKind::PerturbAnswer: return "PA";
        case AdversaryKind::PerturbQuestion: return "PQ";
    }
    return "AddS";
}

void check_prob(double p, const char* where) {
    if (!(p >= 0.0 && p <= 1.0))
        throw ConfigError(std::string(where) + " probability " + std::to_string(p) +
                          " is outside [0, 1]");
}

} // namespace

std::vector<SubPolicy> enumerate_subpolicies() {
    std::vector<SubPolicy> out;
    out.reserve(90);
    for (const auto& neg : negative_choices())
        for (const auto& pos : positive_choices())
            for (double prob : kProbBins) out.push_back({neg, pos, prob});
    return out;
}

std::uint64_t discrete_space_size(std::size_t n) {
    if (n < 1 || n > 8)
        throw ConfigError("policy size " + std::to_string(n) + " is outside 1..8");
    std::uint64_t size = 1;
    for (std::size_t i = 0; i < n; ++i) size *= 90;
    return size;
}

std::string combination_name(const Combination& combo) {
    std::string name;
    if (combo.neg) name = short_name(*combo.neg);
    if (combo.pos) {
        if (!name.empty()) name += '-';
        name += short_name(*combo.pos);
    }
    return name;
}

std::optional<Combination> parse_combination(std::string_view name) {
    const std::size_t dash = name.find('-');
    Combination combo;
    if (dash == std::string_view::npos) {
        auto kind = parse_adversary(name);
        if (!kind) return std::nullopt;
        (is_negative(*kind) ? combo.neg : combo.pos) = *kind;
        return combo;
    }
    auto neg = parse_adversary(name.substr(0, dash));
    auto pos = parse_adversary(name.substr(dash + 1));
    if (!neg || !pos || !is_negative(*neg) || !is_positive(*pos)) return std::nullopt;
    combo.neg = neg;
    combo.pos = pos;
    // pairs outside the roster (the InvalidateAnswer ones) are not valid names
    for (const Combination& known : full_roster())
        if (known == combo) return combo;
    return std::nullopt;
}

const std::vector<Combination>& full_roster() {
    static const std::vector<Combination> roster = [] {
        std::vector<Combination> out;
        for (auto kind : {AdversaryKind::AddSentDiverse, AdversaryKind::AddKSentDiverse,
                          AdversaryKind::AddAnswerPosition, AdversaryKind::InvalidateAnswer})
            out.push_back({kind, std::nullopt});
        for (auto kind : {AdversaryKind::PerturbAnswer, AdversaryKind::PerturbQuestion})
            out.push_back({std::nullopt, kind});
        for (auto neg : {AdversaryKind::AddSentDiverse, AdversaryKind::AddKSentDiverse,
                         AdversaryKind::AddAnswerPosition})
            for (auto pos : {AdversaryKind::PerturbAnswer, AdversaryKind::PerturbQuestion})
                out.push_back({neg, pos});
        return out;
    }();
    return roster;
}

const std::vector<Combination>& roster_without_invalidate() {
    static const std::vector<Combination> roster = [] {
        std::vector<Combination> out;
        for (const Combination& c : full_roster())
            if (c.neg != AdversaryKind::InvalidateAnswer) out.push_back(c);
        return out;
    }();
    return roster;
}

ContinuousPolicy make_continuous_policy(bool include_invalidate) {
    ContinuousPolicy policy;
    const auto& roster = include_invalidate ? full_roster() : roster_without_invalidate();
    for (const Combination& c : roster) policy.probs[combination_name(c)] = 0.0;
    return policy;
}

void validate_policy(const DiscretePolicy& policy) {
    const std::size_t n = policy.sub_policies.size();
    if (n < 1 || n > 8)
        throw ConfigError("policy has " + std::to_string(n) +
                          " sub-policies, expected 1..8");
    for (const SubPolicy& sp : policy.sub_policies) {
        if (sp.neg && !is_negative(*sp.neg))
            throw ConfigError(std::string(adversary_name(*sp.neg)) +
                              " cannot fill a negative slot");
        if (sp.pos && !is_positive(*sp.pos))
            throw ConfigError(std::string(adversary_name(*sp.pos)) +
                              " cannot fill a positive slot");
        check_prob(sp.prob, "sub-policy");
    }
}

void validate_policy(const ContinuousPolicy& policy) {
    if (policy.probs.empty()) throw ConfigError("continuous policy has no combinations");
    for (const auto& [name, prob] : policy.probs) {
        if (!parse_combination(name))
            throw ConfigError("unknown combination \"" + name + "\"");
        check_prob(prob, name.c_str());
    }
}

std::string serialize_policy(const Policy& policy) {
    nlohmann::json root;
    if (const auto* d = std::get_if<DiscretePolicy>(&policy)) {
        root["type"] = "discrete";
        nlohmann::json subs = nlohmann::json::array();
        for (const SubPolicy& sp : d->sub_policies) {
            nlohmann::json s;
            s["neg"] = sp.neg ? nlohmann::json(std::string(adversary_name(*sp.neg)))
                              : nlohmann::json(nullptr);
            s["pos"] = sp.pos ? nlohmann::json(std::string(adversary_name(*sp.pos)))
                              : nlohmann::json(nullptr);
            s["prob"] = sp.prob;
            subs.push_back(std::move(s));
        }
        root["subpolicies"] = std::move(subs);
    } else {
        root["type"] = "continuous";
        nlohmann::json probs = nlohmann::json::object();
        for (const auto& [name, prob] : std::get<ContinuousPolicy>(policy).probs)
            probs[name] = prob;
        root["probs"] = std::move(probs);
    }
    return root.dump(2) + "\n";
}

namespace {

std::optional<AdversaryKind> parse_kind_field(const nlohmann::json& obj,
                                              const char* key) {
    if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
    if (!obj[key].is_string())
        throw ParseError(std::string("policy field \"") + key + "\" must be a string");
    const std::string name = obj[key].get<std::string>();
    if (name == "none") return std::nullopt;
    auto kind = parse_adversary(name);
    if (!kind) throw ParseError("unknown transformation \"" + name + "\"");
    return kind;
}

} // namespace

Policy parse_policy(const std::string& json_text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("policy JSON: ") + e.what());
    }
    if (!root.is_object() || !root.contains("type") || !root["type"].is_string())
        throw ParseError("policy JSON needs a string \"type\" field");
    const std::string type = root["type"].get<std::string>();

    if (type == "discrete") {
        if (!root.contains("subpolicies") || !root["subpolicies"].is_array())
            throw ParseError("discrete policy needs a \"subpolicies\" array");
        DiscretePolicy policy;
        for (const auto& s : root["subpolicies"]) {
            if (!s.is_object()) throw ParseError("sub-policy entries must be objects");
            SubPolicy sp;
            sp.neg = parse_kind_field(s, "neg");
            sp.pos = parse_kind_field(s, "pos");
            if (!s.contains("prob") || !s["prob"].is_number())
                throw ParseError("sub-policy needs a numeric \"prob\"");
            sp.prob = s["prob"].get<double>();
            policy.sub_policies.push_back(sp);
        }
        validate_policy(policy);
        return policy;
    }
    if (type == "continuous") {
        if (!root.contains("probs") || !root["probs"].is_object())
            throw ParseError("continuous policy needs a \"probs\" object");
        ContinuousPolicy policy;
        bool mentions_invalidate = false;
        for (const auto& [name, value] : root["probs"].items()) {
            if (!parse_combination(name))
                throw ParseError("unknown combination \"" + name + "\"");
            if (!value.is_number())
                throw ParseError("combination \"" + name + "\" needs a numeric value");
            policy.probs[name] = value.get<double>();
            if (name == "IA") mentions_invalidate = true;
        }
        // fill unlisted roster combinations with zero
        const auto& roster =
            mentions_invalidate ? full_roster() : roster_without_invalidate();
        for (const Combination& c : roster)
            policy.probs.emplace(combination_name(c), 0.0);
        validate_policy(policy);
        return policy;
    }
    throw ParseError("unknown policy type \"" + type + "\"");
}

namespace {

/// Applies one combination to one sample, logging the outcome. On success the
/// adversarial copy is appended to `out` under a derived id.
void apply_one(const QaSample& sample, const Combination& combo, double prob,
               const std::string& drawn_name, std::size_t repeat,
               const ResourceBundle& res, Rng& rng, AugmentedCorpus& out) {
    AugmentRecord record;
    record.sample_id = sample.id;
    record.combination = drawn_name;

    if (!combo.neg && !combo.pos) {
        record.note = "empty sub-policy";
        out.log.push_back(std::move(record));
        return;
    }
    if (!rng.bernoulli(prob)) {
        record.note = "probability draw";
        out.log.push_back(std::move(record));
        return;
    }
    try {
        std::string tag;
        QaSample adv = compose_adversary(sample, combo.neg, combo.pos, res, rng, 2,
                                         Placement::random, &tag);
        adv.id = sample.id + "#adv" + std::to_string(repeat);
        out.corpus.provenance[adv.id] = tag;
        out.corpus.samples.push_back(std::move(adv));
        record.applied = true;
    } catch (const NoDistractorError& e) {
        record.note = e.what();
    } catch (const UnsupportedCompositionError& e) {
        record.note = e.what();
    } catch (const PreconditionError& e) {
        record.note = e.what();
    }
    out.log.push_back(std::move(record));
}

} // namespace

AugmentedCorpus apply_discrete(const Corpus& corpus, const DiscretePolicy& policy,
                               const ResourceBundle& res, Rng& rng, std::size_t ratio) {
    validate_policy(policy);
    if (ratio < 1) throw ConfigError("ratio must be at least 1");
    AugmentedCorpus out;
    out.ratio = ratio;
    out.corpus.provenance = corpus.provenance;
    for (const QaSample& sample : corpus.samples) {
        out.corpus.samples.push_back(sample);
        Rng sample_rng = rng.child(sample.id);
        for (std::size_t r = 0; r < ratio; ++r) {
            Rng round_rng = sample_rng.child(static_cast<std::uint64_t>(r));
            const SubPolicy& sp =
                policy.sub_policies[round_rng.uniform_below(policy.sub_policies.size())];
            Combination combo{sp.neg, sp.pos};
            const std::string name =
                (combo.neg || combo.pos) ? combination_name(combo) : "none";
            apply_one(sample, combo, sp.prob, name, r, res, round_rng, out);
        }
    }
    return out;
}

AugmentedCorpus apply_continuous(const Corpus& corpus, const ContinuousPolicy& policy,
                                 const ResourceBundle& res, Rng& rng,
                                 std::size_t ratio) {
    validate_policy(policy);
    if (ratio < 1) throw ConfigError("ratio must be at least 1");
    // the policy's roster, in canonical draw order
    std::vector<Combination> roster;
    for (const Combination& c : full_roster())
        if (policy.probs.count(combination_name(c))) roster.push_back(c);
    if (roster.empty()) throw ConfigError("continuous policy has no known combinations");

    AugmentedCorpus out;
    out.ratio = ratio;
    out.corpus.provenance = corpus.provenance;
    for (const QaSample& sample : corpus.samples) {
        out.corpus.samples.push_back(sample);
        Rng sample_rng = rng.child(sample.id);
        for (std::size_t r = 0; r < ratio; ++r) {
            Rng round_rng = sample_rng.child(static_cast<std::uint64_t>(r));
            const Combination& combo = roster[round_rng.uniform_below(roster.size())];
            const std::string name = combination_name(combo);
            apply_one(sample, combo, policy.probs.at(name), name, r, res, round_rng,
                      out);
        }
    }
    return out;
}

AugmentedCorpus uniform_augment(const Corpus& corpus, const ResourceBundle& res,
                                Rng& rng) {
    static const std::array<AdversaryKind, 6> kinds = {
        AdversaryKind::AddSentDiverse,   AdversaryKind::AddKSentDiverse,
        AdversaryKind::AddAnswerPosition, AdversaryKind::InvalidateAnswer,
        AdversaryKind::PerturbAnswer,    AdversaryKind::PerturbQuestion};
    AugmentedCorpus out;
    out.corpus.provenance = corpus.provenance;
    for (const QaSample& sample : corpus.samples) {
        out.corpus.samples.push_back(sample);
        Rng sample_rng = rng.child(sample.id);
        const AdversaryKind kind = kinds[sample_rng.uniform_below(kinds.size())];
        Combination combo;
        (is_negative(kind) ? combo.neg : combo.pos) = kind;
        apply_one(sample, combo, 1.0, combination_name(combo), 0, res, sample_rng, out);
    }
    return out;
}

} // namespace advforge
