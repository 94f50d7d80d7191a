#include "advforge/adversary_forge.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "advforge/errors.hpp"
#include "advforge/text.hpp"

namespace advforge {

namespace {

constexpr std::size_t kNoOrigin = static_cast<std::size_t>(-1);
const std::string kSlotMarker = "\x01";

const std::set<std::string>& aux_words() {
    static const std::set<std::string> words = {
        "is",  "are",  "was",   "were", "am",  "do",    "does", "did",
        "can", "could", "shall", "should", "will", "would", "may", "might",
        "must", "has", "have",  "had"};
    return words;
}

bool is_aux(const std::string& lc) { return aux_words().count(lc) > 0; }

bool is_do_aux(const std::string& lc) { return lc == "do" || lc == "does" || lc == "did"; }

bool is_prep(const std::string& lc) {
    static const std::set<std::string> preps = {"in", "on", "at", "of",
                                                "from", "by", "to", "for"};
    return preps.count(lc) > 0;
}

bool is_wh(const std::string& lc) {
    static const std::set<std::string> whs = {"what", "which", "who", "where",
                                              "when", "why", "how", "whom"};
    return whs.count(lc) > 0;
}

/// Entity type suggested by a type-ish noun ("country", "year", ...).
std::optional<EntityType> type_for_noun(const std::string& lc) {
    static const std::map<std::string, EntityType> table = {
        {"country", EntityType::place},   {"city", EntityType::place},
        {"place", EntityType::place},     {"state", EntityType::place},
        {"region", EntityType::place},    {"continent", EntityType::place},
        {"location", EntityType::place},  {"town", EntityType::place},
        {"river", EntityType::place},     {"mountain", EntityType::place},
        {"person", EntityType::person},   {"man", EntityType::person},
        {"woman", EntityType::person},    {"king", EntityType::person},
        {"queen", EntityType::person},    {"leader", EntityType::person},
        {"president", EntityType::person}, {"author", EntityType::person},
        {"writer", EntityType::person},   {"scientist", EntityType::person},
        {"organization", EntityType::org}, {"company", EntityType::org},
        {"group", EntityType::org},       {"agency", EntityType::org},
        {"team", EntityType::org},        {"university", EntityType::org},
        {"army", EntityType::org},        {"party", EntityType::org},
        {"year", EntityType::number},     {"number", EntityType::number},
        {"amount", EntityType::number},   {"quantity", EntityType::number},
        {"century", EntityType::number},  {"date", EntityType::number},
        {"population", EntityType::number},
    };
    auto it = table.find(lc);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> lowered(const std::vector<std::string>& tokens) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const std::string& t : tokens) out.push_back(lower(t));
    return out;
}

std::string capitalize_first(std::string text) {
    for (char& c : text) {
        if (std::isalpha(static_cast<unsigned char>(c))) {
            c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            break;
        }
        if (!std::isspace(static_cast<unsigned char>(c))) break;
    }
    return text;
}

std::vector<std::string> question_word_tokens(const std::string& question) {
    std::vector<std::string> toks = token_texts(question);
    while (!toks.empty() &&
           (toks.back() == "?" || toks.back() == "." || toks.back() == "!"))
        toks.pop_back();
    return toks;
}

} // namespace

bool is_negative(AdversaryKind kind) {
    return kind == AdversaryKind::AddSentDiverse ||
           kind == AdversaryKind::AddKSentDiverse ||
           kind == AdversaryKind::AddAnswerPosition ||
           kind == AdversaryKind::InvalidateAnswer;
}

bool is_positive(AdversaryKind kind) { return !is_negative(kind); }

std::string_view adversary_name(AdversaryKind kind) {
    switch (kind) {
        case AdversaryKind::AddSentDiverse: return "AddSentDiverse";
        case AdversaryKind::AddKSentDiverse: return "AddKSentDiverse";
        case AdversaryKind::AddAnswerPosition: return "AddAnswerPosition";
        case AdversaryKind::InvalidateAnswer: return "InvalidateAnswer";
        case AdversaryKind::PerturbAnswer: return "PerturbAnswer";
        case AdversaryKind::PerturbQuestion: return "PerturbQuestion";
    }
    return "AddSentDiverse";
}

std::optional<AdversaryKind> parse_adversary(std::string_view name) {
    if (name == "AddSentDiverse" || name == "AddS") return AdversaryKind::AddSentDiverse;
    if (name == "AddKSentDiverse" || name == "AddKS")
        return AdversaryKind::AddKSentDiverse;
    if (name == "AddAnswerPosition" || name == "AddA")
        return AdversaryKind::AddAnswerPosition;
    if (name == "InvalidateAnswer" || name == "IA") return AdversaryKind::InvalidateAnswer;
    if (name == "PerturbAnswer" || name == "PA") return AdversaryKind::PerturbAnswer;
    if (name == "PerturbQuestion" || name == "PQ") return AdversaryKind::PerturbQuestion;
    return std::nullopt;
}

std::optional<Placement> parse_placement(std::string_view name) {
    if (name == "random") return Placement::random;
    if (name == "prepend") return Placement::prepend;
    if (name == "append") return Placement::append;
    if (name == "before_answer") return Placement::before_answer;
    return std::nullopt;
}

std::vector<EntitySpan> detect_entities(const std::vector<std::string>& tokens,
                                        const Gazetteer& gazetteer) {
    std::vector<EntitySpan> spans;
    const std::size_t max_len = std::max<std::size_t>(1, gazetteer.max_words());
    std::size_t i = 0;
    while (i < tokens.size()) {
        if (!is_word(tokens[i])) {
            ++i;
            continue;
        }
        bool matched = false;
        for (std::size_t len = std::min(max_len, tokens.size() - i); len >= 1; --len) {
            std::string phrase;
            bool ok = true;
            for (std::size_t j = i; j < i + len; ++j) {
                if (!is_word(tokens[j])) {
                    ok = false;
                    break;
                }
                if (j > i) phrase += ' ';
                phrase += tokens[j];
            }
            if (!ok) continue;
            if (auto type = gazetteer.type_of(phrase)) {
                spans.push_back({i, i + len, *type});
                i += len;
                matched = true;
                break;
            }
        }
        if (matched) continue;
        if (is_number(tokens[i])) spans.push_back({i, i + 1, EntityType::number});
        ++i;
    }
    return spans;
}

std::string render_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (const std::string& tok : tokens) {
        if (tok.empty()) continue;
        const bool attach =
            tok.size() == 1 && !std::isalnum(static_cast<unsigned char>(tok[0]));
        if (!out.empty() && !attach) out += ' ';
        out += tok;
    }
    return out;
}

bool semantic_difference_check(const std::vector<std::string>& original,
                               const std::vector<std::string>& distractor,
                               const PosLexicon& pos, const Gazetteer* gazetteer) {
    std::vector<std::string> distractor_lc = lowered(distractor);
    auto phrase_present = [&](const std::vector<std::string>& phrase) {
        if (phrase.empty()) return true;
        for (std::size_t i = 0; i + phrase.size() <= distractor_lc.size(); ++i) {
            bool all = true;
            for (std::size_t j = 0; j < phrase.size(); ++j)
                if (distractor_lc[i + j] != phrase[j]) {
                    all = false;
                    break;
                }
            if (all) return true;
        }
        return false;
    };

    // content phrases of the original: entity phrases (if a gazetteer is
    // given) plus content-tagged or numeric tokens outside them
    std::vector<std::vector<std::string>> phrases;
    std::vector<bool> covered(original.size(), false);
    if (gazetteer) {
        for (const EntitySpan& span : detect_entities(original, *gazetteer)) {
            std::vector<std::string> phrase;
            for (std::size_t i = span.begin; i < span.end; ++i) {
                phrase.push_back(lower(original[i]));
                covered[i] = true;
            }
            phrases.push_back(std::move(phrase));
        }
    }
    for (std::size_t i = 0; i < original.size(); ++i) {
        if (covered[i] || !is_word(original[i])) continue;
        std::set<PosTag> tags = tag_token(pos, original[i], i == 0);
        const bool content = tags.count(PosTag::noun) || tags.count(PosTag::verb) ||
                             tags.count(PosTag::adjective) ||
                             tags.count(PosTag::adverb) || is_number(original[i]);
        if (content) phrases.push_back({lower(original[i])});
    }

    std::set<std::vector<std::string>> seen;
    std::size_t absent = 0;
    for (const auto& phrase : phrases) {
        if (!seen.insert(phrase).second) continue;
        if (!phrase_present(phrase)) ++absent;
    }
    return absent >= 2;
}

StatementDraft statement_from_question(const std::string& question,
                                       const ResourceBundle& res) {
    (void)res;
    std::vector<std::string> toks = question_word_tokens(question);
    std::vector<std::string> lc = lowered(toks);

    auto first_aux = [&](std::size_t from) -> std::size_t {
        for (std::size_t i = from; i < lc.size(); ++i)
            if (is_aux(lc[i])) return i;
        return kNoOrigin;
    };
    auto slice = [&](std::size_t from, std::size_t to) {
        std::vector<std::string> out;
        for (std::size_t i = from; i < to && i < toks.size(); ++i)
            out.push_back(toks[i]);
        return out;
    };

    StatementDraft draft;
    std::vector<std::string>& stmt = draft.tokens;

    auto finish = [&](std::optional<EntityType> type) {
        draft.slot_type = type;
        for (std::size_t i = 0; i < stmt.size(); ++i)
            if (stmt[i] == kSlotMarker) draft.slot_index = i;
        return draft;
    };

    // "In what N aux SUBJ TAIL?" -> "SUBJ aux TAIL in the N of <slot>."
    if (toks.size() >= 5 && is_prep(lc[0]) && (lc[1] == "what" || lc[1] == "which")) {
        std::size_t a = first_aux(3);
        if (a != kNoOrigin && a + 1 < toks.size()) {
            std::vector<std::string> noun = slice(2, a);
            std::vector<std::string> rest = slice(a + 1, toks.size());
            stmt.push_back(rest[0]);
            stmt.push_back(toks[a]);
            for (std::size_t i = 1; i < rest.size(); ++i) stmt.push_back(rest[i]);
            stmt.push_back(lc[0]);
            stmt.push_back("the");
            for (auto& n : noun) stmt.push_back(n);
            stmt.push_back("of");
            stmt.push_back(kSlotMarker);
            stmt.push_back(".");
            return finish(type_for_noun(lower(noun.back())));
        }
    }

    // "Who ...?" -> "<slot> ...."
    if (lc[0] == "who" || lc[0] == "whom") {
        if (toks.size() >= 2) {
            stmt.push_back(kSlotMarker);
            for (std::size_t i = 1; i < toks.size(); ++i) stmt.push_back(toks[i]);
            stmt.push_back(".");
            return finish(EntityType::person);
        }
    }

    // "Where/When aux SUBJ TAIL?" -> "SUBJ (aux) TAIL in <slot>."
    if ((lc[0] == "where" || lc[0] == "when") && toks.size() >= 3 && is_aux(lc[1])) {
        for (std::size_t i = 2; i < toks.size(); ++i) stmt.push_back(toks[i]);
        if (!is_do_aux(lc[1])) stmt.push_back(toks[1]);
        stmt.push_back("in");
        stmt.push_back(kSlotMarker);
        stmt.push_back(".");
        return finish(lc[0] == "where" ? EntityType::place : EntityType::number);
    }

    // "How many N ...?" -> "There are <slot> N ...."
    if (lc[0] == "how" && toks.size() >= 3 && lc[1] == "many") {
        std::vector<std::string> rest = slice(3, toks.size());
        if (!rest.empty() && is_aux(lower(rest.front()))) rest.erase(rest.begin());
        if (!rest.empty() && lower(rest.back()) == "there") rest.pop_back();
        stmt.push_back("There");
        stmt.push_back("are");
        stmt.push_back(kSlotMarker);
        stmt.push_back(toks[2]);
        for (auto& r : rest) stmt.push_back(r);
        stmt.push_back(".");
        return finish(EntityType::number);
    }

    // "Why/How aux SUBJ TAIL?" -> "SUBJ (aux) TAIL because of <slot>."
    if ((lc[0] == "why" || lc[0] == "how") && toks.size() >= 3 && is_aux(lc[1])) {
        for (std::size_t i = 2; i < toks.size(); ++i) stmt.push_back(toks[i]);
        if (!is_do_aux(lc[1])) stmt.push_back(toks[1]);
        stmt.push_back("because");
        stmt.push_back("of");
        stmt.push_back(kSlotMarker);
        stmt.push_back(".");
        return finish(std::nullopt);
    }

    if (lc[0] == "what" || lc[0] == "which") {
        // "What aux REST?" -> "REST aux <slot>."
        if (toks.size() >= 3 && is_aux(lc[1])) {
            for (std::size_t i = 2; i < toks.size(); ++i) stmt.push_back(toks[i]);
            stmt.push_back(toks[1]);
            stmt.push_back(kSlotMarker);
            stmt.push_back(".");
            return finish(std::nullopt);
        }
        // "What N aux REST?" -> "REST aux <slot>."
        std::size_t a = first_aux(2);
        if (a != kNoOrigin && a + 1 < toks.size() && a > 1) {
            std::vector<std::string> noun = slice(1, a);
            for (std::size_t i = a + 1; i < toks.size(); ++i) stmt.push_back(toks[i]);
            stmt.push_back(toks[a]);
            stmt.push_back(kSlotMarker);
            stmt.push_back(".");
            return finish(type_for_noun(lower(noun.back())));
        }
    }

    // fallback: "The answer to <core> is <slot>."
    std::size_t start = !lc.empty() && is_wh(lc[0]) ? 1 : 0;
    stmt.push_back("The");
    stmt.push_back("answer");
    if (start < toks.size()) {
        stmt.push_back("to");
        for (std::size_t i = start; i < toks.size(); ++i) stmt.push_back(toks[i]);
    }
    stmt.push_back("is");
    stmt.push_back(kSlotMarker);
    stmt.push_back(".");
    return finish(std::nullopt);
}

namespace {

/// Antonyms of `word`; widened adds the synonyms of each antonym.
std::vector<std::string> antonym_pool(const Lexicon& lex, const std::string& word,
                                      bool widened) {
    const LexiconEntry* entry = lex.find(word);
    if (!entry) return {};
    std::set<std::string> pool(entry->antonyms.begin(), entry->antonyms.end());
    if (widened)
        for (const std::string& ant : entry->antonyms)
            if (const LexiconEntry* ae = lex.find(ant))
                for (const std::string& syn : ae->synonyms)
                    if (syn != word) pool.insert(syn);
    return {pool.begin(), pool.end()};
}

bool excluded_name(const std::string& name, const std::vector<std::string>& exclude) {
    for (const std::string& ex : exclude)
        if (lower(ex) == lower(name)) return true;
    return false;
}

/// Gold-typed entity if recognizable, else the template's slot type, else any
/// gazetteer name. Throws NoDistractorError when nothing is available.
std::string pick_fake_answer(const std::vector<std::string>& golds,
                             std::optional<EntityType> slot_type,
                             const ResourceBundle& res, Rng& rng) {
    std::optional<EntityType> type;
    if (!golds.empty()) {
        type = res.gazetteer.type_of(golds[0]);
        if (!type && is_number(golds[0])) type = EntityType::number;
    }
    if (!type) type = slot_type;
    if (type)
        if (auto drawn = res.gazetteer.sample(*type, rng, golds)) return *drawn;

    // fallback: any gazetteer phrase at all
    std::vector<std::string> all;
    for (EntityType t : {EntityType::person, EntityType::place, EntityType::org,
                         EntityType::number})
        for (const std::string& name : res.gazetteer.of_type(t))
            if (!excluded_name(name, golds)) all.push_back(name);
    if (all.empty())
        throw NoDistractorError("gazetteer offers no usable fake answer");
    return all[rng.uniform_below(all.size())];
}

std::vector<std::string> gold_texts(const QaSample& sample) {
    std::vector<std::string> out;
    for (const AnswerSpan& a : sample.answers) out.push_back(a.text);
    return out;
}

/// Statement tokens with the slot filled (or removed when `filler` is empty).
std::vector<std::string> fill_slot(const std::vector<std::string>& tokens,
                                   std::size_t slot_index,
                                   const std::vector<std::string>& filler) {
    std::vector<std::string> out;
    out.reserve(tokens.size() + filler.size());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i == slot_index) {
            for (const std::string& f : filler) out.push_back(f);
        } else {
            out.push_back(tokens[i]);
        }
    }
    return out;
}

/// The substitution-and-check loop shared by the distractor builders.
/// `verbatim` carries the exact answer text for AddAnswerPosition; otherwise
/// the slot is filled with a drawn fake answer.
std::string make_distractor_text(const std::string& question,
                                 const std::vector<std::string>& golds,
                                 const std::optional<std::string>& verbatim,
                                 const ResourceBundle& res, Rng& rng) {
    StatementDraft draft = statement_from_question(question, res);

    std::vector<std::string> original_filler;
    if (verbatim)
        original_filler = token_texts(*verbatim);
    else if (!golds.empty())
        original_filler = token_texts(golds[0]);
    const std::vector<std::string> original =
        fill_slot(draft.tokens, draft.slot_index, original_filler);

    for (int attempt = 0; attempt < 10; ++attempt) {
        const bool widened = attempt > 0;
        std::vector<std::string> tokens = draft.tokens;
        std::vector<EntitySpan> spans = detect_entities(tokens, res.gazetteer);

        std::vector<std::string> out;
        std::size_t out_slot = kNoOrigin;
        std::size_t i = 0;
        while (i < tokens.size()) {
            if (i == draft.slot_index) {
                out_slot = out.size();
                out.push_back(kSlotMarker);
                ++i;
                continue;
            }
            const EntitySpan* span = nullptr;
            for (const EntitySpan& s : spans)
                if (s.begin == i) span = &s;
            if (span && span->end > draft.slot_index && span->begin < draft.slot_index)
                span = nullptr;  // never straddle the slot
            if (span) {
                std::string phrase;
                for (std::size_t j = span->begin; j < span->end; ++j) {
                    if (j > span->begin) phrase += ' ';
                    phrase += tokens[j];
                }
                std::vector<std::string> exclude = golds;
                exclude.push_back(phrase);
                if (auto repl = res.gazetteer.sample(span->type, rng, exclude)) {
                    for (const std::string& t : token_texts(*repl)) out.push_back(t);
                } else {
                    for (std::size_t j = span->begin; j < span->end; ++j)
                        out.push_back(tokens[j]);
                }
                i = span->end;
                continue;
            }
            if (is_word(tokens[i])) {
                std::set<PosTag> tags = tag_token(res.pos, tokens[i], i == 0);
                const bool content =
                    tags.count(PosTag::noun) || tags.count(PosTag::verb) ||
                    tags.count(PosTag::adjective) || tags.count(PosTag::adverb);
                if (content) {
                    std::vector<std::string> pool =
                        antonym_pool(res.lexicon, tokens[i], widened);
                    if (!pool.empty()) {
                        out.push_back(pool[rng.uniform_below(pool.size())]);
                        ++i;
                        continue;
                    }
                }
            }
            out.push_back(tokens[i]);
            ++i;
        }

        std::vector<std::string> filler =
            verbatim ? token_texts(*verbatim)
                     : token_texts(pick_fake_answer(golds, draft.slot_type, res, rng));
        std::vector<std::string> candidate = fill_slot(out, out_slot, filler);

        if (semantic_difference_check(original, candidate, res.pos, &res.gazetteer))
            return capitalize_first(render_tokens(candidate));
    }
    throw NoDistractorError("no distractor passed the difference check in 10 attempts");
}

/// Rebuilds a sample from an edited sentence list. `origin[i]` names the base
/// sentence the i-th new sentence came from (kNoOrigin for inserted text).
/// Original separators survive between sentences that stay adjacent; new
/// adjacencies get a single space. Answers follow their sentence (keeping
/// their offset within it) and are dropped when it is gone.
QaSample rebuild_sample(const QaSample& base, const std::vector<std::string>& texts,
                        const std::vector<std::size_t>& origin) {
    QaSample out;
    out.id = base.id;
    out.question = base.question;
    out.is_impossible = base.is_impossible;

    const std::string prefix =
        base.sentences.empty() ? ""
                               : base.context.substr(0, base.sentences[0].char_start);
    const std::string suffix =
        base.sentences.empty() ? "" : base.context.substr(base.sentences.back().char_end());
    auto sep_after = [&](std::size_t j) {
        return base.context.substr(base.sentences[j].char_end(),
                                   base.sentences[j + 1].char_start -
                                       base.sentences[j].char_end());
    };

    std::string ctx = prefix;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (i > 0) {
            const bool kept_adjacent = origin[i - 1] != kNoOrigin &&
                                       origin[i] != kNoOrigin &&
                                       origin[i] == origin[i - 1] + 1;
            ctx += kept_adjacent ? sep_after(origin[i - 1]) : " ";
        }
        out.sentences.push_back({texts[i], ctx.size()});
        ctx += texts[i];
    }
    ctx += suffix;
    out.context = std::move(ctx);

    for (const AnswerSpan& a : base.answers) {
        const std::size_t j = locate_answer_sentence(base, a);
        for (std::size_t i = 0; i < origin.size(); ++i) {
            if (origin[i] != j) continue;
            const std::size_t intra = a.char_start - base.sentences[j].char_start;
            out.answers.push_back({out.sentences[i].char_start + intra, a.text});
            break;
        }
    }
    return out;
}

} // namespace

QaSample insert_distractor(const QaSample& sample, const Distractor& distractor) {
    const std::size_t n = sample.sentences.size();
    if (distractor.insert_before_sentence > n)
        throw PreconditionError("insertion position " +
                                std::to_string(distractor.insert_before_sentence) +
                                " exceeds sentence count " + std::to_string(n));
    if (distractor.text.empty())
        throw PreconditionError("empty distractor text");
    std::vector<std::string> texts;
    std::vector<std::size_t> origin;
    for (std::size_t i = 0; i <= n; ++i) {
        if (i == distractor.insert_before_sentence) {
            texts.push_back(distractor.text);
            origin.push_back(kNoOrigin);
        }
        if (i < n) {
            texts.push_back(sample.sentences[i].text);
            origin.push_back(i);
        }
    }
    return rebuild_sample(sample, texts, origin);
}

std::pair<QaSample, Distractor> add_sent_diverse(const QaSample& sample,
                                                 const ResourceBundle& res, Rng& rng) {
    if (sample.question.empty()) throw PreconditionError("sample has no question");
    std::string text =
        make_distractor_text(sample.question, gold_texts(sample), std::nullopt, res, rng);
    Distractor d;
    d.text = std::move(text);
    d.insert_before_sentence = rng.uniform_below(sample.sentences.size() + 1);
    d.carries_answer = false;
    return {insert_distractor(sample, d), d};
}

QaSample add_k_sent_diverse(const QaSample& sample, std::size_t k,
                            const ResourceBundle& res, Rng& rng) {
    if (k < 1) throw PreconditionError("k must be at least 1");
    QaSample current = sample;
    std::size_t successes = 0;
    for (std::size_t i = 0; i < k; ++i) {
        try {
            current = add_sent_diverse(current, res, rng).first;
            ++successes;
        } catch (const NoDistractorError&) {
            // keep going; only total failure is fatal
        }
    }
    if (successes == 0)
        throw NoDistractorError("all " + std::to_string(k) + " distractors failed");
    return current;
}

QaSample add_answer_position(const QaSample& sample, const ResourceBundle& res,
                             Rng& rng, Placement placement) {
    if (sample.answers.empty())
        throw PreconditionError("add_answer_position needs an answerable sample");
    std::string text = make_distractor_text(sample.question, gold_texts(sample),
                                            sample.answers[0].text, res, rng);
    Distractor d;
    d.text = std::move(text);
    d.carries_answer = true;
    switch (placement) {
        case Placement::random:
            d.insert_before_sentence = rng.uniform_below(sample.sentences.size() + 1);
            break;
        case Placement::prepend: d.insert_before_sentence = 0; break;
        case Placement::append: d.insert_before_sentence = sample.sentences.size(); break;
        case Placement::before_answer:
            d.insert_before_sentence = locate_answer_sentence(sample, sample.answers[0]);
            break;
    }
    return insert_distractor(sample, d);
}

QaSample invalidate_answer(const QaSample& sample, const ResourceBundle& res, Rng& rng) {
    if (sample.answers.empty())
        throw PreconditionError("invalidate_answer needs an answerable sample");
    const std::size_t victim = locate_answer_sentence(sample, sample.answers[0]);

    std::vector<std::string> texts;
    std::vector<std::size_t> origin;
    for (std::size_t i = 0; i < sample.sentences.size(); ++i) {
        if (i == victim) continue;
        texts.push_back(sample.sentences[i].text);
        origin.push_back(i);
    }
    QaSample stripped = rebuild_sample(sample, texts, origin);
    stripped.answers.clear();
    stripped.is_impossible = true;

    // the distractor must still differ from the true statement, and must not
    // smuggle any original gold back in
    std::string text =
        make_distractor_text(sample.question, gold_texts(sample), std::nullopt, res, rng);
    Distractor d;
    d.text = std::move(text);
    d.insert_before_sentence = rng.uniform_below(stripped.sentences.size() + 1);
    return insert_distractor(stripped, d);
}

QaSample perturb_answer(const QaSample& sample, const ResourceBundle& res, Rng& rng,
                        bool* changed) {
    (void)rng;  // the greedy argmax is fully deterministic
    if (changed) *changed = false;
    if (sample.answers.empty())
        throw PreconditionError("perturb_answer needs an answerable sample");
    const std::size_t target = locate_answer_sentence(sample, sample.answers[0]);
    const Sentence& sent = sample.sentences[target];

    // perturbation may only touch bytes after every gold inside this
    // sentence, which keeps each answer's offset and text bit-identical
    std::size_t guard_end = 0;
    for (const AnswerSpan& a : sample.answers)
        if (a.char_start >= sent.char_start && a.char_end() <= sent.char_end())
            guard_end = std::max(guard_end, a.char_end() - sent.char_start);

    std::vector<Token> toks = tokenize(sent.text);
    std::vector<std::string> texts;
    for (const Token& t : toks) texts.push_back(t.text);
    std::vector<EntitySpan> spans = detect_entities(texts, res.gazetteer);
    auto in_entity = [&](std::size_t i) {
        for (const EntitySpan& s : spans)
            if (i >= s.begin && i < s.end) return true;
        return false;
    };

    std::map<std::size_t, std::string> replacements;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        if (!is_word(texts[i]) || toks[i].char_start < guard_end || in_entity(i))
            continue;
        std::set<PosTag> tags = tag_token(res.pos, texts[i], i == 0);
        if (!tags.count(PosTag::verb) && !tags.count(PosTag::adverb) &&
            !tags.count(PosTag::adjective))
            continue;
        auto neighbors = nearest_neighbors(res.embeddings, lower(texts[i]), 20);
        if (neighbors.empty()) continue;

        const std::string original = texts[i];
        double best_score = lm_score(res.lm, texts);
        std::string best = original;
        for (const auto& [word, sim] : neighbors) {
            texts[i] = word;
            const double score = lm_score(res.lm, texts);
            if (score > best_score) {  // ties keep the earlier candidate
                best_score = score;
                best = word;
            }
        }
        texts[i] = best;
        if (best != original) replacements[i] = best;
    }
    if (replacements.empty()) return sample;

    std::string new_text;
    std::size_t cursor = 0;
    for (const auto& [idx, word] : replacements) {
        new_text += sent.text.substr(cursor, toks[idx].char_start - cursor);
        new_text += word;
        cursor = toks[idx].char_end();
    }
    new_text += sent.text.substr(cursor);

    std::vector<std::string> sentence_texts;
    std::vector<std::size_t> origin;
    for (std::size_t i = 0; i < sample.sentences.size(); ++i) {
        sentence_texts.push_back(i == target ? new_text : sample.sentences[i].text);
        origin.push_back(i);
    }
    if (changed) *changed = true;
    return rebuild_sample(sample, sentence_texts, origin);
}

std::vector<std::string> question_rewrites(const std::string& question) {
    std::vector<std::string> toks = question_word_tokens(question);
    if (toks.empty()) return {};
    std::vector<std::string> lc = lowered(toks);

    std::vector<std::string> out;
    auto add = [&](std::string candidate) {
        if (out.size() >= 10) return;
        candidate = capitalize_first(std::move(candidate));
        if (candidate == question) return;
        for (const std::string& seen : out)
            if (seen == candidate) return;
        out.push_back(std::move(candidate));
    };
    auto join_from = [&](std::size_t from) {
        std::vector<std::string> rest(toks.begin() + from, toks.end());
        return render_tokens(rest);
    };

    // "In what N aux ...?" -> bare wh-word form
    if (toks.size() >= 5 && is_prep(lc[0]) && (lc[1] == "what" || lc[1] == "which")) {
        std::size_t a = kNoOrigin;
        for (std::size_t i = 3; i < lc.size(); ++i)
            if (is_aux(lc[i])) {
                a = i;
                break;
            }
        if (a != kNoOrigin) {
            std::optional<EntityType> type = type_for_noun(lc[a - 1]);
            std::string wh = "What";
            if (type == EntityType::place) wh = "Where";
            else if (type == EntityType::number) wh = "When";
            else if (type == EntityType::person) wh = "Who";
            add(wh + " " + join_from(a) + "?");
        }
    }
    // "Where ...?" <-> "In what place ...?", "When ...?" <-> "In what year ...?"
    if (lc[0] == "where" && toks.size() >= 2) add("In what place " + join_from(1) + "?");
    if (lc[0] == "when" && toks.size() >= 2) add("In what year " + join_from(1) + "?");

    // "What is the Y of Z?" -> "Z's Y is what?"
    if ((lc[0] == "what" || lc[0] == "which") && toks.size() >= 6 && is_aux(lc[1]) &&
        lc[2] == "the") {
        std::size_t of_idx = kNoOrigin;
        for (std::size_t i = 4; i < lc.size(); ++i)
            if (lc[i] == "of") {
                of_idx = i;
                break;
            }
        if (of_idx != kNoOrigin && of_idx + 1 < toks.size()) {
            std::vector<std::string> y(toks.begin() + 3, toks.begin() + of_idx);
            std::vector<std::string> z(toks.begin() + of_idx + 1, toks.end());
            add(render_tokens(z) + "'s " + render_tokens(y) + " " + toks[1] + " what?");
        }
    }
    // "Z's Y aux what?" -> "What aux Z's Y?"
    if (toks.size() >= 3 && lc.back() == "what" && is_aux(lc[lc.size() - 2])) {
        std::vector<std::string> subj(toks.begin(), toks.end() - 2);
        add("What " + toks[toks.size() - 2] + " " + render_tokens(subj) + "?");
    }
    // generic inversion: "<wh> aux REST?" -> "REST aux <wh>?"
    if (toks.size() >= 3 && is_wh(lc[0]) && is_aux(lc[1]))
        add(join_from(2) + " " + toks[1] + " " + lower(toks[0]) + "?");

    // light lexical swaps
    if (lc[0] == "what" && toks.size() >= 2) add("Which" + question.substr(
        question.find(toks[0]) + toks[0].size()));
    if (lc[0] == "which" && toks.size() >= 2) add("What" + question.substr(
        question.find(toks[0]) + toks[0].size()));
    if (lc[0] == "who" && toks.size() >= 2) add("What person " + join_from(1) + "?");
    if (lc[0] == "how" && toks.size() >= 3 && lc[1] == "many")
        add("What number of " + join_from(2) + "?");
    if (lc[0] == "where" && toks.size() >= 2) add("At what location " + join_from(1) + "?");
    if (lc[0] == "when" && toks.size() >= 2) add("At what time " + join_from(1) + "?");

    return out;
}

QaSample perturb_question(const QaSample& sample, const ResourceBundle& res, Rng& rng,
                          bool* changed) {
    (void)rng;  // ranking is deterministic
    if (changed) *changed = false;
    if (sample.question.empty()) throw PreconditionError("sample has no question");

    std::vector<std::string> candidates = question_rewrites(sample.question);
    if (candidates.empty()) return sample;

    const std::vector<double> source_mean =
        mean_embedding(res.embeddings, token_texts(sample.question));
    std::size_t best = 0;
    double best_sim = -2.0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double sim = cosine_similarity(
            source_mean, mean_embedding(res.embeddings, token_texts(candidates[i])));
        if (sim > best_sim) {  // ties keep the earliest candidate
            best_sim = sim;
            best = i;
        }
    }
    QaSample out = sample;
    out.question = candidates[best];
    if (changed) *changed = true;
    return out;
}

QaSample compose_adversary(const QaSample& sample, std::optional<AdversaryKind> neg,
                           std::optional<AdversaryKind> pos, const ResourceBundle& res,
                           Rng& rng, std::size_t k, Placement placement,
                           std::string* tag_out) {
    if (!neg && !pos)
        throw PreconditionError("composition needs at least one transformation");
    if (neg && !is_negative(*neg))
        throw PreconditionError(std::string(adversary_name(*neg)) +
                                " is not a negative transformation");
    if (pos && !is_positive(*pos))
        throw PreconditionError(std::string(adversary_name(*pos)) +
                                " is not a positive transformation");
    if (neg == AdversaryKind::InvalidateAnswer && pos == AdversaryKind::PerturbAnswer)
        throw UnsupportedCompositionError(
            "InvalidateAnswer removes the answer sentence PerturbAnswer needs");

    QaSample current = sample;
    std::string tag;
    if (neg) {
        switch (*neg) {
            case AdversaryKind::AddSentDiverse:
                current = add_sent_diverse(current, res, rng).first;
                break;
            case AdversaryKind::AddKSentDiverse:
                current = add_k_sent_diverse(current, k, res, rng);
                break;
            case AdversaryKind::AddAnswerPosition:
                current = add_answer_position(current, res, rng, placement);
                break;
            case AdversaryKind::InvalidateAnswer:
                current = invalidate_answer(current, res, rng);
                break;
            default: break;
        }
        tag = adversary_name(*neg);
    }
    if (pos) {
        bool changed = false;
        current = *pos == AdversaryKind::PerturbAnswer
                      ? perturb_answer(current, res, rng, &changed)
                      : perturb_question(current, res, rng, &changed);
        if (!tag.empty()) tag += '+';
        tag += adversary_name(*pos);
        if (!changed) tag += ":no-op";
    }
    if (tag_out) *tag_out = tag;
    return current;
}

} // namespace advforge
