#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "advforge/lexical_resources.hpp"
#include "advforge/qa_corpus.hpp"
#include "advforge/rng.hpp"

namespace advforge {

/// The six transformations. The first four attack a sample (negative), the
/// last two paraphrase it (positive); that split is fixed.
enum class AdversaryKind {
    AddSentDiverse,
    AddKSentDiverse,
    AddAnswerPosition,
    InvalidateAnswer,
    PerturbAnswer,
    PerturbQuestion,
};

bool is_negative(AdversaryKind kind);
bool is_positive(AdversaryKind kind);
std::string_view adversary_name(AdversaryKind kind);
/// Accepts full names ("AddSentDiverse") and the short forms AddS, AddKS,
/// AddA, IA, PA, PQ.
std::optional<AdversaryKind> parse_adversary(std::string_view name);

/// A generated sentence waiting to be spliced into a context.
struct Distractor {
    std::string text;
    std::size_t insert_before_sentence = 0;  // 0..sentence count inclusive
    bool carries_answer = false;
};

enum class Placement { random, prepend, append, before_answer };

std::optional<Placement> parse_placement(std::string_view name);

/// Entity occurrence inside a token sequence, as a [begin,end) token range.
struct EntitySpan {
    std::size_t begin = 0;
    std::size_t end = 0;
    EntityType type = EntityType::number;
};

/// Longest-match gazetteer scan plus the bare-number heuristic.
std::vector<EntitySpan> detect_entities(const std::vector<std::string>& tokens,
                                        const Gazetteer& gazetteer);

/// Joins tokens with spaces, attaching single-character punctuation to the
/// preceding token.
std::string render_tokens(const std::vector<std::string>& tokens);

/// True when at least two content phrases of `original` are absent from
/// `distractor` (case-insensitive). A content phrase is a token tagged
/// noun/verb/adjective/adverb, a number, or (when a gazetteer is given) a
/// whole entity phrase.
bool semantic_difference_check(const std::vector<std::string>& original,
                               const std::vector<std::string>& distractor,
                               const PosLexicon& pos,
                               const Gazetteer* gazetteer = nullptr);

/// A declarative rewrite of a question with one slot for an answer phrase.
struct StatementDraft {
    std::vector<std::string> tokens;  // slot_index points at a marker token
    std::size_t slot_index = 0;
    std::optional<EntityType> slot_type;
};

/// Rewrites a question into statement form using an ordered template bank
/// (wh-word patterns with a generic fallback). Always yields a draft.
StatementDraft statement_from_question(const std::string& question,
                                       const ResourceBundle& res);

/// Builds a distractor from the question (statement conversion, content-word
/// and entity substitution with a 10-attempt retry widening to
/// synonyms-of-antonyms, fake answer splice), then inserts it at a uniformly
/// random sentence boundary. Gold answers are re-offset, never altered.
/// Throws NoDistractorError when no attempt passes the difference check.
std::pair<QaSample, Distractor> add_sent_diverse(const QaSample& sample,
                                                 const ResourceBundle& res, Rng& rng);

/// k independent distractors inserted one after another, positions drawn
/// against the context as it grows. Failed generations are skipped; throws
/// NoDistractorError only when every one fails.
QaSample add_k_sent_diverse(const QaSample& sample, std::size_t k,
                            const ResourceBundle& res, Rng& rng);

/// Distractor that carries the gold answer text verbatim inside perturbed
/// question words. The sample keeps the original span as gold, so
/// strict-position evaluation punishes text-match-wrong-place predictions.
QaSample add_answer_position(const QaSample& sample, const ResourceBundle& res,
                             Rng& rng, Placement placement = Placement::random);

/// Deletes the answer sentence, inserts one distractor, clears the answers
/// and marks the sample impossible.
QaSample invalidate_answer(const QaSample& sample, const ResourceBundle& res, Rng& rng);

/// Paraphrases the answer sentence: content words (verb/adverb/adjective)
/// after the answer span and outside entities are greedily replaced by the
/// best-scoring of their 20 nearest embedding neighbors under the n-gram LM;
/// ties keep the original word. The answer span's text and offset are
/// untouched. `changed` (optional) reports whether any word moved.
QaSample perturb_answer(const QaSample& sample, const ResourceBundle& res, Rng& rng,
                        bool* changed = nullptr);

/// Paraphrases the question through rule-based rewrites (wh-fronting swaps,
/// auxiliary inversion, possessive restructuring), ranked by cosine of mean
/// word embeddings against the source; the best non-identical candidate wins.
QaSample perturb_question(const QaSample& sample, const ResourceBundle& res, Rng& rng,
                          bool* changed = nullptr);

/// Candidate question rewrites in generation order, deduplicated, capped at
/// 10, never containing the source itself.
std::vector<std::string> question_rewrites(const std::string& question);

/// Applies `neg` (if any) then `pos` (if any). Rejects (InvalidateAnswer,
/// PerturbAnswer) since no answer sentence survives. `tag_out` (optional)
/// receives the provenance tag, with ":no-op" marking perturbations that
/// changed nothing.
QaSample compose_adversary(const QaSample& sample, std::optional<AdversaryKind> neg,
                           std::optional<AdversaryKind> pos, const ResourceBundle& res,
                           Rng& rng, std::size_t k = 2,
                           Placement placement = Placement::random,
                           std::string* tag_out = nullptr);

/// Splices a distractor in as a new sentence at its recorded boundary,
/// shifting later sentences and answers.
QaSample insert_distractor(const QaSample& sample, const Distractor& distractor);

} // namespace advforge
