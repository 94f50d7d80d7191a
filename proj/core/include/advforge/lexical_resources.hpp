#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "advforge/rng.hpp"

namespace advforge {

/// Word vectors loaded from text, one "word v1 ... vd" line per entry. The
/// first line fixes the dimension; any malformed line (wrong count, not a
/// finite number) aborts the load naming the line.
class EmbeddingTable {
public:
    static EmbeddingTable parse(std::string_view text);
    static EmbeddingTable load(const std::filesystem::path& path);

    std::size_t dimension() const { return dim_; }
    std::size_t size() const { return entries_.size(); }
    bool contains(const std::string& word) const { return entries_.count(word) > 0; }
    const std::vector<double>* vector_of(const std::string& word) const;

    const std::map<std::string, std::vector<double>>& entries() const { return entries_; }

private:
    std::size_t dim_ = 0;
    std::map<std::string, std::vector<double>> entries_;
};

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

/// Mean of the vectors of the in-vocabulary tokens (lowercase fallback per
/// token); zero vector when none are known.
std::vector<double> mean_embedding(const EmbeddingTable& table,
                                   const std::vector<std::string>& tokens);

/// The k most cosine-similar words to `word`, descending, ties broken by
/// lexicographic word order. The query itself is excluded; an
/// out-of-vocabulary query gives an empty list.
std::vector<std::pair<std::string, double>> nearest_neighbors(
    const EmbeddingTable& table, const std::string& word, std::size_t k);

struct LexiconEntry {
    std::vector<std::string> synonyms;   // sorted, unique
    std::vector<std::string> antonyms;   // sorted, unique, never the word itself
    std::vector<std::string> same_type;  // sorted, unique
};

enum class SubstitutionMode { antonym, synonym, entity };

/// Relations loaded from "word TAB relation TAB target" rows with relation in
/// {syn, ant, ent:<type>}. Lookups try the exact word, then its lowercase
/// form.
class Lexicon {
public:
    static Lexicon parse(std::string_view text);
    static Lexicon load(const std::filesystem::path& path);

    const LexiconEntry* find(const std::string& word) const;

    /// The ent:<type> rows as (word, type, target) for gazetteer merging.
    const std::vector<std::tuple<std::string, std::string, std::string>>&
    entity_rows() const {
        return entity_rows_;
    }

private:
    std::map<std::string, LexiconEntry> entries_;
    std::vector<std::tuple<std::string, std::string, std::string>> entity_rows_;
};

/// Uniform draw from the requested relation set of `word`; empty optional when
/// the set is empty or the word is unknown.
std::optional<std::string> substitute_word(const Lexicon& lex, const std::string& word,
                                           SubstitutionMode mode, Rng& rng);

enum class PosTag { noun, verb, adjective, adverb, other };

std::string_view pos_tag_name(PosTag tag);

/// Word-to-tag table from "word TAB tag" rows plus ordered suffix fallbacks.
class PosLexicon {
public:
    static PosLexicon parse(std::string_view text);
    static PosLexicon load(const std::filesystem::path& path);

    bool has_entry(const std::string& word) const;

    std::set<PosTag> tag(const std::string& token, bool sentence_initial = false) const;

private:
    std::map<std::string, std::set<PosTag>> entries_;
};

/// Lexicon lookup first (exact, then lowercase); on a miss the first matching
/// rule of: -ly adverb, -ing/-ed verb, -ous/-ful adjective, capitalized
/// non-sentence-initial noun; otherwise {other}.
std::set<PosTag> tag_token(const PosLexicon& pos, const std::string& token,
                           bool sentence_initial = false);

/// Add-alpha smoothed n-gram model over lowercased tokens.
class NgramLm {
public:
    /// vocab_override = 0 derives V from the distinct tokens seen.
    static NgramLm train_text(std::string_view corpus, std::size_t n = 3,
                              double alpha = 0.1, std::size_t vocab_override = 0);
    static NgramLm train_file(const std::filesystem::path& path, std::size_t n = 3,
                              double alpha = 0.1, std::size_t vocab_override = 0);

    std::size_t order() const { return n_; }
    double alpha() const { return alpha_; }
    std::size_t vocab_size() const { return vocab_; }
    std::uint64_t total_tokens() const { return total_; }

    /// P(token | history) with add-alpha smoothing; history longer than n-1 is
    /// truncated to its suffix. Case-insensitive.
    double token_prob(const std::vector<std::string>& history,
                      const std::string& token) const;

    /// Mean log-probability of the token sequence; initial tokens use however
    /// much history exists. Tokens must be non-empty.
    double score(const std::vector<std::string>& tokens) const;

private:
    std::size_t n_ = 1;
    double alpha_ = 0.1;
    std::size_t vocab_ = 1;
    std::uint64_t total_ = 0;
    std::unordered_map<std::string, std::uint64_t> counts_;
};

double lm_score(const NgramLm& lm, const std::vector<std::string>& tokens);

enum class EntityType { person, place, org, number };

std::string_view entity_type_name(EntityType type);
std::optional<EntityType> parse_entity_type(std::string_view name);

/// Typed entity names from "name TAB type" rows; lookups are
/// case-insensitive, draws return the canonical spelling.
class Gazetteer {
public:
    static Gazetteer parse(std::string_view text);
    static Gazetteer load(const std::filesystem::path& path);

    void add(const std::string& name, EntityType type);

    std::optional<EntityType> type_of(const std::string& name) const;
    const std::vector<std::string>& of_type(EntityType type) const;

    /// Uniform draw over names of the type, skipping `exclude` entries
    /// (case-insensitive); empty optional when nothing remains.
    std::optional<std::string> sample(EntityType type, Rng& rng,
                                      const std::vector<std::string>& exclude = {}) const;

    /// Longest entity name measured in whitespace-separated words.
    std::size_t max_words() const { return max_words_; }

    std::size_t size() const { return by_name_.size(); }

private:
    std::map<std::string, std::pair<std::string, EntityType>> by_name_;  // lowercase key
    std::map<EntityType, std::vector<std::string>> by_type_;
    std::size_t max_words_ = 0;
};

/// Every resource the transformations need, loaded from one directory:
/// embeddings.txt, lexicon.tsv, pos.tsv, lm.txt, gazetteer.tsv,
/// abbreviations.txt. Missing files leave the matching member empty (the
/// abbreviation list falls back to the built-in one). Entity rows from the
/// lexicon are merged into the gazetteer.
struct ResourceBundle {
    EmbeddingTable embeddings;
    Lexicon lexicon;
    PosLexicon pos;
    NgramLm lm;
    Gazetteer gazetteer;
    std::vector<std::string> abbreviations;

    static ResourceBundle load(const std::filesystem::path& dir);
};

} // namespace advforge
