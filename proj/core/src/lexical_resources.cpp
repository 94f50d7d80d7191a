#include "advforge/lexical_resources.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "advforge/errors.hpp"
#include "advforge/qa_corpus.hpp"
#include "advforge/text.hpp"

namespace advforge {

namespace {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open resource file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Calls fn(line, line_number) for every line; strips trailing '\r'.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        std::string_view line = nl == std::string_view::npos
                                    ? text.substr(pos)
                                    : text.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        fn(line, line_no);
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        std::size_t tab = line.find('\t', pos);
        if (tab == std::string_view::npos) {
            out.push_back(line.substr(pos));
            return out;
        }
        out.push_back(line.substr(pos, tab - pos));
        pos = tab + 1;
    }
}

bool parse_double(std::string_view s, double& out) {
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc() && ptr == end && std::isfinite(out);
}

} // namespace

EmbeddingTable EmbeddingTable::parse(std::string_view text) {
    EmbeddingTable table;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (line.empty()) return;
        std::vector<std::string_view> parts;
        std::size_t pos = 0;
        while (pos < line.size()) {
            while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
            std::size_t start = pos;
            while (pos < line.size() && line[pos] != ' ' && line[pos] != '\t') ++pos;
            if (pos > start) parts.push_back(line.substr(start, pos - start));
        }
        if (parts.empty()) return;
        if (parts.size() < 2)
            throw ParseError("embeddings line " + std::to_string(line_no) +
                             ": word without vector components");
        if (table.dim_ == 0) table.dim_ = parts.size() - 1;
        if (parts.size() - 1 != table.dim_)
            throw ParseError("embeddings line " + std::to_string(line_no) + ": expected " +
                             std::to_string(table.dim_) + " components, got " +
                             std::to_string(parts.size() - 1));
        std::vector<double> vec(table.dim_);
        for (std::size_t i = 0; i < table.dim_; ++i)
            if (!parse_double(parts[i + 1], vec[i]))
                throw ParseError("embeddings line " + std::to_string(line_no) +
                                 ": component " + std::to_string(i + 1) +
                                 " is not a finite number");
        table.entries_[std::string(parts[0])] = std::move(vec);
    });
    return table;
}

EmbeddingTable EmbeddingTable::load(const std::filesystem::path& path) {
    return parse(read_file(path));
}

const std::vector<double>* EmbeddingTable::vector_of(const std::string& word) const {
    auto it = entries_.find(word);
    return it == entries_.end() ? nullptr : &it->second;
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> mean_embedding(const EmbeddingTable& table,
                                   const std::vector<std::string>& tokens) {
    std::vector<double> sum(table.dimension(), 0.0);
    std::size_t hits = 0;
    for (const std::string& tok : tokens) {
        const std::vector<double>* v = table.vector_of(tok);
        if (!v) v = table.vector_of(lower(tok));
        if (!v) continue;
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += (*v)[i];
        ++hits;
    }
    if (hits > 0)
        for (double& x : sum) x /= static_cast<double>(hits);
    return sum;
}

std::vector<std::pair<std::string, double>> nearest_neighbors(
    const EmbeddingTable& table, const std::string& word, std::size_t k) {
    const std::vector<double>* query = table.vector_of(word);
    if (!query || k == 0) return {};
    std::vector<std::pair<std::string, double>> scored;
    scored.reserve(table.size());
    for (const auto& [other, vec] : table.entries()) {
        if (other == word) continue;
        scored.emplace_back(other, cosine_similarity(*query, vec));
    }
    std::sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return x.first < y.first;
    });
    if (scored.size() > k) scored.resize(k);
    return scored;
}

Lexicon Lexicon::parse(std::string_view text) {
    Lexicon lex;
    std::map<std::string, std::array<std::set<std::string>, 3>> raw;  // syn/ant/ent
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (line.empty() || line.front() == '#') return;
        auto parts = split_tabs(line);
        if (parts.size() != 3)
            throw ParseError("lexicon line " + std::to_string(line_no) +
                             ": expected word<TAB>relation<TAB>target");
        std::string word(parts[0]), rel(parts[1]), target(parts[2]);
        if (word.empty() || target.empty())
            throw ParseError("lexicon line " + std::to_string(line_no) +
                             ": empty word or target");
        if (rel == "syn") {
            raw[word][0].insert(target);
        } else if (rel == "ant") {
            if (target != word) raw[word][1].insert(target);  // never its own antonym
        } else if (rel.rfind("ent:", 0) == 0) {
            std::string type = rel.substr(4);
            if (!parse_entity_type(type))
                throw ParseError("lexicon line " + std::to_string(line_no) +
                                 ": unknown entity type '" + type + "'");
            raw[word][2].insert(target);
            lex.entity_rows_.emplace_back(word, type, target);
        } else {
            throw ParseError("lexicon line " + std::to_string(line_no) +
                             ": unknown relation '" + rel + "'");
        }
    });
    for (auto& [word, sets] : raw) {
        LexiconEntry entry;
        entry.synonyms.assign(sets[0].begin(), sets[0].end());
        entry.antonyms.assign(sets[1].begin(), sets[1].end());
        entry.same_type.assign(sets[2].begin(), sets[2].end());
        lex.entries_[word] = std::move(entry);
    }
    return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
    return parse(read_file(path));
}

const LexiconEntry* Lexicon::find(const std::string& word) const {
    auto it = entries_.find(word);
    if (it != entries_.end()) return &it->second;
    std::string low = lower(word);
    if (low != word) {
        it = entries_.find(low);
        if (it != entries_.end()) return &it->second;
    }
    return nullptr;
}

std::optional<std::string> substitute_word(const Lexicon& lex, const std::string& word,
                                           SubstitutionMode mode, Rng& rng) {
    const LexiconEntry* entry = lex.find(word);
    if (!entry) return std::nullopt;
    const std::vector<std::string>* pool = nullptr;
    switch (mode) {
        case SubstitutionMode::antonym: pool = &entry->antonyms; break;
        case SubstitutionMode::synonym: pool = &entry->synonyms; break;
        case SubstitutionMode::entity: pool = &entry->same_type; break;
    }
    if (pool->empty()) return std::nullopt;
    return (*pool)[rng.uniform_below(pool->size())];
}

std::string_view pos_tag_name(PosTag tag) {
    switch (tag) {
        case PosTag::noun: return "noun";
        case PosTag::verb: return "verb";
        case PosTag::adjective: return "adjective";
        case PosTag::adverb: return "adverb";
        case PosTag::other: return "other";
    }
    return "other";
}

namespace {

std::optional<PosTag> parse_pos_tag(std::string_view name) {
    if (name == "noun") return PosTag::noun;
    if (name == "verb") return PosTag::verb;
    if (name == "adjective") return PosTag::adjective;
    if (name == "adverb") return PosTag::adverb;
    if (name == "other") return PosTag::other;
    return std::nullopt;
}

} // namespace

PosLexicon PosLexicon::parse(std::string_view text) {
    PosLexicon pos;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (line.empty() || line.front() == '#') return;
        auto parts = split_tabs(line);
        if (parts.size() != 2)
            throw ParseError("pos line " + std::to_string(line_no) +
                             ": expected word<TAB>tag");
        auto tag = parse_pos_tag(parts[1]);
        if (!tag)
            throw ParseError("pos line " + std::to_string(line_no) + ": unknown tag '" +
                             std::string(parts[1]) + "'");
        pos.entries_[std::string(parts[0])].insert(*tag);
    });
    return pos;
}

PosLexicon PosLexicon::load(const std::filesystem::path& path) {
    return parse(read_file(path));
}

bool PosLexicon::has_entry(const std::string& word) const {
    if (entries_.count(word) > 0) return true;
    std::string low = lower(word);
    return low != word && entries_.count(low) > 0;
}

std::set<PosTag> PosLexicon::tag(const std::string& token, bool sentence_initial) const {
    auto it = entries_.find(token);
    if (it == entries_.end()) {
        std::string low = lower(token);
        if (low != token) it = entries_.find(low);
    }
    if (it != entries_.end()) return it->second;

    // Ordered suffix fallbacks; each needs at least a two-character stem.
    static const std::vector<std::pair<std::string_view, PosTag>> suffix_rules = {
        {"ly", PosTag::adverb},    {"ing", PosTag::verb},     {"ed", PosTag::verb},
        {"ous", PosTag::adjective}, {"ful", PosTag::adjective},
    };
    for (const auto& [suffix, tag] : suffix_rules)
        if (token.size() >= suffix.size() + 2 &&
            token.compare(token.size() - suffix.size(), suffix.size(), suffix) == 0)
            return {tag};
    if (!sentence_initial && is_capitalized(token)) return {PosTag::noun};
    return {PosTag::other};
}

std::set<PosTag> tag_token(const PosLexicon& pos, const std::string& token,
                           bool sentence_initial) {
    return pos.tag(token, sentence_initial);
}

namespace {

constexpr char kGramSep = '\x1f';

std::string gram_key(const std::vector<std::string>& tokens, std::size_t begin,
                     std::size_t end) {
    std::string key;
    for (std::size_t i = begin; i < end; ++i) {
        if (i > begin) key += kGramSep;
        key += tokens[i];
    }
    return key;
}

} // namespace

NgramLm NgramLm::train_text(std::string_view corpus, std::size_t n, double alpha,
                            std::size_t vocab_override) {
    if (n < 1) throw ConfigError("n-gram order must be at least 1");
    if (alpha <= 0.0) throw ConfigError("smoothing constant must be positive");
    NgramLm lm;
    lm.n_ = n;
    lm.alpha_ = alpha;

    std::vector<std::string> tokens;
    for (const Token& t : tokenize(corpus)) tokens.push_back(lower(t.text));
    lm.total_ = tokens.size();
    std::set<std::string> vocab(tokens.begin(), tokens.end());
    lm.vocab_ = vocab_override > 0 ? vocab_override : std::max<std::size_t>(1, vocab.size());

    for (std::size_t k = 1; k <= n; ++k)
        for (std::size_t i = 0; i + k <= tokens.size(); ++i)
            ++lm.counts_[gram_key(tokens, i, i + k)];
    return lm;
}

NgramLm NgramLm::train_file(const std::filesystem::path& path, std::size_t n,
                            double alpha, std::size_t vocab_override) {
    return train_text(read_file(path), n, alpha, vocab_override);
}

double NgramLm::token_prob(const std::vector<std::string>& history,
                           const std::string& token) const {
    std::vector<std::string> ctx;
    const std::size_t use = std::min(history.size(), n_ - 1);
    for (std::size_t i = history.size() - use; i < history.size(); ++i)
        ctx.push_back(lower(history[i]));
    ctx.push_back(lower(token));

    auto count_of = [&](const std::string& key) -> std::uint64_t {
        auto it = counts_.find(key);
        return it == counts_.end() ? 0 : it->second;
    };
    const std::uint64_t gram = count_of(gram_key(ctx, 0, ctx.size()));
    const std::uint64_t prefix =
        ctx.size() == 1 ? total_ : count_of(gram_key(ctx, 0, ctx.size() - 1));
    return (static_cast<double>(gram) + alpha_) /
           (static_cast<double>(prefix) + alpha_ * static_cast<double>(vocab_));
}

double NgramLm::score(const std::vector<std::string>& tokens) const {
    if (tokens.empty()) throw PreconditionError("lm_score needs at least one token");
    double sum = 0.0;
    std::vector<std::string> history;
    for (const std::string& tok : tokens) {
        sum += std::log(token_prob(history, tok));
        history.push_back(tok);
    }
    return sum / static_cast<double>(tokens.size());
}

double lm_score(const NgramLm& lm, const std::vector<std::string>& tokens) {
    return lm.score(tokens);
}

std::string_view entity_type_name(EntityType type) {
    switch (type) {
        case EntityType::person: return "person";
        case EntityType::place: return "place";
        case EntityType::org: return "org";
        case EntityType::number: return "number";
    }
    return "number";
}

std::optional<EntityType> parse_entity_type(std::string_view name) {
    if (name == "person") return EntityType::person;
    if (name == "place") return EntityType::place;
    if (name == "org") return EntityType::org;
    if (name == "number") return EntityType::number;
    return std::nullopt;
}

Gazetteer Gazetteer::parse(std::string_view text) {
    Gazetteer gaz;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (line.empty() || line.front() == '#') return;
        auto parts = split_tabs(line);
        if (parts.size() != 2)
            throw ParseError("gazetteer line " + std::to_string(line_no) +
                             ": expected name<TAB>type");
        auto type = parse_entity_type(parts[1]);
        if (!type)
            throw ParseError("gazetteer line " + std::to_string(line_no) +
                             ": unknown entity type '" + std::string(parts[1]) + "'");
        gaz.add(std::string(parts[0]), *type);
    });
    return gaz;
}

Gazetteer Gazetteer::load(const std::filesystem::path& path) {
    return parse(read_file(path));
}

void Gazetteer::add(const std::string& name, EntityType type) {
    if (name.empty()) return;
    auto [it, inserted] = by_name_.emplace(lower(name), std::make_pair(name, type));
    if (!inserted) return;
    by_type_[type].push_back(name);
    std::size_t words = 1;
    for (char c : name)
        if (c == ' ') ++words;
    max_words_ = std::max(max_words_, words);
}

std::optional<EntityType> Gazetteer::type_of(const std::string& name) const {
    auto it = by_name_.find(lower(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second.second;
}

const std::vector<std::string>& Gazetteer::of_type(EntityType type) const {
    static const std::vector<std::string> empty;
    auto it = by_type_.find(type);
    return it == by_type_.end() ? empty : it->second;
}

std::optional<std::string> Gazetteer::sample(EntityType type, Rng& rng,
                                             const std::vector<std::string>& exclude) const {
    const std::vector<std::string>& pool = of_type(type);
    std::vector<const std::string*> allowed;
    for (const std::string& name : pool) {
        bool banned = false;
        for (const std::string& ex : exclude)
            if (lower(ex) == lower(name)) banned = true;
        if (!banned) allowed.push_back(&name);
    }
    if (allowed.empty()) return std::nullopt;
    return *allowed[rng.uniform_below(allowed.size())];
}

ResourceBundle ResourceBundle::load(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    ResourceBundle bundle;
    if (fs::exists(dir / "embeddings.txt"))
        bundle.embeddings = EmbeddingTable::load(dir / "embeddings.txt");
    if (fs::exists(dir / "lexicon.tsv"))
        bundle.lexicon = Lexicon::load(dir / "lexicon.tsv");
    if (fs::exists(dir / "pos.tsv")) bundle.pos = PosLexicon::load(dir / "pos.tsv");
    if (fs::exists(dir / "lm.txt")) bundle.lm = NgramLm::train_file(dir / "lm.txt");
    if (fs::exists(dir / "gazetteer.tsv"))
        bundle.gazetteer = Gazetteer::load(dir / "gazetteer.tsv");
    bundle.abbreviations = fs::exists(dir / "abbreviations.txt")
                               ? load_abbreviations(dir / "abbreviations.txt")
                               : default_abbreviations();

    for (const auto& [word, type_name, target] : bundle.lexicon.entity_rows()) {
        EntityType type = *parse_entity_type(type_name);  // validated at parse
        bundle.gazetteer.add(word, type);
        bundle.gazetteer.add(target, type);
    }
    return bundle;
}

} // namespace advforge
