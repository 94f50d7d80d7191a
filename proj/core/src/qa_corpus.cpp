#include "advforge/qa_corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "advforge/errors.hpp"
#include "advforge/rng.hpp"

namespace advforge {

using json = nlohmann::json;

namespace {

bool ws(unsigned char c) { return std::isspace(c) != 0; }

bool sentence_terminator(char c) { return c == '.' || c == '?' || c == '!'; }

/// The whitespace-delimited word ending at (and including) position i,
/// stripped of leading punctuation, e.g. "(Dr." -> "Dr.".
std::string_view word_ending_at(std::string_view text, std::size_t i) {
    std::size_t start = i;
    while (start > 0 && !ws(static_cast<unsigned char>(text[start - 1]))) --start;
    while (start < i && !std::isalnum(static_cast<unsigned char>(text[start]))) ++start;
    return text.substr(start, i - start + 1);
}

} // namespace

const std::vector<std::string>& default_abbreviations() {
    static const std::vector<std::string> abbrevs = {
        "Mr.", "Mrs.", "Ms.", "Dr.",  "Prof.", "St.",  "Mt.",  "No.",
        "U.S.", "U.K.", "U.N.", "D.C.", "etc.", "e.g.", "i.e.", "vs.",
        "Jr.", "Sr.",  "Inc.", "Ltd.", "Co.",  "Gen.", "Col.", "Capt.",
        "Sgt.", "Lt.", "Rev.", "Hon.", "Jan.", "Feb.", "Mar.", "Apr.",
        "Jun.", "Jul.", "Aug.", "Sep.", "Sept.", "Oct.", "Nov.", "Dec.",
    };
    return abbrevs;
}

std::vector<std::string> load_abbreviations(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open abbreviation file: " + path.string());
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        out.push_back(line);
    }
    return out;
}

std::vector<Sentence> split_sentences(std::string_view context,
                                      const std::vector<std::string>& abbreviations) {
    std::unordered_set<std::string_view> abbrev_set(abbreviations.begin(),
                                                    abbreviations.end());
    std::vector<Sentence> out;
    const std::size_t n = context.size();

    std::size_t start = 0;
    while (start < n && ws(static_cast<unsigned char>(context[start]))) ++start;
    if (start == n) return out;

    std::size_t i = start;
    while (i < n) {
        char c = context[i];
        if (sentence_terminator(c) && i + 1 < n &&
            ws(static_cast<unsigned char>(context[i + 1]))) {
            std::size_t next = i + 1;
            while (next < n && ws(static_cast<unsigned char>(context[next]))) ++next;
            bool upper_or_digit =
                next < n && (std::isupper(static_cast<unsigned char>(context[next])) ||
                             std::isdigit(static_cast<unsigned char>(context[next])));
            bool abbrev = c == '.' && abbrev_set.count(word_ending_at(context, i)) > 0;
            if (upper_or_digit && !abbrev) {
                out.push_back({std::string(context.substr(start, i + 1 - start)), start});
                start = next;
                i = next;
                continue;
            }
        }
        ++i;
    }

    std::size_t end = n;
    while (end > start && ws(static_cast<unsigned char>(context[end - 1]))) --end;
    if (end > start)
        out.push_back({std::string(context.substr(start, end - start)), start});
    return out;
}

std::vector<Sentence> split_sentences(std::string_view context) {
    return split_sentences(context, default_abbreviations());
}

std::size_t locate_answer_sentence(const QaSample& sample, const AnswerSpan& answer) {
    for (std::size_t i = 0; i < sample.sentences.size(); ++i) {
        const Sentence& s = sample.sentences[i];
        if (answer.char_start >= s.char_start && answer.char_end() <= s.char_end())
            return i;
    }
    throw PreconditionError("sample '" + sample.id + "': answer at offset " +
                            std::to_string(answer.char_start) +
                            " does not lie within a single sentence");
}

void validate_sample(const QaSample& sample) {
    auto fail = [&](const std::string& why) {
        throw PreconditionError("sample '" + sample.id + "': " + why);
    };
    if (sample.id.empty()) fail("empty id");
    if (sample.question.empty()) fail("empty question");

    std::size_t prev_end = 0;
    for (std::size_t i = 0; i < sample.sentences.size(); ++i) {
        const Sentence& s = sample.sentences[i];
        if (s.text.empty()) fail("empty sentence " + std::to_string(i));
        if (s.char_start < prev_end && i > 0)
            fail("sentence " + std::to_string(i) + " overlaps its predecessor");
        if (s.char_end() > sample.context.size())
            fail("sentence " + std::to_string(i) + " exceeds context");
        if (sample.context.compare(s.char_start, s.text.size(), s.text) != 0)
            fail("sentence " + std::to_string(i) + " disagrees with context");
        for (std::size_t j = (i == 0 ? 0 : prev_end); j < s.char_start; ++j)
            if (!ws(static_cast<unsigned char>(sample.context[j])))
                fail("non-whitespace between sentences near offset " + std::to_string(j));
        prev_end = s.char_end();
    }
    for (std::size_t j = prev_end; j < sample.context.size(); ++j)
        if (!ws(static_cast<unsigned char>(sample.context[j])))
            fail("non-whitespace after final sentence at offset " + std::to_string(j));

    if (sample.is_impossible != sample.answers.empty())
        fail("is_impossible flag disagrees with answer list");
    for (const AnswerSpan& a : sample.answers) {
        if (a.text.empty()) fail("empty answer text");
        if (a.char_end() > sample.context.size() ||
            sample.context.compare(a.char_start, a.text.size(), a.text) != 0)
            fail("answer text disagrees with context at offset " +
                 std::to_string(a.char_start));
        locate_answer_sentence(sample, a);
    }
}

QaSample make_sample(std::string id, std::string context, std::string question,
                     std::vector<AnswerSpan> answers, bool is_impossible) {
    QaSample s;
    s.id = std::move(id);
    s.context = std::move(context);
    s.sentences = split_sentences(s.context);
    s.question = std::move(question);
    s.answers = std::move(answers);
    s.is_impossible = is_impossible;
    validate_sample(s);
    return s;
}

namespace {

/// Parses one qa entry; returns false with `why` set when the sample must be
/// rejected.
bool parse_qa(const json& qa, const std::string& context, SquadFormat format,
              QaSample& out, std::string& provenance, std::string& why) {
    if (!qa.contains("id") || !qa["id"].is_string()) {
        why = "missing id";
        return false;
    }
    out.id = qa["id"].get<std::string>();
    if (!qa.contains("question") || !qa["question"].is_string() ||
        qa["question"].get<std::string>().empty()) {
        why = "missing or empty question";
        return false;
    }
    out.question = qa["question"].get<std::string>();
    out.context = context;
    out.is_impossible =
        format == SquadFormat::squad_v2 && qa.value("is_impossible", false);

    if (!qa.contains("answers") || !qa["answers"].is_array()) {
        why = "missing answers array";
        return false;
    }
    for (const json& ans : qa["answers"]) {
        if (!ans.contains("text") || !ans["text"].is_string() ||
            !ans.contains("answer_start") || !ans["answer_start"].is_number_integer()) {
            why = "malformed answer entry";
            return false;
        }
        AnswerSpan span;
        const auto start = ans["answer_start"].get<long long>();
        span.text = ans["text"].get<std::string>();
        if (start < 0 || span.text.empty()) {
            why = "answer with negative offset or empty text";
            return false;
        }
        span.char_start = static_cast<std::size_t>(start);
        if (span.char_end() > context.size() ||
            context.compare(span.char_start, span.text.size(), span.text) != 0) {
            std::string got = span.char_start < context.size()
                                  ? context.substr(span.char_start,
                                                   std::min(span.text.size(),
                                                            context.size() - span.char_start))
                                  : std::string();
            why = "answer_start/text mismatch: expected '" + span.text + "', context has '" +
                  got + "'";
            return false;
        }
        bool duplicate = false;
        for (const AnswerSpan& seen : out.answers)
            if (seen.text == span.text) duplicate = true;
        if (!duplicate) out.answers.push_back(std::move(span));
    }

    if (out.is_impossible && !out.answers.empty()) {
        why = "is_impossible sample carries answers";
        return false;
    }
    if (!out.is_impossible && out.answers.empty()) {
        why = "answerable sample without answers";
        return false;
    }

    out.sentences = split_sentences(out.context);
    for (const AnswerSpan& a : out.answers) {
        bool contained = false;
        for (const Sentence& s : out.sentences)
            if (a.char_start >= s.char_start && a.char_end() <= s.char_end())
                contained = true;
        if (!contained) {
            why = "answer at offset " + std::to_string(a.char_start) +
                  " straddles a sentence boundary";
            return false;
        }
    }

    provenance = qa.value("x_provenance", "");
    return true;
}

} // namespace

Corpus parse_corpus_json(const std::string& json_text, SquadFormat format,
                         LoadReport* report) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
    if (!root.contains("data") || !root["data"].is_array())
        throw ParseError("document has no 'data' array");

    LoadReport local;
    LoadReport& rep = report ? *report : local;
    rep = LoadReport{};

    Corpus corpus;
    std::unordered_set<std::string> ids;
    for (const json& article : root["data"]) {
        if (!article.contains("paragraphs") || !article["paragraphs"].is_array())
            throw ParseError("article has no 'paragraphs' array");
        for (const json& para : article["paragraphs"]) {
            if (!para.contains("context") || !para["context"].is_string())
                throw ParseError("paragraph has no 'context' string");
            if (!para.contains("qas") || !para["qas"].is_array())
                throw ParseError("paragraph has no 'qas' array");
            const std::string context = para["context"].get<std::string>();
            for (const json& qa : para["qas"]) {
                ++rep.seen;
                QaSample sample;
                std::string tag, why;
                if (!parse_qa(qa, context, format, sample, tag, why)) {
                    std::string id = qa.is_object() && qa.contains("id") && qa["id"].is_string()
                                         ? qa["id"].get<std::string>()
                                         : "<qa #" + std::to_string(rep.seen) + ">";
                    rep.rejected.push_back(id + ": " + why);
                    continue;
                }
                if (!ids.insert(sample.id).second) {
                    rep.rejected.push_back(sample.id + ": duplicate id");
                    continue;
                }
                if (!tag.empty()) corpus.provenance[sample.id] = tag;
                corpus.samples.push_back(std::move(sample));
                ++rep.loaded;
            }
        }
    }
    return corpus;
}

std::string serialize_corpus_json(const Corpus& corpus, SquadFormat format) {
    json paragraphs = json::array();
    for (const QaSample& s : corpus.samples) {
        json answers = json::array();
        for (const AnswerSpan& a : s.answers)
            answers.push_back({{"answer_start", a.char_start}, {"text", a.text}});
        json qa = {{"id", s.id}, {"question", s.question}, {"answers", answers}};
        if (format == SquadFormat::squad_v2) qa["is_impossible"] = s.is_impossible;
        else if (s.is_impossible)
            throw ConfigError("sample '" + s.id +
                              "' is unanswerable; use squad_v2 to save it");
        auto tag = corpus.provenance.find(s.id);
        if (tag != corpus.provenance.end() && !tag->second.empty())
            qa["x_provenance"] = tag->second;
        paragraphs.push_back({{"context", s.context}, {"qas", json::array({qa})}});
    }
    json root = {{"data", json::array({{{"title", ""}, {"paragraphs", paragraphs}}})}};
    return root.dump(2) + "\n";
}

Corpus load_corpus(const std::filesystem::path& path, SquadFormat format,
                   LoadReport* report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open corpus file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_corpus_json(buf.str(), format, report);
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path,
                 SquadFormat format) {
    const std::string payload = serialize_corpus_json(corpus, format);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write corpus file: " + path.string());
    out << payload;
}

Corpus window_corpus(const Corpus& corpus, std::size_t window_sentences,
                     std::size_t stride, std::size_t max_windows_per_sample,
                     std::uint64_t seed) {
    if (window_sentences == 0) return corpus;
    if (stride == 0) throw ConfigError("window stride must be positive");

    Corpus out;
    for (const QaSample& sample : corpus.samples) {
        auto tag = corpus.provenance.find(sample.id);
        const std::size_t nsent = sample.sentences.size();
        if (nsent <= window_sentences) {
            if (tag != corpus.provenance.end()) out.provenance[sample.id] = tag->second;
            out.samples.push_back(sample);
            continue;
        }

        std::vector<std::size_t> starts;
        for (std::size_t s = 0; s + window_sentences <= nsent; s += stride)
            starts.push_back(s);
        if (starts.back() + window_sentences < nsent)
            starts.push_back(nsent - window_sentences);

        std::vector<QaSample> windows;
        for (std::size_t s : starts) {
            const Sentence& first = sample.sentences[s];
            const Sentence& last = sample.sentences[s + window_sentences - 1];
            QaSample w;
            w.id = sample.id + "#w" + std::to_string(s);
            w.context = sample.context.substr(first.char_start,
                                              last.char_end() - first.char_start);
            for (std::size_t k = s; k < s + window_sentences; ++k) {
                const Sentence& sent = sample.sentences[k];
                w.sentences.push_back({sent.text, sent.char_start - first.char_start});
            }
            w.question = sample.question;
            for (const AnswerSpan& a : sample.answers)
                if (a.char_start >= first.char_start && a.char_end() <= last.char_end())
                    w.answers.push_back({a.char_start - first.char_start, a.text});
            w.is_impossible = sample.is_impossible;
            if (!sample.is_impossible && w.answers.empty()) continue;  // no gold in view
            windows.push_back(std::move(w));
        }

        if (max_windows_per_sample > 0 && windows.size() > max_windows_per_sample) {
            Rng rng(derive_seed(seed, sample.id));
            std::vector<std::size_t> order(windows.size());
            for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
            shuffle(order, rng);
            order.resize(max_windows_per_sample);
            std::sort(order.begin(), order.end());
            std::vector<QaSample> kept;
            for (std::size_t k : order) kept.push_back(std::move(windows[k]));
            windows = std::move(kept);
        }
        for (QaSample& w : windows) {
            if (tag != corpus.provenance.end()) out.provenance[w.id] = tag->second;
            out.samples.push_back(std::move(w));
        }
    }
    return out;
}

} // namespace advforge
