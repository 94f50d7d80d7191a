#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace advforge {

/// One gold answer: byte offset into the owning sample's context plus the
/// answer text. The text must reproduce context.substr(char_start, len).
struct AnswerSpan {
    std::size_t char_start = 0;
    std::string text;

    std::size_t char_end() const { return char_start + text.size(); }

    friend bool operator==(const AnswerSpan&, const AnswerSpan&) = default;
};

struct Sentence {
    std::string text;
    std::size_t char_start = 0;

    std::size_t char_end() const { return char_start + text.size(); }

    friend bool operator==(const Sentence&, const Sentence&) = default;
};

/// A (context, question, answers) triple. `sentences` is a segmentation of
/// `context`: non-overlapping, ordered, and separated only by whitespace that
/// stays in `context` between them.
struct QaSample {
    std::string id;
    std::string context;
    std::vector<Sentence> sentences;
    std::string question;
    std::vector<AnswerSpan> answers;
    bool is_impossible = false;

    friend bool operator==(const QaSample&, const QaSample&) = default;
};

/// Ordered collection of samples. `provenance` maps sample ids to the tag of
/// the transformation that produced them; untagged samples are originals.
struct Corpus {
    std::vector<QaSample> samples;
    std::map<std::string, std::string> provenance;

    friend bool operator==(const Corpus&, const Corpus&) = default;
};

enum class SquadFormat { squad_v1, squad_v2 };

/// Per-sample problems found while loading; loading continues past them.
struct LoadReport {
    std::size_t seen = 0;
    std::size_t loaded = 0;
    std::vector<std::string> rejected;  // "<id>: <reason>"
};

/// Abbreviations that suppress a sentence boundary after their trailing dot.
const std::vector<std::string>& default_abbreviations();

/// Reads one abbreviation per line; blank lines and lines starting with '#'
/// are skipped.
std::vector<std::string> load_abbreviations(const std::filesystem::path& path);

/// Cuts context into sentences. A boundary is a '.', '?' or '!' followed by
/// whitespace and then an uppercase letter or digit, unless the word ending at
/// a '.' is a listed abbreviation. Sentence texts exclude the whitespace
/// between them; empty or all-whitespace input gives an empty list.
std::vector<Sentence> split_sentences(std::string_view context,
                                      const std::vector<std::string>& abbreviations);
std::vector<Sentence> split_sentences(std::string_view context);

/// Index of the sentence that fully contains the answer. Throws
/// PreconditionError when the span straddles a boundary or lies outside every
/// sentence, which signals a corrupted sample.
std::size_t locate_answer_sentence(const QaSample& sample, const AnswerSpan& answer);

/// Checks every QaSample invariant (span/text agreement, spans within a single
/// sentence, segmentation consistent with context, is_impossible iff no
/// answers). Throws PreconditionError with a diagnostic on the first failure.
void validate_sample(const QaSample& sample);

///// Builds a sample from raw parts: segments the context and validates.
QaSample make_sample(std::string id, std::string context, std::string question,
                     std::vector<AnswerSpan> answers, bool is_impossible = false);

Corpus parse_corpus_json(const std::string& json_text, SquadFormat format,
                         LoadReport* report = nullptr);
std::string serialize_corpus_json(const Corpus& corpus, SquadFormat format);

Corpus load_corpus(const std::filesystem::path& path, SquadFormat format,
                   LoadReport* report = nullptr);
void save_corpus(const Corpus& corpus, const std::filesystem::path& path,
                 SquadFormat format);

/// Replaces samples whose context exceeds `window_sentences` sentences with
/// overlapping windows of that many sentences taken every `stride` sentences.
/// Windows that cut a gold answer are dropped; at most
/// `max_windows_per_sample` windows are kept per sample (chosen uniformly with
/// `seed` when more qualify). Window ids get a "#w<k>" suffix.
Corpus window_corpus(const Corpus& corpus, std::size_t window_sentences,
                     std::size_t stride, std::size_t max_windows_per_sample,
                     std::uint64_t seed);

} // namespace advforge
