#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "advforge/qa_corpus.hpp"

namespace advforge {

/// A model's answer for one sample. Empty text claims "no answer". The
/// position is only consulted in strict-position evaluation.
struct Prediction {
    std::string text;
    std::optional<std::size_t> char_start;
};

/// Per-sample scores in [0,1] plus corpus aggregates on the conventional
/// 0-100 scale.
struct EvalReport {
    double f1 = 0.0;
    double em = 0.0;
    std::map<std::string, std::pair<double, double>> per_sample;  // id -> (f1, em)
    bool strict_position = false;
};

/// Lowercases, strips punctuation characters (ASCII plus common Unicode
/// marks, no replacement space), drops article tokens a/an/the, and splits on
/// whitespace.
std::vector<std::string> normalize_answer(std::string_view text);

/// Token-level F1 (multiset overlap, max over golds) and exact match over
/// normalized forms. An empty gold list stands for "no answer": both sides
/// empty gives (1,1), one side empty gives (0,0).
std::pair<double, double> f1_em(std::string_view prediction,
                                const std::vector<std::string>& golds);

/// Scores every sample; `predictions` must cover every corpus id. In
/// strict-position mode an answerable sample scores (0,0) unless the
/// prediction's char_start equals some gold span's offset.
EvalReport evaluate(const std::map<std::string, Prediction>& predictions,
                    const Corpus& corpus, bool strict_position = false);

/// Paired bootstrap over per-sample scores (F1, or EM when use_em). Observed
/// delta = meanA - meanB; ids are resampled with replacement n_samples times
/// and p is the share of resamples whose delta has the opposite sign or is
/// zero. A zero observed delta returns 1. Resampling runs in blocks of 1000
/// with per-block seeds derived from `seed`, so the result is independent of
/// scheduling.
double bootstrap_pvalue(const EvalReport& a, const EvalReport& b,
                        std::size_t n_samples = 100000, std::uint64_t seed = 0,
                        bool use_em = false);

std::string serialize_report_json(const EvalReport& report);
EvalReport parse_report_json(const std::string& json_text);
EvalReport load_report(const std::filesystem::path& path);
void save_report(const EvalReport& report, const std::filesystem::path& path);

} // namespace advforge
