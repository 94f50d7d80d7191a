#include "advforge/eval_metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "advforge/errors.hpp"
#include "advforge/rng.hpp"
#include "advforge/text.hpp"

namespace advforge {

using json = nlohmann::json;

namespace {

bool ascii_punct(unsigned char c) {
    return c < 0x80 && std::ispunct(c) != 0;
}

/// UTF-8 sequences treated as punctuation beyond ASCII: curly quotes, dashes,
/// ellipsis, guillemets, inverted marks.
const char* const kUnicodePunct[] = {
    "‘", "’", "“", "”", "‐", "‑", "‒",
    "–", "—", "―", "…", "«", "»", "¡",
    "¿",
};

/// Length of the punctuation sequence starting at s[i], or 0.
std::size_t punct_len(const std::string& s, std::size_t i) {
    if (ascii_punct(static_cast<unsigned char>(s[i]))) return 1;
    for (const char* p : kUnicodePunct) {
        std::size_t len = std::strlen(p);
        if (s.compare(i, len, p) == 0) return len;
    }
    return 0;
}

} // namespace

std::vector<std::string> normalize_answer(std::string_view text) {
    std::string low = lower(text);
    std::string stripped;
    stripped.reserve(low.size());
    for (std::size_t i = 0; i < low.size();) {
        std::size_t len = punct_len(low, i);
        if (len > 0) {
            i += len;  // punctuation vanishes without leaving a space
        } else {
            stripped += low[i];
            ++i;
        }
    }
    std::vector<std::string> tokens;
    std::istringstream in(stripped);
    std::string tok;
    while (in >> tok)
        if (tok != "a" && tok != "an" && tok != "the") tokens.push_back(tok);
    return tokens;
}

namespace {

std::pair<double, double> score_one(const std::vector<std::string>& pred,
                                    const std::vector<std::string>& gold) {
    if (pred.empty() || gold.empty()) {
        const bool both = pred.empty() && gold.empty();
        return {both ? 1.0 : 0.0, both ? 1.0 : 0.0};
    }
    std::unordered_map<std::string, int> gold_counts;
    for (const std::string& g : gold) ++gold_counts[g];
    int overlap = 0;
    for (const std::string& p : pred) {
        auto it = gold_counts.find(p);
        if (it != gold_counts.end() && it->second > 0) {
            ++overlap;
            --it->second;
        }
    }
    if (overlap == 0) return {0.0, 0.0};
    double precision = static_cast<double>(overlap) / pred.size();
    double recall = static_cast<double>(overlap) / gold.size();
    double f1 = 2.0 * precision * recall / (precision + recall);
    double em = pred == gold ? 1.0 : 0.0;
    return {f1, em};
}

} // namespace

std::pair<double, double> f1_em(std::string_view prediction,
                                const std::vector<std::string>& golds) {
    std::vector<std::string> pred = normalize_answer(prediction);
    if (golds.empty()) {
        const bool match = pred.empty();
        return {match ? 1.0 : 0.0, match ? 1.0 : 0.0};
    }
    double best_f1 = 0.0, best_em = 0.0;
    for (const std::string& gold : golds) {
        auto [f1, em] = score_one(pred, normalize_answer(gold));
        best_f1 = std::max(best_f1, f1);
        best_em = std::max(best_em, em);
    }
    return {best_f1, best_em};
}

EvalReport evaluate(const std::map<std::string, Prediction>& predictions,
                    const Corpus& corpus, bool strict_position) {
    EvalReport report;
    report.strict_position = strict_position;
    double f1_sum = 0.0, em_sum = 0.0;
    for (const QaSample& sample : corpus.samples) {
        auto it = predictions.find(sample.id);
        if (it == predictions.end())
            throw PreconditionError("no prediction for sample '" + sample.id + "'");
        const Prediction& pred = it->second;

        std::vector<std::string> golds;
        for (const AnswerSpan& a : sample.answers) golds.push_back(a.text);
        auto [f1, em] = f1_em(pred.text, golds);

        if (strict_position && !sample.is_impossible && !pred.text.empty()) {
            bool position_ok = false;
            for (const AnswerSpan& a : sample.answers)
                if (pred.char_start && *pred.char_start == a.char_start)
                    position_ok = true;
            if (!position_ok) {
                f1 = 0.0;
                em = 0.0;
            }
        }
        report.per_sample[sample.id] = {f1, em};
        f1_sum += f1;
        em_sum += em;
    }
    const double n = corpus.samples.empty() ? 1.0 : corpus.samples.size();
    report.f1 = 100.0 * f1_sum / n;
    report.em = 100.0 * em_sum / n;
    return report;
}

double bootstrap_pvalue(const EvalReport& a, const EvalReport& b,
                        std::size_t n_samples, std::uint64_t seed, bool use_em) {
    if (a.per_sample.size() != b.per_sample.size())
        throw PreconditionError("reports cover different numbers of samples");
    std::vector<double> diffs;
    diffs.reserve(a.per_sample.size());
    auto ita = a.per_sample.begin();
    auto itb = b.per_sample.begin();
    for (; ita != a.per_sample.end(); ++ita, ++itb) {
        if (ita->first != itb->first)
            throw PreconditionError("reports disagree on sample id '" + ita->first + "'");
        const double va = use_em ? ita->second.second : ita->second.first;
        const double vb = use_em ? itb->second.second : itb->second.first;
        diffs.push_back(va - vb);
    }
    if (diffs.empty()) throw PreconditionError("cannot bootstrap empty reports");

    double observed = 0.0;
    for (double d : diffs) observed += d;
    observed /= static_cast<double>(diffs.size());
    if (observed == 0.0) return 1.0;

    const std::size_t m = diffs.size();
    const std::size_t block = 1000;
    std::size_t opposite = 0;
    for (std::size_t begin = 0; begin < n_samples; begin += block) {
        const std::size_t end = std::min(begin + block, n_samples);
        Rng rng(derive_seed(seed, begin / block));
        for (std::size_t r = begin; r < end; ++r) {
            double sum = 0.0;
            for (std::size_t i = 0; i < m; ++i) sum += diffs[rng.uniform_below(m)];
            const double delta = sum / static_cast<double>(m);
            if (observed > 0.0 ? delta <= 0.0 : delta >= 0.0) ++opposite;
        }
    }
    return static_cast<double>(opposite) / static_cast<double>(n_samples);
}

std::string serialize_report_json(const EvalReport& report) {
    json per = json::object();
    for (const auto& [id, scores] : report.per_sample)
        per[id] = {{"f1", scores.first}, {"em", scores.second}};
    json root = {{"f1", report.f1},
                 {"em", report.em},
                 {"per_sample", per},
                 {"strict_position", report.strict_position}};
    return root.dump(2) + "\n";
}

EvalReport parse_report_json(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("invalid report JSON: ") + e.what());
    }
    if (!root.contains("f1") || !root.contains("em") || !root.contains("per_sample"))
        throw ParseError("report JSON needs f1, em and per_sample");
    EvalReport report;
    report.f1 = root["f1"].get<double>();
    report.em = root["em"].get<double>();
    report.strict_position = root.value("strict_position", false);
    for (const auto& [id, scores] : root["per_sample"].items())
        report.per_sample[id] = {scores.at("f1").get<double>(),
                                 scores.at("em").get<double>()};
    return report;
}

EvalReport load_report(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open report file: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return parse_report_json(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_report(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write report file: " + path.string());
    out << serialize_report_json(report);
}

} // namespace advforge
