#include "advforge/task_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "advforge/aug_policy.hpp"
#include "advforge/errors.hpp"
#include "advforge/text.hpp"

namespace advforge {

namespace {

enum class WhType { who, when, how_many, other };

WhType question_wh_type(const std::vector<std::string>& question_words) {
    if (question_words.empty()) return WhType::other;
    const std::string first = lower(question_words[0]);
    if (first == "who" || first == "whom") return WhType::who;
    if (first == "when") return WhType::when;
    if (first == "how" && question_words.size() > 1 &&
        lower(question_words[1]) == "many")
        return WhType::how_many;
    return WhType::other;
}

double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const std::string& x : a) inter += b.count(x);
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

std::set<std::string> word_set(const std::vector<Token>& tokens) {
    std::set<std::string> out;
    for (const Token& t : tokens)
        if (is_word(t.text)) out.insert(lower(t.text));
    return out;
}

std::set<std::string> bigram_set(const std::vector<Token>& tokens) {
    std::set<std::string> out;
    std::string prev;
    for (const Token& t : tokens) {
        if (!is_word(t.text)) continue;
        std::string cur = lower(t.text);
        if (!prev.empty()) out.insert(prev + ' ' + cur);
        prev = std::move(cur);
    }
    return out;
}

} // namespace

std::vector<SpanCandidate> candidate_spans(const QaSample& sample,
                                           std::size_t max_span_tokens) {
    std::vector<SpanCandidate> out;
    const std::vector<Token> q_tokens = tokenize(sample.question);
    std::vector<std::string> q_words;
    for (const Token& t : q_tokens)
        if (is_word(t.text)) q_words.push_back(t.text);
    const std::set<std::string> q_set = word_set(q_tokens);
    const std::set<std::string> q_bigrams = bigram_set(q_tokens);
    const WhType wh = question_wh_type(q_words);
    const std::string question_lc = lower(sample.question);
    const std::size_t n_sentences = sample.sentences.size();

    for (std::size_t si = 0; si < n_sentences; ++si) {
        const Sentence& sent = sample.sentences[si];
        const std::vector<Token> toks = tokenize(sent.text);
        if (toks.empty()) continue;
        const std::set<std::string> s_set = word_set(toks);
        const double f1 = jaccard(q_set, s_set);
        const double f2 = jaccard(q_bigrams, bigram_set(toks));
        const double f6 =
            n_sentences > 1
                ? static_cast<double>(si) / static_cast<double>(n_sentences - 1)
                : 0.0;
        // token positions that repeat a question word
        std::vector<std::size_t> q_positions;
        for (std::size_t i = 0; i < toks.size(); ++i)
            if (is_word(toks[i].text) && q_set.count(lower(toks[i].text)))
                q_positions.push_back(i);

        for (std::size_t start = 0; start < toks.size(); ++start) {
            const std::size_t longest = std::min(max_span_tokens, toks.size() - start);
            for (std::size_t len = 1; len <= longest; ++len) {
                const std::size_t end = start + len;
                SpanCandidate cand;
                cand.sentence = si;
                cand.token_start = start;
                cand.token_end = end;
                cand.char_start = sent.char_start + toks[start].char_start;
                const std::size_t char_end = sent.char_start + toks[end - 1].char_end();
                cand.text = sample.context.substr(cand.char_start,
                                                  char_end - cand.char_start);

                double f3 = static_cast<double>(toks.size());
                for (std::size_t p : q_positions) {
                    double d = 0.0;
                    if (p < start) d = static_cast<double>(start - p);
                    else if (p >= end) d = static_cast<double>(p - (end - 1));
                    f3 = std::min(f3, d);
                }
                bool has_capital = false;
                bool has_number = false;
                for (std::size_t i = start; i < end; ++i) {
                    has_capital = has_capital || is_capitalized(toks[i].text);
                    has_number = has_number || is_number(toks[i].text);
                }
                double f4 = 0.5;
                if (wh == WhType::who) f4 = has_capital ? 1.0 : 0.0;
                else if (wh == WhType::when) f4 = has_number ? 1.0 : 0.0;
                else if (wh == WhType::how_many) f4 = has_number ? 1.0 : 0.0;
                const double f5 =
                    question_lc.find(lower(cand.text)) != std::string::npos ? 1.0 : 0.0;
                const double f7 = static_cast<double>(len) /
                                  static_cast<double>(max_span_tokens);

                cand.features = {f1, f2, f3, f4, f5, f6, f7, 1.0};
                out.push_back(std::move(cand));
            }
        }
    }
    SpanCandidate no_answer;
    no_answer.is_no_answer = true;
    no_answer.features.assign(kFeatureCount, 0.0);
    out.push_back(std::move(no_answer));
    return out;
}

double candidate_score(const OverlapQaModel& model, const SpanCandidate& candidate) {
    if (candidate.is_no_answer) return model.no_answer_bias;
    double score = 0.0;
    for (std::size_t i = 0; i < kFeatureCount; ++i)
        score += model.weights[i] * candidate.features[i];
    return score;
}

namespace {

/// Index of the candidate to treat as gold, or npos when none matches.
std::size_t gold_index(const std::vector<SpanCandidate>& candidates,
                       const QaSample& sample) {
    if (sample.is_impossible) return candidates.size() - 1;  // the no-answer slot
    for (std::size_t i = 0; i < candidates.size(); ++i)
        if (!candidates[i].is_no_answer &&
            candidates[i].char_start == sample.answers[0].char_start &&
            candidates[i].text == sample.answers[0].text)
            return i;
    for (const AnswerSpan& gold : sample.answers)
        for (std::size_t i = 0; i < candidates.size(); ++i)
            if (!candidates[i].is_no_answer && candidates[i].text == gold.text)
                return i;
    return static_cast<std::size_t>(-1);
}

std::vector<double> softmax(const std::vector<double>& scores) {
    const double top = *std::max_element(scores.begin(), scores.end());
    std::vector<double> probs(scores.size());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        probs[i] = std::exp(scores[i] - top);
        total += probs[i];
    }
    for (double& p : probs) p /= total;
    return probs;
}

} // namespace

LossGrad sample_loss_grad(const OverlapQaModel& model, const QaSample& sample) {
    LossGrad out;
    const std::vector<SpanCandidate> candidates = candidate_spans(sample);
    const std::size_t target = gold_index(candidates, sample);
    if (target == static_cast<std::size_t>(-1)) return out;

    std::vector<double> scores(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i)
        scores[i] = candidate_score(model, candidates[i]);
    const std::vector<double> probs = softmax(scores);

    out.ok = true;
    out.loss = -std::log(std::max(probs[target], 1e-300));
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double delta = probs[i] - (i == target ? 1.0 : 0.0);
        if (candidates[i].is_no_answer) {
            out.grad_bias += delta;
        } else {
            for (std::size_t f = 0; f < kFeatureCount; ++f)
                out.grad_weights[f] += delta * candidates[i].features[f];
        }
    }
    return out;
}

TrainReport train(OverlapQaModel& model, const Corpus& corpus, std::size_t epochs,
                  double learning_rate, Rng& rng) {
    if (corpus.samples.empty()) throw PreconditionError("training corpus is empty");
    TrainReport report;
    std::vector<std::size_t> order(corpus.samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        shuffle(order, rng);
        double loss_sum = 0.0;
        std::size_t trained = 0;
        for (std::size_t idx : order) {
            const LossGrad lg = sample_loss_grad(model, corpus.samples[idx]);
            if (!lg.ok) {
                if (epoch == 0) ++report.skipped;
                continue;
            }
            loss_sum += lg.loss;
            ++trained;
            for (std::size_t f = 0; f < kFeatureCount; ++f)
                model.weights[f] -= learning_rate * lg.grad_weights[f];
            model.no_answer_bias -= learning_rate * lg.grad_bias;
        }
        report.epoch_losses.push_back(trained > 0 ? loss_sum / trained : 0.0);
    }
    return report;
}

TrainReport train(OverlapQaModel& model, const AugmentedCorpus& corpus,
                  std::size_t epochs, double learning_rate, Rng& rng) {
    return train(model, corpus.corpus, epochs, learning_rate, rng);
}

SpanCandidate predict(const OverlapQaModel& model, const QaSample& sample) {
    const std::vector<SpanCandidate> candidates = candidate_spans(sample);
    std::size_t best = 0;
    double best_score = candidate_score(model, candidates[0]);
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double score = candidate_score(model, candidates[i]);
        if (score > best_score) {  // ties keep the earliest candidate
            best_score = score;
            best = i;
        }
    }
    return candidates[best];
}

Prediction to_prediction(const SpanCandidate& candidate) {
    Prediction p;
    if (!candidate.is_no_answer) {
        p.text = candidate.text;
        p.char_start = candidate.char_start;
    }
    return p;
}

std::map<std::string, Prediction> predict_corpus(const OverlapQaModel& model,
                                                 const Corpus& corpus) {
    std::map<std::string, Prediction> out;
    for (const QaSample& sample : corpus.samples)
        out[sample.id] = to_prediction(predict(model, sample));
    return out;
}

std::string serialize_model(const OverlapQaModel& model) {
    nlohmann::json root;
    root["weights"] = model.weights;
    root["no_answer_bias"] = model.no_answer_bias;
    root["feature_spec_version"] = 1;
    return root.dump(2) + "\n";
}

OverlapQaModel parse_model(const std::string& json_text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("model JSON: ") + e.what());
    }
    if (!root.is_object() || !root.contains("weights") || !root["weights"].is_array())
        throw ParseError("model JSON needs a \"weights\" array");
    if (!root.contains("no_answer_bias") || !root["no_answer_bias"].is_number())
        throw ParseError("model JSON needs a numeric \"no_answer_bias\"");
    if (!root.contains("feature_spec_version") ||
        root["feature_spec_version"] != 1)
        throw ParseError("unsupported feature_spec_version");

    OverlapQaModel model;
    model.weights.clear();
    for (const auto& w : root["weights"]) {
        if (!w.is_number()) throw ParseError("model weights must be numbers");
        model.weights.push_back(w.get<double>());
    }
    if (model.weights.size() != kFeatureCount)
        throw ParseError("expected " + std::to_string(kFeatureCount) +
                         " weights, found " + std::to_string(model.weights.size()));
    model.no_answer_bias = root["no_answer_bias"].get<double>();
    for (double w : model.weights)
        if (!std::isfinite(w)) throw ParseError("model weights must be finite");
    if (!std::isfinite(model.no_answer_bias))
        throw ParseError("no_answer_bias must be finite");
    return model;
}

OverlapQaModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    try {
        return parse_model(buffer.str());
    } catch (const ParseError& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
}

void save_model(const OverlapQaModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path.string());
    out << serialize_model(model);
}

} // namespace advforge
