#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "advforge/eval_metrics.hpp"
#include "advforge/qa_corpus.hpp"
#include "advforge/rng.hpp"

namespace advforge {

struct AugmentedCorpus;

/// Number of features scored per span.
inline constexpr std::size_t kFeatureCount = 8;

/// Longest candidate span, in tokens.
inline constexpr std::size_t kMaxSpanTokens = 10;

/// One answer candidate: a token span inside one sentence, or the synthetic
/// no-answer option (empty text, no features).
///
/// Feature layout: sentence-question unigram Jaccard, bigram Jaccard, min
/// token distance from the span to a question word, wh-type/answer-shape
/// agreement, span-appears-in-question, normalized sentence position,
/// normalized span length, bias.
struct SpanCandidate {
    std::size_t sentence = 0;
    std::size_t token_start = 0;
    std::size_t token_end = 0;  // exclusive
    std::size_t char_start = 0;
    std::string text;
    bool is_no_answer = false;
    std::vector<double> features;
};

/// Linear span scorer. Real spans score weightsᵀfeatures; the no-answer
/// candidate scores no_answer_bias.
struct OverlapQaModel {
    std::vector<double> weights = std::vector<double>(kFeatureCount, 0.0);
    double no_answer_bias = 0.0;

    bool operator==(const OverlapQaModel&) const = default;
};

/// All token spans up to `max_span_tokens` long in every sentence, plus the
/// no-answer candidate (always last).
std::vector<SpanCandidate> candidate_spans(const QaSample& sample,
                                           std::size_t max_span_tokens = kMaxSpanTokens);

double candidate_score(const OverlapQaModel& model, const SpanCandidate& candidate);

/// Softmax cross-entropy loss of one sample and its gradient. `ok` is false
/// when no candidate matches a gold answer (span longer than the limit); such
/// samples contribute nothing.
struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad_weights = std::vector<double>(kFeatureCount, 0.0);
    double grad_bias = 0.0;
    bool ok = false;
};

LossGrad sample_loss_grad(const OverlapQaModel& model, const QaSample& sample);

struct TrainReport {
    std::vector<double> epoch_losses;
    std::size_t skipped = 0;  // samples whose gold span exceeds the limit
};

/// Plain SGD over per-sample softmax losses; sample order is reshuffled from
/// `rng` each epoch. Zero epochs leave the model untouched.
TrainReport train(OverlapQaModel& model, const Corpus& corpus, std::size_t epochs,
                  double learning_rate, Rng& rng);
TrainReport train(OverlapQaModel& model, const AugmentedCorpus& corpus,
                  std::size_t epochs, double learning_rate, Rng& rng);

/// Argmax candidate; ties go to the earliest (sentence, start) and the
/// no-answer candidate loses all ties.
SpanCandidate predict(const OverlapQaModel& model, const QaSample& sample);

Prediction to_prediction(const SpanCandidate& candidate);

/// Predictions for every sample, keyed by id, ready for evaluate().
std::map<std::string, Prediction> predict_corpus(const OverlapQaModel& model,
                                                 const Corpus& corpus);

std::string serialize_model(const OverlapQaModel& model);
OverlapQaModel parse_model(const std::string& json_text);
OverlapQaModel load_model(const std::filesystem::path& path);
void save_model(const OverlapQaModel& model, const std::filesystem::path& path);

} // namespace advforge
