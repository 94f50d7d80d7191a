#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "advforge/errors.hpp"
#include "advforge/qa_corpus.hpp"
#include "advforge/rng.hpp"
#include "advforge/task_model.hpp"

using namespace advforge;

namespace {

Corpus tiny_corpus() {
    Corpus corpus;
    corpus.samples.push_back(make_sample(
        "t0", "Alice guarded the tower in Paris. The tower was tall.",
        "Where did Alice guard the tower?", {{27, "Paris"}}));
    corpus.samples.push_back(make_sample(
        "t1", "Bob visited Berlin. He liked it.", "Where did Bob go?", {{12, "Berlin"}}));
    corpus.samples.push_back(
        make_sample("t2", "Nothing is known.", "Where is the treasure?", {}, true));
    return corpus;
}

} // namespace

TEST_CASE("candidate spans enumerate every short window plus no-answer") {
    QaSample three = make_sample("c0", "Cats chase mice", "Who chases mice?", {{0, "Cats"}});
    std::vector<SpanCandidate> cands = candidate_spans(three);
    CHECK(cands.size() == 7);  // 3 + 2 + 1 spans and the no-answer slot
    CHECK(cands.back().is_no_answer);
    CHECK(cands.back().text.empty());

    bool found_full = false;
    for (const SpanCandidate& c : cands)
        if (c.text == "Cats chase mice") found_full = true;
    CHECK(found_full);

    SUBCASE("length cap limits windows") {
        std::vector<SpanCandidate> capped = candidate_spans(three, 2);
        CHECK(capped.size() == 6);  // 3 + 2 spans and the no-answer slot
    }
    SUBCASE("empty context leaves only no-answer") {
        QaSample empty = make_sample("c1", "", "Anything?", {}, true);
        std::vector<SpanCandidate> only = candidate_spans(empty);
        REQUIRE(only.size() == 1);
        CHECK(only[0].is_no_answer);
    }
    SUBCASE("multi-token gold appears verbatim") {
        QaSample rankine = make_sample(
            "c2", "The thermodynamic basis of the steam engine is the Rankine cycle.",
            "What is the thermodynamic basis of the steam engine?",
            {{51, "Rankine cycle"}});
        bool found = false;
        for (const SpanCandidate& c : candidate_spans(rankine))
            if (c.text == "Rankine cycle" && c.char_start == 51) found = true;
        CHECK(found);
    }
}

TEST_CASE("feature values stay in their contracted ranges") {
    Corpus corpus = tiny_corpus();
    for (const QaSample& sample : corpus.samples) {
        for (const SpanCandidate& c : candidate_spans(sample)) {
            if (c.is_no_answer) continue;
            REQUIRE(c.features.size() == kFeatureCount);
            for (double f : c.features) CHECK(std::isfinite(f));
            CHECK(c.features[0] >= 0.0);
            CHECK(c.features[0] <= 1.0);
            CHECK(c.features[1] >= 0.0);
            CHECK(c.features[1] <= 1.0);
            for (std::size_t i = 3; i < kFeatureCount; ++i) {
                CHECK(c.features[i] >= 0.0);
                CHECK(c.features[i] <= 1.0);
            }
            CHECK(c.features[7] == 1.0);
        }
    }
}

TEST_CASE("zero epochs leave the model unchanged") {
    OverlapQaModel model;
    model.weights[0] = 0.25;
    model.no_answer_bias = -0.5;
    OverlapQaModel before = model;
    Rng rng(1);
    TrainReport report = train(model, tiny_corpus(), 0, 0.1, rng);
    CHECK(model == before);
    CHECK(report.epoch_losses.empty());
}

TEST_CASE("training refuses an empty corpus") {
    OverlapQaModel model;
    Rng rng(1);
    CHECK_THROWS_AS(train(model, Corpus{}, 1, 0.1, rng), PreconditionError);
}

TEST_CASE("a single separable sample converges to its gold span") {
    Corpus corpus;
    corpus.samples.push_back(
        make_sample("s0", "Alice met Bob", "Who met Bob?", {{0, "Alice"}}));
    OverlapQaModel model;
    Rng rng(3);
    TrainReport report = train(model, corpus, 200, 0.5, rng);
    CHECK(report.skipped == 0);
    SpanCandidate top = predict(model, corpus.samples[0]);
    CHECK(top.text == "Alice");
    CHECK(top.char_start == 0);
    CHECK(report.epoch_losses.back() < report.epoch_losses.front());
}

TEST_CASE("impossible samples train the no-answer bias") {
    Corpus corpus;
    corpus.samples.push_back(
        make_sample("n0", "The sky is blue.", "Where is the treasure?", {}, true));
    OverlapQaModel model;
    Rng rng(4);
    train(model, corpus, 50, 0.5, rng);
    SpanCandidate top = predict(model, corpus.samples[0]);
    CHECK(top.is_no_answer);
}

TEST_CASE("overlong gold answers are skipped and reported") {
    Corpus corpus = tiny_corpus();
    const std::string long_answer = "one two three four five six seven eight nine ten eleven";
    corpus.samples.push_back(make_sample("t3", "They said " + long_answer + " again.",
                                         "What did they say?", {{10, long_answer}}));
    OverlapQaModel model;
    Rng rng(5);
    TrainReport report = train(model, corpus, 2, 0.1, rng);
    CHECK(report.skipped == 1);
    CHECK(report.epoch_losses.size() == 2);
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(42);
    Corpus corpus = tiny_corpus();
    const double eps = 1e-5;
    int checked = 0;
    for (int instance = 0; instance < 21; ++instance) {
        OverlapQaModel model;
        for (double& w : model.weights) w = 0.5 * rng.normal();
        model.no_answer_bias = 0.5 * rng.normal();
        const QaSample& sample = corpus.samples[instance % corpus.samples.size()];

        LossGrad lg = sample_loss_grad(model, sample);
        REQUIRE(lg.ok);
        for (std::size_t f = 0; f <= kFeatureCount; ++f) {
            OverlapQaModel plus = model;
            OverlapQaModel minus = model;
            if (f < kFeatureCount) {
                plus.weights[f] += eps;
                minus.weights[f] -= eps;
            } else {
                plus.no_answer_bias += eps;
                minus.no_answer_bias -= eps;
            }
            const double fd = (sample_loss_grad(plus, sample).loss -
                               sample_loss_grad(minus, sample).loss) /
                              (2 * eps);
            const double analytic =
                f < kFeatureCount ? lg.grad_weights[f] : lg.grad_bias;
            const double denom =
                std::max({std::abs(analytic), std::abs(fd), 1e-6});
            CHECK(std::abs(analytic - fd) / denom < 1e-4);
            ++checked;
        }
    }
    CHECK(checked == 21 * 9);
}

TEST_CASE("prediction follows the highest score with earliest-tie breaking") {
    QaSample sample = make_sample(
        "p0", "Alice guarded the tower in Paris. Where the cat did sit is unknown.",
        "Where did the cat sit?", {{27, "Paris"}});

    SUBCASE("a dominant no-answer bias predicts empty") {
        OverlapQaModel model;
        model.no_answer_bias = 1.0;
        SpanCandidate top = predict(model, sample);
        CHECK(top.is_no_answer);
        CHECK(to_prediction(top).text.empty());
        CHECK_FALSE(to_prediction(top).char_start.has_value());
    }
    SUBCASE("an overlap-only model is pulled into the overlapping sentence") {
        OverlapQaModel model;
        model.weights[0] = 1.0;  // unigram overlap only
        SpanCandidate top = predict(model, sample);
        CHECK(top.sentence == 1);
        CHECK(top.token_start == 0);  // all spans tie within the sentence
    }
    SUBCASE("repeated prediction is identical") {
        OverlapQaModel model;
        Rng rng(6);
        for (double& w : model.weights) w = rng.normal();
        SpanCandidate a = predict(model, sample);
        SpanCandidate b = predict(model, sample);
        CHECK(a.text == b.text);
        CHECK(a.char_start == b.char_start);
        CHECK(a.sentence == b.sentence);
    }
}

TEST_CASE("training is deterministic for a fixed seed") {
    Corpus corpus = tiny_corpus();
    OverlapQaModel a;
    OverlapQaModel b;
    Rng r1(99);
    Rng r2(99);
    train(a, corpus, 5, 0.1, r1);
    train(b, corpus, 5, 0.1, r2);
    CHECK(a == b);

    OverlapQaModel c;
    Rng r3(100);
    train(c, corpus, 5, 0.1, r3);
    CHECK(a.weights != c.weights);
}

TEST_CASE("per-epoch loss does not increase beyond noise") {
    Corpus corpus = tiny_corpus();
    OverlapQaModel model;
    Rng rng(7);
    TrainReport report = train(model, corpus, 5, 0.1, rng);
    REQUIRE(report.epoch_losses.size() == 5);
    for (std::size_t e = 1; e < report.epoch_losses.size(); ++e)
        CHECK(report.epoch_losses[e] <= report.epoch_losses[e - 1] * 1.05);
}

TEST_CASE("predict_corpus pairs every id with a prediction") {
    Corpus corpus = tiny_corpus();
    OverlapQaModel model;
    model.weights[0] = 1.0;
    auto preds = predict_corpus(model, corpus);
    CHECK(preds.size() == corpus.samples.size());
    for (const QaSample& s : corpus.samples) CHECK(preds.count(s.id) == 1);
}

TEST_CASE("model JSON round-trips and rejects malformed input") {
    OverlapQaModel model;
    Rng rng(11);
    for (double& w : model.weights) w = rng.normal();
    model.no_answer_bias = -0.25;

    OverlapQaModel back = parse_model(serialize_model(model));
    CHECK(back == model);

    CHECK_THROWS_AS(parse_model("{"), ParseError);
    CHECK_THROWS_AS(parse_model(R"({"weights":[1,2],"no_answer_bias":0,"feature_spec_version":1})"),
                    ParseError);
    CHECK_THROWS_AS(parse_model(R"({"weights":[0,0,0,0,0,0,0,0],"no_answer_bias":0,"feature_spec_version":2})"),
                    ParseError);
    CHECK_THROWS_AS(parse_model(R"({"no_answer_bias":0,"feature_spec_version":1})"),
                    ParseError);
}
