#include <doctest.h>

#include <cmath>

#include "advforge/errors.hpp"
#include "advforge/eval_metrics.hpp"
#include "advforge/rng.hpp"

using namespace advforge;

TEST_CASE("normalize_answer applies the four rules in order") {
    CHECK(normalize_answer("The Cat!") == std::vector<std::string>{"cat"});
    CHECK(normalize_answer("a  b") == std::vector<std::string>{"b"});
    CHECK(normalize_answer("U.S. Army") == std::vector<std::string>{"us", "army"});
    CHECK(normalize_answer("") == std::vector<std::string>{});
    CHECK(normalize_answer("an apple") == std::vector<std::string>{"apple"});
    CHECK(normalize_answer("the the the") == std::vector<std::string>{});
    CHECK(normalize_answer("it's fine") == std::vector<std::string>{"its", "fine"});
    // curly quotes and dashes count as punctuation too
    CHECK(normalize_answer("“quoted”") == std::vector<std::string>{"quoted"});
    CHECK(normalize_answer("1914–1918") == std::vector<std::string>{"19141918"});
}

TEST_CASE("f1_em token arithmetic") {
    auto [f1, em] = f1_em("the cat sat", {"cat sat down"});
    CHECK(f1 == doctest::Approx(0.8));
    CHECK(em == 0.0);

    auto exact = f1_em("Paris", {"paris"});
    CHECK(exact.first == doctest::Approx(1.0));
    CHECK(exact.second == 1.0);

    auto multi = f1_em("blue whale", {"red fox", "blue whale"});
    CHECK(multi.first == doctest::Approx(1.0));
    CHECK(multi.second == 1.0);

    auto disjoint = f1_em("alpha", {"beta"});
    CHECK(disjoint.first == 0.0);
    CHECK(disjoint.second == 0.0);
}

TEST_CASE("no-answer conventions") {
    auto both = f1_em("", {});
    CHECK(both.first == 1.0);
    CHECK(both.second == 1.0);

    CHECK(f1_em("something", {}).first == 0.0);
    CHECK(f1_em("", {"gold"}).first == 0.0);

    // normalization can empty a non-empty string
    auto articles = f1_em("the", {});
    CHECK(articles.first == 1.0);
}

TEST_CASE("f1 is symmetric for single golds and em implies perfect f1") {
    const char* phrases[] = {"cat sat",     "the big dog", "a b c",
                             "numbers 1 2", "same same",   ""};
    for (const char* x : phrases)
        for (const char* y : phrases) {
            auto xy = f1_em(x, {y});
            auto yx = f1_em(y, {x});
            CHECK(xy.first == doctest::Approx(yx.first));
            CHECK(xy.first >= 0.0);
            CHECK(xy.first <= 1.0);
            if (xy.second == 1.0) CHECK(xy.first == doctest::Approx(1.0));
        }
}

namespace {

Corpus two_sample_corpus() {
    Corpus c;
    c.samples.push_back(make_sample("s1", "Rome fell in 476.", "When did Rome fall?",
                                    {{13, "476"}}));
    c.samples.push_back(make_sample("s2", "The sea is salty.", "What is salty?",
                                    {{4, "sea"}}));
    return c;
}

} // namespace

TEST_CASE("evaluate aggregates scale to 100 and cover all samples") {
    Corpus c = two_sample_corpus();
    std::map<std::string, Prediction> preds;
    preds["s1"] = {"476", 13};
    preds["s2"] = {"sea", 4};
    EvalReport report = evaluate(preds, c);
    CHECK(report.f1 == doctest::Approx(100.0));
    CHECK(report.em == doctest::Approx(100.0));

    preds["s2"] = {"nothing here", std::nullopt};
    report = evaluate(preds, c);
    CHECK(report.f1 == doctest::Approx(50.0));
    CHECK(report.em == doctest::Approx(50.0));

    double mean_f1 = 0;
    for (const auto& [id, s] : report.per_sample) mean_f1 += s.first;
    CHECK(report.f1 == doctest::Approx(100.0 * mean_f1 / 2).epsilon(1e-9));

    preds.erase("s2");
    CHECK_THROWS_WITH_AS(evaluate(preds, c), doctest::Contains("s2"),
                         PreconditionError);
}

TEST_CASE("strict position zeroes right-text wrong-place predictions") {
    Corpus c;
    // the same answer text appears twice; gold is the second occurrence
    c.samples.push_back(make_sample("s1", "Blue was seen. The flag is Blue.",
                                    "What color is the flag?", {{27, "Blue"}}));
    std::map<std::string, Prediction> preds;
    preds["s1"] = {"Blue", 0};

    EvalReport loose = evaluate(preds, c, false);
    CHECK(loose.per_sample["s1"].first == doctest::Approx(1.0));

    EvalReport strict = evaluate(preds, c, true);
    CHECK(strict.per_sample["s1"].first == 0.0);
    CHECK(strict.per_sample["s1"].second == 0.0);

    preds["s1"] = {"Blue", 27};
    strict = evaluate(preds, c, true);
    CHECK(strict.per_sample["s1"].first == doctest::Approx(1.0));
}

namespace {

EvalReport constant_report(std::size_t n, double f1) {
    EvalReport r;
    for (std::size_t i = 0; i < n; ++i)
        r.per_sample["id" + std::to_string(i)] = {f1, f1 >= 1.0 ? 1.0 : 0.0};
    r.f1 = 100.0 * f1;
    r.em = r.per_sample.begin()->second.second * 100.0;
    return r;
}

} // namespace

TEST_CASE("bootstrap p-value edge conventions") {
    EvalReport a = constant_report(50, 1.0);
    CHECK(bootstrap_pvalue(a, a, 10000, 1) == 1.0);

    EvalReport b = constant_report(50, 0.0);
    CHECK(bootstrap_pvalue(a, b, 10000, 1) == 0.0);
    CHECK(bootstrap_pvalue(b, a, 10000, 1) == 0.0);

    EvalReport mismatched = constant_report(49, 1.0);
    CHECK_THROWS_AS(bootstrap_pvalue(a, mismatched, 100, 1), PreconditionError);
}

TEST_CASE("bootstrap agrees with an independent resampler") {
    // two reports with a small noisy gap
    EvalReport a, b;
    Rng gen(99);
    std::vector<double> da, db;
    for (int i = 0; i < 60; ++i) {
        std::string id = "x" + std::to_string(i);
        double va = gen.uniform();
        double vb = std::min(1.0, std::max(0.0, va - 0.05 + 0.3 * (gen.uniform() - 0.5)));
        a.per_sample[id] = {va, 0.0};
        b.per_sample[id] = {vb, 0.0};
        da.push_back(va);
        db.push_back(vb);
    }

    const std::size_t n = 20000;
    double p = bootstrap_pvalue(a, b, n, 5);

    // oracle: separately coded sign-flip resampler on its own rng stream
    std::vector<double> diffs(da.size());
    double observed = 0;
    for (std::size_t i = 0; i < da.size(); ++i) {
        diffs[i] = da[i] - db[i];
        observed += diffs[i];
    }
    observed /= diffs.size();
    std::size_t opposite = 0;
    Rng oracle_rng(12345);
    for (std::size_t r = 0; r < n; ++r) {
        double sum = 0;
        for (std::size_t i = 0; i < diffs.size(); ++i)
            sum += diffs[oracle_rng.uniform_below(diffs.size())];
        double delta = sum / diffs.size();
        if (observed > 0 ? delta <= 0 : delta >= 0) ++opposite;
    }
    double p_oracle = static_cast<double>(opposite) / n;
    CHECK(std::abs(p - p_oracle) < 0.01);
}

TEST_CASE("bootstrap p shrinks as the gap grows") {
    Rng gen(7);
    std::vector<double> base;
    for (int i = 0; i < 40; ++i) base.push_back(gen.uniform());

    double prev_p = 1.0;
    for (double gap : {0.01, 0.05, 0.15, 0.4}) {
        EvalReport a, b;
        for (int i = 0; i < 40; ++i) {
            std::string id = "g" + std::to_string(i);
            a.per_sample[id] = {std::min(1.0, base[i] + gap), 0.0};
            b.per_sample[id] = {base[i], 0.0};
        }
        double p = bootstrap_pvalue(a, b, 20000, 3);
        CHECK(p <= prev_p + 0.02);  // monotone within resampling noise
        prev_p = p;
    }
    CHECK(prev_p < 0.01);
}

TEST_CASE("report JSON round-trips") {
    Corpus c = two_sample_corpus();
    std::map<std::string, Prediction> preds;
    preds["s1"] = {"476", 13};
    preds["s2"] = {"salt water", std::nullopt};
    EvalReport report = evaluate(preds, c);

    std::string bytes = serialize_report_json(report);
    EvalReport back = parse_report_json(bytes);
    CHECK(back.f1 == doctest::Approx(report.f1));
    CHECK(back.em == doctest::Approx(report.em));
    CHECK(back.per_sample == report.per_sample);
    CHECK(serialize_report_json(back) == bytes);
    CHECK_THROWS_AS(parse_report_json("{}"), ParseError);
    CHECK_THROWS_AS(parse_report_json("not json"), ParseError);
}
