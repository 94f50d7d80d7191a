#include <benchmark/benchmark.h>

#include <filesystem>
#include <vector>

#include "advforge/adversary_forge.hpp"
#include "advforge/aug_policy.hpp"
#include "advforge/bayes_search.hpp"
#include "advforge/controller_search.hpp"
#include "advforge/eval_metrics.hpp"
#include "advforge/qa_corpus.hpp"
#include "advforge/rng.hpp"
#include "advforge/task_model.hpp"

namespace {

using namespace advforge;

const ResourceBundle& resources() {
    static const ResourceBundle bundle = ResourceBundle::load(
        std::filesystem::path(ADVFORGE_SOURCE_DIR) / "data" / "resources");
    return bundle;
}

const Corpus& dev_corpus() {
    static const Corpus corpus =
        load_corpus(std::filesystem::path(ADVFORGE_SOURCE_DIR) / "data" / "toy" /
                        "dev_a.json",
                    SquadFormat::squad_v2);
    return corpus;
}

const QaSample& answerable_sample() {
    static const QaSample sample = [] {
        for (const QaSample& s : dev_corpus().samples)
            if (!s.is_impossible) return s;
        return dev_corpus().samples.front();
    }();
    return sample;
}

GpState filled_gp(std::size_t n, std::size_t dim) {
    GpState state(dim);
    Rng rng(91);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> x(dim);
        for (double& v : x) v = rng.uniform();
        state.add(std::move(x), rng.normal());
    }
    return state;
}

void GpPosterior(benchmark::State& state) {
    const GpState gp = filled_gp(static_cast<std::size_t>(state.range(0)), 6);
    gp.posterior(std::vector<double>(6, 0.5));  // factorize outside the loop
    Rng rng(17);
    for (auto _ : state) {
        std::vector<double> query(6);
        for (double& v : query) v = rng.uniform();
        benchmark::DoNotOptimize(gp.posterior(query));
    }
}
BENCHMARK(GpPosterior)->Arg(10)->Arg(30)->Arg(100);

void GpProposeNext(benchmark::State& state) {
    const GpState gp = filled_gp(static_cast<std::size_t>(state.range(0)), 6);
    Rng rng(17);
    for (auto _ : state) benchmark::DoNotOptimize(propose_next(gp, {}, rng));
}
BENCHMARK(GpProposeNext)->Arg(10)->Arg(30)->Arg(100);

void ForgeAddSentDiverse(benchmark::State& state) {
    const QaSample& sample = answerable_sample();
    std::uint64_t i = 0;
    for (auto _ : state) {
        Rng rng(derive_seed(3, i++));
        benchmark::DoNotOptimize(add_sent_diverse(sample, resources(), rng));
    }
}
BENCHMARK(ForgeAddSentDiverse);

void ForgePerturbAnswer(benchmark::State& state) {
    const QaSample& sample = answerable_sample();
    std::uint64_t i = 0;
    for (auto _ : state) {
        Rng rng(derive_seed(4, i++));
        benchmark::DoNotOptimize(perturb_answer(sample, resources(), rng));
    }
}
BENCHMARK(ForgePerturbAnswer);

void ForgePerturbQuestion(benchmark::State& state) {
    const QaSample& sample = answerable_sample();
    std::uint64_t i = 0;
    for (auto _ : state) {
        Rng rng(derive_seed(5, i++));
        benchmark::DoNotOptimize(perturb_question(sample, resources(), rng));
    }
}
BENCHMARK(ForgePerturbQuestion);

void UniformAugmentDev(benchmark::State& state) {
    std::uint64_t i = 0;
    for (auto _ : state) {
        Rng rng(derive_seed(6, i++));
        benchmark::DoNotOptimize(uniform_augment(dev_corpus(), resources(), rng));
    }
}
BENCHMARK(UniformAugmentDev);

void EvaluateDev(benchmark::State& state) {
    OverlapQaModel model;
    Rng rng(7);
    train(model, dev_corpus(), 2, 0.5, rng);
    const auto predictions = predict_corpus(model, dev_corpus());
    for (auto _ : state)
        benchmark::DoNotOptimize(evaluate(predictions, dev_corpus()));
}
BENCHMARK(EvaluateDev);

void ControllerStep(benchmark::State& state) {
    ControllerState controller = make_controller(3, 11);
    Rng rng(12);
    for (auto _ : state) {
        const SampledPolicy sampled = sample_policy(controller, rng);
        reinforce_update(controller, sampled, 0.5, 0.05);
        benchmark::DoNotOptimize(controller.baseline);
    }
}
BENCHMARK(ControllerStep);

} // namespace

BENCHMARK_MAIN();
