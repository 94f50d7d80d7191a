#include "advforge/search_orchestrator.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <variant>

#include <json.hpp>

#include "advforge/controller_search.hpp"
#include "advforge/errors.hpp"
#include "advforge/rng.hpp"

namespace advforge {

namespace {

double reward_scale(const EvalReport& report, bool use_em) {
    return (use_em ? report.em : report.f1) / 100.0;
}

ConditionScores scores_of(const EvalReport& report) {
    return ConditionScores{report.f1, report.em};
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ParseError("cannot open " + path.string() + " for writing");
    }
    out << content;
}

EvalReport finetune_and_score(const RewardContext& ctx, const AugmentedCorpus& data,
                              uint64_t finetune_seed) {
    OverlapQaModel model = ctx.base_model;
    Rng rng(finetune_seed);
    train(model, data, ctx.cfg.finetune_epochs, ctx.cfg.finetune_lr, rng);
    return evaluate(predict_corpus(model, ctx.reward), ctx.reward);
}

EvalReport eval_of_uniform(const RewardContext& ctx) {
    const uint64_t s =
        derive_seed(derive_seed(ctx.cfg.seed, "reward"), "uniform-sampling");
    Rng aug_rng(derive_seed(s, "augment"));
    const AugmentedCorpus data = uniform_augment(ctx.train, ctx.resources, aug_rng);
    return finetune_and_score(ctx, data, derive_seed(s, "finetune"));
}

} // namespace

void validate_search_config(const SearchConfig& cfg) {
    if (cfg.optimizer != "bayes" && cfg.optimizer != "auto") {
        throw ConfigError("optimizer must be bayes or auto, got " + cfg.optimizer);
    }
    if (cfg.iterations < 1) {
        throw ConfigError("iteration budget must be at least 1");
    }
    if (cfg.optimizer == "bayes" &&
        (cfg.init_random < 1 || cfg.iterations < cfg.init_random)) {
        throw ConfigError("need iterations >= init_random >= 1");
    }
    if (cfg.blocks < 1) {
        throw ConfigError("need at least one sub-policy block");
    }
    if (!(cfg.controller_lr > 0.0)) {
        throw ConfigError("controller learning rate must be positive");
    }
    if (cfg.ratio < 1) {
        throw ConfigError("augmentation ratio must be at least 1");
    }
    if (cfg.base_epochs < 1 || cfg.finetune_epochs < 1) {
        throw ConfigError("epoch counts must be at least 1");
    }
    if (!(cfg.base_lr > 0.0) || !(cfg.finetune_lr > 0.0)) {
        throw ConfigError("learning rates must be positive");
    }
    if (cfg.train_path.empty() || cfg.reward_path.empty()) {
        throw ConfigError("train and reward corpus paths are required");
    }
    if (cfg.resource_dir.empty()) {
        throw ConfigError("resource directory is required");
    }
}

RewardContext make_reward_context(const SearchConfig& cfg) {
    validate_search_config(cfg);
    for (const auto& path : {cfg.train_path, cfg.reward_path, cfg.resource_dir}) {
        if (!std::filesystem::exists(path)) {
            throw ConfigError("path does not exist: " + path.string());
        }
    }
    RewardContext ctx;
    ctx.cfg = cfg;
    ctx.train = load_corpus(cfg.train_path, cfg.format);
    ctx.reward = load_corpus(cfg.reward_path, cfg.format);
    ctx.resources = ResourceBundle::load(cfg.resource_dir);

    Rng rng(derive_seed(cfg.seed, "base-train"));
    train(ctx.base_model, ctx.train, cfg.base_epochs, cfg.base_lr, rng);
    return ctx;
}

EvalReport eval_of_policy(const Policy& policy, const RewardContext& ctx) {
    const std::string key = serialize_policy(policy);
    const uint64_t s = derive_seed(derive_seed(ctx.cfg.seed, "reward"), key);
    try {
        Rng aug_rng(derive_seed(s, "augment"));
        const AugmentedCorpus data = std::visit(
            [&](const auto& p) -> AugmentedCorpus {
                using P = std::decay_t<decltype(p)>;
                if constexpr (std::is_same_v<P, DiscretePolicy>) {
                    return apply_discrete(ctx.train, p, ctx.resources, aug_rng,
                                          ctx.cfg.ratio);
                } else {
                    return apply_continuous(ctx.train, p, ctx.resources, aug_rng,
                                            ctx.cfg.ratio);
                }
            },
            policy);
        return finetune_and_score(ctx, data, derive_seed(s, "finetune"));
    } catch (const std::exception& e) {
        throw Error("reward evaluation failed for policy " +
                    nlohmann::json::parse(key).dump() + ": " + e.what());
    }
}

double reward_of_policy(const Policy& policy, const RewardContext& ctx) {
    return reward_scale(eval_of_policy(policy, ctx), ctx.cfg.reward_em);
}

RunReport run_search(const SearchConfig& cfg) {
    const RewardContext ctx = make_reward_context(cfg);

    RunReport report;
    report.optimizer = cfg.optimizer;

    std::vector<double> seconds;
    const auto timed_reward = [&ctx, &seconds](const Policy& policy) {
        const auto start = std::chrono::steady_clock::now();
        try {
            const double reward = reward_of_policy(policy, ctx);
            seconds.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count());
            return reward;
        } catch (...) {
            seconds.push_back(
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                    .count());
            throw;
        }
    };

    Rng search_rng(derive_seed(cfg.seed, "search"));
    if (cfg.optimizer == "bayes") {
        const auto& roster =
            cfg.include_invalidate ? full_roster() : roster_without_invalidate();
        const auto to_policy = [&](const std::vector<double>& x) {
            ContinuousPolicy p = make_continuous_policy(cfg.include_invalidate);
            std::size_t i = 0;
            for (const Combination& combo : roster) {
                p.probs[combination_name(combo)] = x[i++];
            }
            return p;
        };
        const Objective objective = [&](const std::vector<double>& x) {
            return timed_reward(Policy{to_policy(x)});
        };
        const SearchResult outcome =
            optimize(objective, roster.size(), search_rng, cfg.iterations, cfg.init_random);
        report.trace = outcome.trace;
        report.best_x = outcome.best_x;
        report.best_reward = outcome.best_reward;
        report.best_policy = to_policy(outcome.best_x);
    } else {
        ControllerState controller =
            make_controller(cfg.blocks, derive_seed(cfg.seed, "controller"));
        const PolicyObjective objective = [&](const DiscretePolicy& p) {
            return timed_reward(Policy{p});
        };
        const ControllerSearchResult outcome = run_controller_search(
            controller, objective, cfg.iterations, search_rng, cfg.controller_lr);
        report.trace = to_search_trace(outcome);
        report.best_reward = outcome.best_reward;
        report.best_policy = outcome.best_policy;
        for (const PolicyStep& step : outcome.steps) {
            if (step.reward == outcome.best_reward) {
                report.best_x = encode_choices(step.sampled.choices);
                break;
            }
        }
    }
    report.iteration_seconds = std::move(seconds);

    report.base = scores_of(evaluate(predict_corpus(ctx.base_model, ctx.reward), ctx.reward));
    const EvalReport uniform_eval = eval_of_uniform(ctx);
    report.uniform = scores_of(uniform_eval);
    report.uniform_reward = reward_scale(uniform_eval, cfg.reward_em);
    const EvalReport zero_eval =
        eval_of_policy(Policy{make_continuous_policy(cfg.include_invalidate)}, ctx);
    report.zero_policy_reward = reward_scale(zero_eval, cfg.reward_em);
    report.searched = scores_of(eval_of_policy(report.best_policy, ctx));

    if (!cfg.policy_out.empty()) {
        write_text_file(cfg.policy_out, serialize_policy(report.best_policy));
    }
    if (!cfg.trace_out.empty()) {
        write_text_file(cfg.trace_out,
                        serialize_trace(SearchResult{report.best_x, report.best_reward,
                                                     report.trace}));
    }
    emit_report(report, cfg.report_out, cfg.table_out);
    return report;
}

std::string serialize_run_report(const RunReport& report) {
    nlohmann::json doc;
    doc["optimizer"] = report.optimizer;
    doc["best_policy"] = nlohmann::json::parse(serialize_policy(report.best_policy));
    doc["best_reward"] = report.best_reward;
    doc["zero_policy_reward"] = report.zero_policy_reward;
    doc["uniform_reward"] = report.uniform_reward;
    doc["scores"] = {
        {"base", {{"f1", report.base.f1}, {"em", report.base.em}}},
        {"uniform", {{"f1", report.uniform.f1}, {"em", report.uniform.em}}},
        {"searched", {{"f1", report.searched.f1}, {"em", report.searched.em}}},
    };
    doc["best_x"] = report.best_x;
    doc["trace"] = nlohmann::json::array();
    for (const TraceStep& step : report.trace.steps) {
        doc["trace"].push_back({{"x", step.x}, {"reward", step.reward}});
    }
    doc["iteration_seconds"] = report.iteration_seconds;
    doc["neighbor_distance_ma"] = moving_average(neighbor_distances(report.trace), 10);
    return doc.dump(2) + "\n";
}

RunReport parse_run_report(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("run report is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("optimizer") || !doc.contains("best_policy") ||
        !doc.contains("scores") || !doc.contains("trace")) {
        throw ParseError("run report is missing required fields");
    }
    try {
        RunReport report;
        report.optimizer = doc["optimizer"].get<std::string>();
        report.best_policy = parse_policy(doc["best_policy"].dump());
        report.best_reward = doc.value("best_reward", 0.0);
        report.zero_policy_reward = doc.value("zero_policy_reward", 0.0);
        report.uniform_reward = doc.value("uniform_reward", 0.0);
        const auto read_scores = [&doc](const char* name) {
            const nlohmann::json& node = doc["scores"].at(name);
            return ConditionScores{node.at("f1").get<double>(), node.at("em").get<double>()};
        };
        report.base = read_scores("base");
        report.uniform = read_scores("uniform");
        report.searched = read_scores("searched");
        report.best_x = doc.value("best_x", std::vector<double>{});
        for (const auto& item : doc["trace"]) {
            report.trace.steps.push_back(TraceStep{item.at("x").get<std::vector<double>>(),
                                                   item.at("reward").get<double>()});
        }
        report.iteration_seconds = doc.value("iteration_seconds", std::vector<double>{});
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("run report malformed: ") + e.what());
    }
}

std::string render_report_table(const RunReport& report) {
    std::ostringstream out;
    char line[96];
    std::snprintf(line, sizeof line, "%-10s%10s%10s\n", "", "F1", "EM");
    out << line;
    const auto row = [&out, &line](const std::string& label, const ConditionScores& s) {
        std::snprintf(line, sizeof line, "%-10s%10.2f%10.2f\n", label.c_str(), s.f1, s.em);
        out << line;
    };
    row("Base", report.base);
    row("UniS", report.uniform);
    row(report.optimizer == "auto" ? "Auto" : "Bayes", report.searched);

    out << "\nneighbor-distance MA(10)\n";
    const auto series = moving_average(neighbor_distances(report.trace), 10);
    for (std::size_t i = 0; i < series.size(); ++i) {
        std::snprintf(line, sizeof line, "%6zu  %10.4f\n", i + 1, series[i]);
        out << line;
    }
    return out.str();
}

void emit_report(const RunReport& report, const std::filesystem::path& json_path,
                 const std::filesystem::path& table_path) {
    if (!json_path.empty()) {
        write_text_file(json_path, serialize_run_report(report));
    }
    if (!table_path.empty()) {
        write_text_file(table_path, render_report_table(report));
    }
}

} // namespace advforge
