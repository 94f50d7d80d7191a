#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "advforge/aug_policy.hpp"
#include "advforge/bayes_search.hpp"
#include "advforge/eval_metrics.hpp"
#include "advforge/lexical_resources.hpp"
#include "advforge/qa_corpus.hpp"
#include "advforge/task_model.hpp"

namespace advforge {

/// Everything one search run needs. Output paths left empty are simply not
/// written. The reward corpus may come from a different domain than the
/// training corpus; only its dev-style samples are ever consulted.
struct SearchConfig {
    std::string optimizer = "bayes";  // "bayes" or "auto"
    std::filesystem::path train_path;
    std::filesystem::path reward_path;
    std::filesystem::path resource_dir;
    SquadFormat format = SquadFormat::squad_v2;

    std::size_t iterations = 100;
    std::size_t init_random = 20;  // bayes: uniform probes before guidance
    std::size_t blocks = 3;        // auto: sub-policies per sampled policy
    double controller_lr = 0.05;
    std::size_t ratio = 3;
    bool include_invalidate = true;
    bool reward_em = false;

    std::size_t base_epochs = 3;
    double base_lr = 0.5;
    std::size_t finetune_epochs = 2;
    double finetune_lr = 1.0;
    uint64_t seed = 0;

    std::filesystem::path policy_out;
    std::filesystem::path trace_out;
    std::filesystem::path report_out;
    std::filesystem::path table_out;

    bool operator==(const SearchConfig&) const = default;
};

void validate_search_config(const SearchConfig& cfg);

/// Loaded corpora, resources, and the base model trained once on the clean
/// training corpus; shared by every reward evaluation of a run.
struct RewardContext {
    SearchConfig cfg;
    Corpus train;
    Corpus reward;
    ResourceBundle resources;
    OverlapQaModel base_model;
};

RewardContext make_reward_context(const SearchConfig& cfg);

/// Augments the training corpus with the policy, finetunes a clone of the
/// base model on it, and evaluates on the reward corpus. Deterministic in
/// (policy, cfg.seed).
EvalReport eval_of_policy(const Policy& policy, const RewardContext& ctx);

/// The scalar the optimizers see: mean F1 / 100 (or EM / 100 when
/// cfg.reward_em is set).
double reward_of_policy(const Policy& policy, const RewardContext& ctx);

struct ConditionScores {
    double f1 = 0.0;  // percent scale
    double em = 0.0;

    bool operator==(const ConditionScores&) const = default;
};

struct RunReport {
    std::string optimizer;
    Policy best_policy;
    double best_reward = 0.0;
    double zero_policy_reward = 0.0;
    double uniform_reward = 0.0;
    ConditionScores base;      // base model, no finetune
    ConditionScores uniform;   // finetuned on the uniform-augment control
    ConditionScores searched;  // finetuned with the best policy
    std::vector<double> best_x;
    SearchTrace trace;
    std::vector<double> iteration_seconds;

    bool operator==(const RunReport&) const = default;
};

/// Full loop: build the context, dispatch to the configured optimizer,
/// evaluate the controls, and write whichever output paths are set.
RunReport run_search(const SearchConfig& cfg);

std::string serialize_run_report(const RunReport& report);
RunReport parse_run_report(const std::string& json_text);

/// Aligned comparison table (Base / UniS / searched rows, F1 and EM columns)
/// followed by the neighbor-distance moving-average series.
std::string render_report_table(const RunReport& report);

void emit_report(const RunReport& report, const std::filesystem::path& json_path,
                 const std::filesystem::path& table_path);

} // namespace advforge
