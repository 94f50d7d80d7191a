// Command-line front end: corpus attacks, policy augmentation, model
// training and prediction, evaluation, significance testing, context
// windowing, and the full policy search loop.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "advforge/adversary_forge.hpp"
#include "advforge/aug_policy.hpp"
#include "advforge/errors.hpp"
#include "advforge/eval_metrics.hpp"
#include "advforge/qa_corpus.hpp"
#include "advforge/rng.hpp"
#include "advforge/search_orchestrator.hpp"
#include "advforge/task_model.hpp"

namespace {

using namespace advforge;

SquadFormat parse_format(const std::string& name) {
    if (name == "v1" || name == "squad_v1") return SquadFormat::squad_v1;
    if (name == "v2" || name == "squad_v2") return SquadFormat::squad_v2;
    throw ConfigError("unknown corpus format '" + name + "' (expected v1 or v2)");
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
    out << content;
}

struct AttackArgs {
    std::string corpus, method, resources, out;
    std::string placement = "random";
    std::string format = "v2";
    std::size_t k = 2;
    uint64_t seed = 0;
};

int run_attack(const AttackArgs& args) {
    const auto kind = parse_adversary(args.method);
    if (!kind) throw ConfigError("unknown adversary '" + args.method + "'");
    const auto placement = parse_placement(args.placement);
    if (!placement) throw ConfigError("unknown placement '" + args.placement + "'");
    const SquadFormat format = parse_format(args.format);
    if (args.resources.empty())
        throw ConfigError("no resource directory (use --resources or ADVFORGE_RESOURCES)");

    const Corpus corpus = load_corpus(args.corpus, format);
    const ResourceBundle res = ResourceBundle::load(args.resources);
    Rng rng(derive_seed(args.seed, "attack"));

    Corpus out;
    std::size_t failed = 0;
    for (const QaSample& sample : corpus.samples) {
        Rng sample_rng = rng.child(sample.id);
        try {
            QaSample attacked;
            switch (*kind) {
                case AdversaryKind::AddSentDiverse:
                    attacked = add_sent_diverse(sample, res, sample_rng).first;
                    break;
                case AdversaryKind::AddKSentDiverse:
                    attacked = add_k_sent_diverse(sample, args.k, res, sample_rng);
                    break;
                case AdversaryKind::AddAnswerPosition:
                    attacked = add_answer_position(sample, res, sample_rng, *placement);
                    break;
                case AdversaryKind::InvalidateAnswer:
                    attacked = invalidate_answer(sample, res, sample_rng);
                    break;
                case AdversaryKind::PerturbAnswer:
                    attacked = perturb_answer(sample, res, sample_rng);
                    break;
                case AdversaryKind::PerturbQuestion:
                    attacked = perturb_question(sample, res, sample_rng);
                    break;
            }
            out.provenance[attacked.id] = std::string(adversary_name(*kind));
            out.samples.push_back(std::move(attacked));
        } catch (const Error& e) {
            ++failed;
            std::fprintf(stderr, "%s: %s\n", sample.id.c_str(), e.what());
        }
    }
    save_corpus(out, args.out, format);
    std::printf("attacked %zu of %zu samples (%zu failed) -> %s\n", out.samples.size(),
                corpus.samples.size(), failed, args.out.c_str());
    return 0;
}

struct AugmentArgs {
    std::string corpus, policy, resources, out;
    std::string format = "v2";
    std::size_t ratio = 1;
    uint64_t seed = 0;
};

int run_augment(const AugmentArgs& args) {
    const SquadFormat format = parse_format(args.format);
    if (args.resources.empty())
        throw ConfigError("no resource directory (use --resources or ADVFORGE_RESOURCES)");
    const Corpus corpus = load_corpus(args.corpus, format);
    const ResourceBundle res = ResourceBundle::load(args.resources);
    const Policy policy = parse_policy(read_text_file(args.policy));
    Rng rng(derive_seed(args.seed, "augment"));

    const AugmentedCorpus augmented = std::visit(
        [&](const auto& p) {
            using P = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<P, DiscretePolicy>)
                return apply_discrete(corpus, p, res, rng, args.ratio);
            else
                return apply_continuous(corpus, p, res, rng, args.ratio);
        },
        policy);
    save_corpus(augmented.corpus, args.out, format);
    std::printf("augmented %zu -> %zu samples -> %s\n", corpus.samples.size(),
                augmented.corpus.samples.size(), args.out.c_str());
    return 0;
}

struct TrainArgs {
    std::string corpus, out, init_model;
    std::string format = "v2";
    std::size_t epochs = 6;
    double lr = 0.5;
    uint64_t seed = 0;
};

int run_train(const TrainArgs& args) {
    const Corpus corpus = load_corpus(args.corpus, parse_format(args.format));
    OverlapQaModel model;
    if (!args.init_model.empty()) model = load_model(args.init_model);
    Rng rng(derive_seed(args.seed, "train"));
    const TrainReport report = train(model, corpus, args.epochs, args.lr, rng);
    save_model(model, args.out);
    std::printf("trained %zu epochs on %zu samples (%zu skipped), final loss %.4f -> %s\n",
                args.epochs, corpus.samples.size(), report.skipped,
                report.epoch_losses.empty() ? 0.0 : report.epoch_losses.back(),
                args.out.c_str());
    return 0;
}

struct PredictArgs {
    std::string corpus, model, out;
    std::string format = "v2";
    bool positions = false;
};

int run_predict(const PredictArgs& args) {
    const Corpus corpus = load_corpus(args.corpus, parse_format(args.format));
    const OverlapQaModel model = load_model(args.model);
    const auto predictions = predict_corpus(model, corpus);

    nlohmann::json out = nlohmann::json::object();
    for (const auto& [id, pred] : predictions) {
        if (args.positions) {
            nlohmann::json entry = {{"text", pred.text}};
            if (pred.char_start) entry["char_start"] = *pred.char_start;
            out[id] = std::move(entry);
        } else {
            out[id] = pred.text;
        }
    }
    write_text_file(args.out, out.dump(2) + "\n");
    std::printf("wrote %zu predictions -> %s\n", predictions.size(), args.out.c_str());
    return 0;
}

std::map<std::string, Prediction> load_predictions(const std::filesystem::path& path) {
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    if (!parsed.is_object()) throw ParseError(path.string() + ": expected a JSON object");
    std::map<std::string, Prediction> out;
    for (const auto& [id, value] : parsed.items()) {
        Prediction pred;
        if (value.is_string()) {
            pred.text = value.get<std::string>();
        } else if (value.is_object() && value.contains("text") &&
                   value["text"].is_string()) {
            pred.text = value["text"].get<std::string>();
            if (value.contains("char_start") && value["char_start"].is_number_unsigned())
                pred.char_start = value["char_start"].get<std::size_t>();
        } else {
            throw ParseError(path.string() + ": prediction for '" + id +
                             "' is neither a string nor a {text, char_start} object");
        }
        out[id] = std::move(pred);
    }
    return out;
}

struct EvalArgs {
    std::string corpus, predictions, out;
    std::string format = "v2";
    bool strict_position = false;
};

int run_eval(const EvalArgs& args) {
    const Corpus corpus = load_corpus(args.corpus, parse_format(args.format));
    const auto predictions = load_predictions(args.predictions);
    const EvalReport report = evaluate(predictions, corpus, args.strict_position);
    if (!args.out.empty()) save_report(report, args.out);
    std::printf("F1 %.2f  EM %.2f  (%zu samples)\n", report.f1, report.em,
                report.per_sample.size());
    return 0;
}

struct SignificanceArgs {
    std::string a, b;
    std::size_t samples = 100000;
    uint64_t seed = 0;
    bool em = false;
};

int run_significance(const SignificanceArgs& args) {
    const EvalReport a = load_report(args.a);
    const EvalReport b = load_report(args.b);
    const double p = bootstrap_pvalue(a, b, args.samples, args.seed, args.em);
    std::printf("p = %.6f  (%s, %zu bootstrap samples)\n", p, args.em ? "EM" : "F1",
                args.samples);
    return 0;
}

struct WindowArgs {
    std::string corpus, out;
    std::string format = "v2";
    std::size_t sentences = 0;
    std::size_t stride = 1;
    std::size_t max_windows = 2;
    uint64_t seed = 0;
};

int run_window(const WindowArgs& args) {
    const SquadFormat format = parse_format(args.format);
    const Corpus corpus = load_corpus(args.corpus, format);
    const Corpus windowed =
        window_corpus(corpus, args.sentences, args.stride, args.max_windows, args.seed);
    save_corpus(windowed, args.out, format);
    std::printf("windowed %zu -> %zu samples -> %s\n", corpus.samples.size(),
                windowed.samples.size(), args.out.c_str());
    return 0;
}

/// Flags the search subcommands share. Empty strings mean "not given on the
/// command line" so config-file values survive.
struct SearchArgs {
    std::string config_file;
    std::string train, dev, resources, env_resources;
    std::string policy_out, trace_out, report_out, table_out;
    std::string format;
    std::optional<std::size_t> iters, init, subpolicies, ratio;
    std::optional<uint64_t> seed;
    std::optional<bool> no_invalidate, em_reward;
};

void apply_config_file(SearchConfig& cfg, const std::filesystem::path& path) {
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    if (!parsed.is_object())
        throw ConfigError(path.string() + ": expected a JSON object");
    for (const auto& [key, value] : parsed.items()) {
        try {
            if (key == "optimizer") cfg.optimizer = value.get<std::string>();
            else if (key == "train_path") cfg.train_path = value.get<std::string>();
            else if (key == "reward_path") cfg.reward_path = value.get<std::string>();
            else if (key == "resource_dir") cfg.resource_dir = value.get<std::string>();
            else if (key == "format") cfg.format = parse_format(value.get<std::string>());
            else if (key == "iterations") cfg.iterations = value.get<std::size_t>();
            else if (key == "init_random") cfg.init_random = value.get<std::size_t>();
            else if (key == "blocks") cfg.blocks = value.get<std::size_t>();
            else if (key == "controller_lr") cfg.controller_lr = value.get<double>();
            else if (key == "ratio") cfg.ratio = value.get<std::size_t>();
            else if (key == "include_invalidate")
                cfg.include_invalidate = value.get<bool>();
            else if (key == "reward_em") cfg.reward_em = value.get<bool>();
            else if (key == "base_epochs") cfg.base_epochs = value.get<std::size_t>();
            else if (key == "base_lr") cfg.base_lr = value.get<double>();
            else if (key == "finetune_epochs")
                cfg.finetune_epochs = value.get<std::size_t>();
            else if (key == "finetune_lr") cfg.finetune_lr = value.get<double>();
            else if (key == "seed") cfg.seed = value.get<uint64_t>();
            else if (key == "policy_out") cfg.policy_out = value.get<std::string>();
            else if (key == "trace_out") cfg.trace_out = value.get<std::string>();
            else if (key == "report_out") cfg.report_out = value.get<std::string>();
            else if (key == "table_out") cfg.table_out = value.get<std::string>();
            else throw ConfigError(path.string() + ": unknown key '" + key + "'");
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path.string() + ": key '" + key + "': " + e.what());
        }
    }
}

int run_search_cmd(const std::string& optimizer, const SearchArgs& args) {
    SearchConfig cfg;
    if (!args.config_file.empty()) apply_config_file(cfg, args.config_file);
    cfg.optimizer = optimizer;

    if (!args.train.empty()) cfg.train_path = args.train;
    if (!args.dev.empty()) cfg.reward_path = args.dev;
    if (!args.resources.empty()) cfg.resource_dir = args.resources;
    else if (cfg.resource_dir.empty() && !args.env_resources.empty())
        cfg.resource_dir = args.env_resources;
    if (!args.format.empty()) cfg.format = parse_format(args.format);
    if (args.iters) cfg.iterations = *args.iters;
    if (args.init) cfg.init_random = *args.init;
    if (args.subpolicies) cfg.blocks = *args.subpolicies;
    if (args.ratio) cfg.ratio = *args.ratio;
    if (args.seed) cfg.seed = *args.seed;
    if (args.no_invalidate) cfg.include_invalidate = !*args.no_invalidate;
    if (args.em_reward) cfg.reward_em = *args.em_reward;
    if (!args.policy_out.empty()) cfg.policy_out = args.policy_out;
    if (!args.trace_out.empty()) cfg.trace_out = args.trace_out;
    if (!args.report_out.empty()) cfg.report_out = args.report_out;
    if (!args.table_out.empty()) cfg.table_out = args.table_out;

    const RunReport report = run_search(cfg);
    std::fputs(render_report_table(report).c_str(), stdout);
    std::printf("\nbest reward %.4f  (zero policy %.4f, uniform %.4f)\n",
                report.best_reward, report.zero_policy_reward, report.uniform_reward);
    return 0;
}

void add_search_flags(CLI::App* cmd, SearchArgs& args, bool bayes) {
    cmd->add_option("--config", args.config_file,
                    "JSON config file; flags override its values");
    cmd->add_option("--train", args.train, "training corpus");
    cmd->add_option("--dev", args.dev, "reward corpus");
    cmd->add_option("--resources", args.resources, "resource directory");
    cmd->add_option("--format", args.format, "corpus format (v1 or v2)");
    cmd->add_option("--iters", args.iters, "search iterations");
    if (bayes) cmd->add_option("--init", args.init, "random probes before guidance");
    else cmd->add_option("--subpolicies", args.subpolicies, "sub-policies per policy");
    cmd->add_option("--ratio", args.ratio, "adversarial copies per original");
    cmd->add_option("--seed", args.seed, "master seed");
    cmd->add_flag("--no-invalidate", [&args](std::int64_t) { args.no_invalidate = true; },
                  "drop InvalidateAnswer from the search space");
    cmd->add_flag("--em-reward", [&args](std::int64_t) { args.em_reward = true; },
                  "reward on exact match instead of F1");
    cmd->add_option("--out", args.policy_out, "best policy JSON");
    cmd->add_option("--trace", args.trace_out, "search trace JSON");
    cmd->add_option("--report", args.report_out, "full run report JSON");
    cmd->add_option("--table", args.table_out, "comparison table text file");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"adversarial QA augmentation and policy search"};
    app.require_subcommand(1);

    const char* env_res = std::getenv("ADVFORGE_RESOURCES");
    const std::string env_resources = env_res ? env_res : "";

    AttackArgs attack_args;
    attack_args.resources = env_resources;
    auto* attack = app.add_subcommand("attack", "apply one transformation to a corpus");
    attack->add_option("--corpus", attack_args.corpus)->required();
    attack->add_option("--method", attack_args.method, "transformation name")->required();
    attack->add_option("--k", attack_args.k, "distractors for AddKSentDiverse");
    attack->add_option("--placement", attack_args.placement,
                       "random|prepend|append|before_answer");
    attack->add_option("--resources", attack_args.resources, "resource directory");
    attack->add_option("--seed", attack_args.seed);
    attack->add_option("--format", attack_args.format, "corpus format (v1 or v2)");
    attack->add_option("--out", attack_args.out)->required();

    AugmentArgs augment_args;
    augment_args.resources = env_resources;
    auto* augment = app.add_subcommand("augment", "apply an augmentation policy");
    augment->add_option("--corpus", augment_args.corpus)->required();
    augment->add_option("--policy", augment_args.policy, "policy JSON file")->required();
    augment->add_option("--ratio", augment_args.ratio);
    augment->add_option("--resources", augment_args.resources, "resource directory");
    augment->add_option("--seed", augment_args.seed);
    augment->add_option("--format", augment_args.format, "corpus format (v1 or v2)");
    augment->add_option("--out", augment_args.out)->required();

    TrainArgs train_args;
    auto* train_cmd = app.add_subcommand("train", "train the overlap QA model");
    train_cmd->add_option("--corpus", train_args.corpus)->required();
    train_cmd->add_option("--epochs", train_args.epochs);
    train_cmd->add_option("--lr", train_args.lr);
    train_cmd->add_option("--seed", train_args.seed);
    train_cmd->add_option("--model", train_args.init_model, "start from this model");
    train_cmd->add_option("--format", train_args.format, "corpus format (v1 or v2)");
    train_cmd->add_option("--out", train_args.out, "model JSON")->required();

    PredictArgs predict_args;
    auto* predict = app.add_subcommand("predict", "answer every question in a corpus");
    predict->add_option("--corpus", predict_args.corpus)->required();
    predict->add_option("--model", predict_args.model)->required();
    predict->add_flag("--positions", predict_args.positions,
                      "record span offsets for strict-position evaluation");
    predict->add_option("--format", predict_args.format, "corpus format (v1 or v2)");
    predict->add_option("--out", predict_args.out, "predictions JSON")->required();

    EvalArgs eval_args;
    auto* eval_cmd = app.add_subcommand("eval", "score predictions against a corpus");
    eval_cmd->add_option("--corpus", eval_args.corpus)->required();
    eval_cmd->add_option("--predictions", eval_args.predictions)->required();
    eval_cmd->add_flag("--strict-position", eval_args.strict_position,
                       "credit answers only at the gold offset");
    eval_cmd->add_option("--format", eval_args.format, "corpus format (v1 or v2)");
    eval_cmd->add_option("--out", eval_args.out, "report JSON");

    SignificanceArgs sig_args;
    auto* sig = app.add_subcommand("significance",
                                   "paired bootstrap test between two eval reports");
    sig->add_option("--a", sig_args.a, "first report JSON")->required();
    sig->add_option("--b", sig_args.b, "second report JSON")->required();
    sig->add_option("--samples", sig_args.samples);
    sig->add_option("--seed", sig_args.seed);
    sig->add_flag("--em", sig_args.em, "test EM instead of F1");

    WindowArgs window_args;
    auto* window = app.add_subcommand("window", "split long contexts into windows");
    window->add_option("--corpus", window_args.corpus)->required();
    window->add_option("--sentences", window_args.sentences, "window size in sentences")
        ->required();
    window->add_option("--stride", window_args.stride);
    window->add_option("--max-windows", window_args.max_windows,
                       "windows kept per long sample");
    window->add_option("--seed", window_args.seed);
    window->add_option("--format", window_args.format, "corpus format (v1 or v2)");
    window->add_option("--out", window_args.out)->required();

    auto* search = app.add_subcommand("search", "search for the best policy");
    search->require_subcommand(1);
    SearchArgs bayes_args, auto_args;
    bayes_args.env_resources = env_resources;
    auto_args.env_resources = env_resources;
    auto* bayes = search->add_subcommand("bayes", "Gaussian-process UCB search");
    add_search_flags(bayes, bayes_args, true);
    auto* autosub = search->add_subcommand("auto", "recurrent controller search");
    add_search_flags(autosub, auto_args, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*attack) return run_attack(attack_args);
        if (*augment) return run_augment(augment_args);
        if (*train_cmd) return run_train(train_args);
        if (*predict) return run_predict(predict_args);
        if (*eval_cmd) return run_eval(eval_args);
        if (*sig) return run_significance(sig_args);
        if (*window) return run_window(window_args);
        if (*bayes) return run_search_cmd("bayes", bayes_args);
        if (*autosub) return run_search_cmd("auto", auto_args);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "advforge: %s\n", e.what());
        return 2;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "advforge: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "advforge: %s\n", e.what());
        return 1;
    }
    return 0;
}
