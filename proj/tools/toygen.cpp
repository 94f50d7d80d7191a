// Generates the bundled toy QA corpora and the lexical resource files they
// rely on. Two vocabulary domains share the same sentence templates; domain A
// provides the train/dev pair, domain B a transfer dev set. A fourth corpus
// is dev_a with a distractor sentence planted in every context.

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "advforge/adversary_forge.hpp"
#include "advforge/errors.hpp"
#include "advforge/lexical_resources.hpp"
#include "advforge/qa_corpus.hpp"
#include "advforge/rng.hpp"

namespace {

using namespace advforge;

struct Domain {
    std::string tag;
    std::vector<std::string> persons;
    std::vector<std::string> royals;  // only ever appear in questions
    std::vector<std::string> places;
    std::vector<std::string> objects;
    std::vector<std::string> verbs;  // past tense, shared by questions and contexts
    std::vector<std::string> plain_adjectives;
    std::vector<std::pair<std::string, std::string>> materials;  // word, antonym
    std::vector<std::string> preps;
    std::vector<std::string> when_phrases;
};

Domain domain_a() {
    Domain d;
    d.tag = "a";
    d.persons = {"Alice", "Bob", "Carol", "David", "Emma", "Frank", "Grace", "Henry"};
    d.royals = {"King", "Queen", "Duke", "Bishop"};
    d.places = {"Paris", "Berlin", "Madrid", "Vienna", "Lisbon", "Prague", "Dublin",
                "Warsaw"};
    d.objects = {"tower", "bridge", "museum", "castle", "palace", "library", "temple",
                 "harbor"};
    d.verbs = {"guarded", "visited", "restored", "painted"};
    d.plain_adjectives = {"old", "grand", "ancient", "quiet"};
    d.materials = {{"stone", "wooden"},
                   {"marble", "plaster"},
                   {"brick", "timber"},
                   {"granite", "clay"}};
    d.preps = {"in", "near"};
    d.when_phrases = {"long ago", "last spring", "last winter"};
    return d;
}

Domain domain_b() {
    Domain d;
    d.tag = "b";
    d.persons = {"Akira", "Mei", "Ravi", "Sana", "Tomas", "Nadia", "Omar", "Lena"};
    d.royals = {"Emperor", "Empress", "Sultan", "Regent"};
    d.places = {"Kyoto", "Mumbai", "Cairo", "Lima", "Oslo", "Hanoi", "Quito", "Dakar"};
    d.objects = {"shrine", "market", "garden", "fortress", "mill", "granary", "chapel",
                 "pavilion"};
    d.verbs = {"repaired", "cleaned", "rebuilt", "admired"};
    d.plain_adjectives = {"small", "bright", "silent", "busy"};
    d.materials = {{"bamboo", "steel"},
                   {"copper", "glass"},
                   {"sandstone", "iron"},
                   {"cedar", "bronze"}};
    d.preps = {"in", "near"};
    d.when_phrases = {"long ago", "last spring", "last winter"};
    return d;
}

template <typename T>
const T& pick(const std::vector<T>& pool, Rng& rng) {
    return pool[rng.uniform_below(pool.size())];
}

template <typename T>
const T& pick_except(const std::vector<T>& pool, const T& avoid, Rng& rng) {
    const T* chosen = &pick(pool, rng);
    while (*chosen == avoid) chosen = &pick(pool, rng);
    return *chosen;
}

std::string decorated_object(const Domain& d, const std::string& object, Rng& rng) {
    std::string out;
    std::size_t n_plain = 1 + rng.uniform_below(2);
    std::vector<std::string> adjs = d.plain_adjectives;
    shuffle(adjs, rng);
    for (std::size_t i = 0; i < n_plain; ++i) out += adjs[i] + " ";
    out += pick(d.materials, rng).first + " " + object;
    return out;
}

/// One sample: a question "Who <verb> the <adjectives> <object> of the
/// <royal>?" over a shuffled context of one matching sentence (answerable
/// only), one about a different person, and one or two fillers. Impossible
/// samples use a verb and object no context sentence mentions.
QaSample make_toy_sample(const Domain& d, const std::string& id, bool impossible,
                         Rng& rng) {
    const std::string& verb = pick(d.verbs, rng);
    const std::string& object = pick(d.objects, rng);
    const std::string& person = pick(d.persons, rng);

    std::string question =
        "Who " + verb + " the " + decorated_object(d, object, rng) + " of the " +
        pick(d.royals, rng) + "?";

    std::vector<std::string> sentences;
    std::string answer_sentence;
    if (!impossible) {
        answer_sentence = person + " " + verb + " the " + object + " " +
                          pick(d.preps, rng) + " " + pick(d.places, rng) + ".";
        sentences.push_back(answer_sentence);
    }
    const std::string& other_verb = pick_except(d.verbs, verb, rng);
    const std::string& other_object = pick_except(d.objects, object, rng);
    sentences.push_back(pick_except(d.persons, person, rng) + " " + other_verb +
                        " the " + other_object + " " + pick(d.preps, rng) + " " +
                        pick(d.places, rng) + ".");
    const std::size_t n_fillers = 1 + rng.uniform_below(2);
    for (std::size_t i = 0; i < n_fillers; ++i) {
        const std::string& fv = pick_except(d.verbs, verb, rng);
        const std::string& fo = pick_except(d.objects, object, rng);
        sentences.push_back("The " + fo + " was " + fv + " " +
                            pick(d.when_phrases, rng) + ".");
    }
    shuffle(sentences, rng);

    std::string context;
    std::size_t answer_offset = std::string::npos;
    for (const std::string& s : sentences) {
        if (!context.empty()) context += " ";
        if (!impossible && s == answer_sentence) answer_offset = context.size();
        context += s;
    }

    std::vector<AnswerSpan> answers;
    if (!impossible) answers.push_back({answer_offset, person});
    return make_sample(id, context, question, std::move(answers), impossible);
}

Corpus make_toy_corpus(const Domain& d, const std::string& split, std::size_t size,
                       double impossible_rate, Rng& rng) {
    Corpus corpus;
    for (std::size_t i = 0; i < size; ++i) {
        char id[32];
        std::snprintf(id, sizeof id, "%s-%s-%04zu", d.tag.c_str(), split.c_str(), i);
        corpus.samples.push_back(
            make_toy_sample(d, id, rng.bernoulli(impossible_rate), rng));
    }
    return corpus;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing");
    out << content;
}

std::string gazetteer_text(const std::vector<Domain>& domains) {
    std::string out;
    for (const Domain& d : domains) {
        for (const auto& p : d.persons) out += p + "\tperson\n";
        for (const auto& r : d.royals) out += r + "\tperson\n";
        for (const auto& p : d.places) out += p + "\tplace\n";
    }
    return out;
}

std::string pos_text(const std::vector<Domain>& domains) {
    std::string out;
    for (const Domain& d : domains) {
        for (const auto& o : d.objects) out += o + "\tnoun\n";
        for (const auto& v : d.verbs) out += v + "\tverb\n";
        for (const auto& a : d.plain_adjectives) out += a + "\tadjective\n";
        for (const auto& [m, ant] : d.materials) {
            out += m + "\tadjective\n";
            out += ant + "\tadjective\n";
        }
    }
    out += "long\tadverb\nago\tadverb\n";
    return out;
}

std::string lexicon_text(const std::vector<Domain>& domains) {
    std::string out;
    for (const Domain& d : domains)
        for (const auto& [m, ant] : d.materials) out += m + "\tant\t" + ant + "\n";
    return out;
}

/// Pseudo-random unit-ish vectors, verbs pulled toward a shared centroid so a
/// verb's nearest neighbours are the other verbs.
std::string embeddings_text(const std::vector<Domain>& domains, uint64_t seed) {
    constexpr std::size_t kDim = 8;
    auto vector_for = [&](const std::string& word, const std::string& group) {
        Rng word_rng(derive_seed(seed, "emb-" + word));
        Rng group_rng(derive_seed(seed, "emb-group-" + group));
        std::vector<double> v(kDim);
        for (double& x : v) x = group_rng.normal() + 0.35 * word_rng.normal();
        return v;
    };
    std::vector<std::pair<std::string, std::string>> entries;
    for (const Domain& d : domains) {
        for (const auto& v : d.verbs) entries.emplace_back(v, "verb");
        for (const auto& o : d.objects) entries.emplace_back(o, "object");
        for (const auto& a : d.plain_adjectives) entries.emplace_back(a, "adjective");
        for (const auto& [m, ant] : d.materials) {
            entries.emplace_back(m, "adjective");
            entries.emplace_back(ant, "adjective");
        }
    }
    for (const char* w : {"who", "what", "person", "which", "the", "of", "in", "near"})
        entries.emplace_back(w, "function");

    std::string out;
    for (const auto& [word, group] : entries) {
        out += word;
        for (double x : vector_for(word, group)) {
            char buf[32];
            std::snprintf(buf, sizeof buf, " %.6f", x);
            out += buf;
        }
        out += "\n";
    }
    return out;
}

/// Sentence patterns in both context and question phrasing, so the n-gram
/// model has seen every verb in both slots.
std::string lm_text(const std::vector<Domain>& domains) {
    std::string out;
    for (const Domain& d : domains) {
        for (std::size_t i = 0; i < d.persons.size(); ++i) {
            const std::string& v = d.verbs[i % d.verbs.size()];
            const std::string& o = d.objects[i % d.objects.size()];
            const std::string& c = d.places[i % d.places.size()];
            out += d.persons[i] + " " + v + " the " + o + " in " + c + ".\n";
            out += d.persons[i] + " " + v + " the " + d.plain_adjectives[i % 4] + " " +
                   d.materials[i % 4].first + " " + o + " of the " +
                   d.royals[i % d.royals.size()] + ".\n";
        }
        for (std::size_t i = 0; i < d.objects.size(); ++i)
            out += "The " + d.objects[i] + " was " + d.verbs[i % d.verbs.size()] +
                   " long ago.\n";
    }
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"generate the bundled toy corpora and resource files"};
    std::string out_dir = "data";
    std::size_t train_size = 200;
    std::size_t dev_size = 60;
    uint64_t seed = 7;
    app.add_option("--out", out_dir, "output directory")->capture_default_str();
    app.add_option("--train", train_size, "training samples")->capture_default_str();
    app.add_option("--dev", dev_size, "dev samples per domain")->capture_default_str();
    app.add_option("--seed", seed, "generation seed")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        namespace fs = std::filesystem;
        const fs::path root(out_dir);
        const fs::path res_dir = root / "resources";
        const fs::path toy_dir = root / "toy";
        fs::create_directories(res_dir);
        fs::create_directories(toy_dir);

        const std::vector<Domain> domains = {domain_a(), domain_b()};
        write_text(res_dir / "gazetteer.tsv", gazetteer_text(domains));
        write_text(res_dir / "pos.tsv", pos_text(domains));
        write_text(res_dir / "lexicon.tsv", lexicon_text(domains));
        write_text(res_dir / "embeddings.txt", embeddings_text(domains, seed));
        write_text(res_dir / "lm.txt", lm_text(domains));

        Rng train_rng(derive_seed(seed, "train-a"));
        Rng dev_a_rng(derive_seed(seed, "dev-a"));
        Rng dev_b_rng(derive_seed(seed, "dev-b"));
        const Corpus train_a =
            make_toy_corpus(domains[0], "train", train_size, 0.15, train_rng);
        const Corpus dev_a = make_toy_corpus(domains[0], "dev", dev_size, 0.15, dev_a_rng);
        const Corpus dev_b = make_toy_corpus(domains[1], "dev", dev_size, 0.15, dev_b_rng);
        save_corpus(train_a, toy_dir / "train_a.json", SquadFormat::squad_v2);
        save_corpus(dev_a, toy_dir / "dev_a.json", SquadFormat::squad_v2);
        save_corpus(dev_b, toy_dir / "dev_b.json", SquadFormat::squad_v2);

        const ResourceBundle res = ResourceBundle::load(res_dir);
        Rng attack_rng(derive_seed(seed, "attack"));
        Corpus attacked;
        for (const QaSample& sample : dev_a.samples) {
            Rng sample_rng = attack_rng.child(sample.id);
            attacked.samples.push_back(add_sent_diverse(sample, res, sample_rng).first);
        }
        save_corpus(attacked, toy_dir / "dev_a_attacked.json", SquadFormat::squad_v2);

        std::printf("wrote %zu train, %zu+%zu dev, %zu attacked dev samples under %s\n",
                    train_a.samples.size(), dev_a.samples.size(), dev_b.samples.size(),
                    attacked.samples.size(), root.string().c_str());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "toygen: %s\n", e.what());
        return 1;
    }
    return 0;
}
