#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "advforge/errors.hpp"
#include "advforge/qa_corpus.hpp"
#include "advforge/lexical_resources.hpp"

using namespace advforge;

TEST_CASE("embedding parse reads words with fixed dimension") {
    auto table = EmbeddingTable::parse("a 1 0\nb 0.9 0.1\nc 0 1\n");
    CHECK(table.dimension() == 2);
    CHECK(table.size() == 3);
    REQUIRE(table.vector_of("b") != nullptr);
    CHECK((*table.vector_of("b"))[0] == doctest::Approx(0.9));
    CHECK(table.vector_of("zz") == nullptr);
}

TEST_CASE("embedding parse aborts on the first malformed line") {
    CHECK_THROWS_WITH_AS(EmbeddingTable::parse("a 1 0\nb 0.9\n"),
                         doctest::Contains("line 2"), ParseError);
    CHECK_THROWS_WITH_AS(EmbeddingTable::parse("a 1 0\nb x 1\n"),
                         doctest::Contains("line 2"), ParseError);
    CHECK_THROWS_AS(EmbeddingTable::parse("a nan 0\n"), ParseError);
    CHECK_THROWS_AS(EmbeddingTable::parse("a inf 0\n"), ParseError);
    CHECK_THROWS_AS(EmbeddingTable::parse("lonely\n"), ParseError);
    CHECK(EmbeddingTable::parse("").size() == 0);
}

TEST_CASE("nearest neighbor of a in the toy table is b at 0.9939") {
    auto table = EmbeddingTable::parse("a 1 0\nb 0.9 0.1\nc 0 1\n");
    auto nn = nearest_neighbors(table, "a", 1);
    REQUIRE(nn.size() == 1);
    CHECK(nn[0].first == "b");
    CHECK(nn[0].second == doctest::Approx(0.9939).epsilon(1e-3));
}

TEST_CASE("nearest neighbors cap at vocabulary size and skip OOV queries") {
    auto table = EmbeddingTable::parse("a 1 0\nb 0.9 0.1\nc 0 1\n");
    CHECK(nearest_neighbors(table, "a", 10).size() == 2);
    CHECK(nearest_neighbors(table, "missing", 5).empty());
}

TEST_CASE("identical vectors give similarity 1 in lexicographic order") {
    auto table = EmbeddingTable::parse("q 1 1\nzz 1 1\nmm 1 1\n");
    auto nn = nearest_neighbors(table, "q", 2);
    REQUIRE(nn.size() == 2);
    CHECK(nn[0].first == "mm");
    CHECK(nn[0].second == doctest::Approx(1.0));
    CHECK(nn[1].first == "zz");
}

TEST_CASE("nearest neighbors agree with a brute-force scan") {
    // independent oracle: rank every word by a separately coded cosine
    std::string text;
    Rng rng(2024);
    for (int w = 0; w < 300; ++w) {
        text += "w" + std::to_string(w);
        for (int i = 0; i < 8; ++i)
            text += " " + std::to_string(rng.uniform() * 2.0 - 1.0);
        text += "\n";
    }
    auto table = EmbeddingTable::parse(text);
    REQUIRE(table.size() == 300);

    auto brute = [&](const std::string& word, std::size_t k) {
        std::vector<std::pair<std::string, double>> all;
        const auto& q = *table.vector_of(word);
        for (const auto& [other, v] : table.entries()) {
            if (other == word) continue;
            double dot = 0, nq = 0, nv = 0;
            for (std::size_t i = 0; i < q.size(); ++i) {
                dot += q[i] * v[i];
                nq += q[i] * q[i];
                nv += v[i] * v[i];
            }
            all.emplace_back(other, dot / (std::sqrt(nq) * std::sqrt(nv)));
        }
        std::stable_sort(all.begin(), all.end(), [](const auto& x, const auto& y) {
            if (x.second != y.second) return x.second > y.second;
            return x.first < y.first;
        });
        all.resize(std::min(k, all.size()));
        return all;
    };

    for (const std::string word : {"w0", "w57", "w123", "w299"}) {
        auto fast = nearest_neighbors(table, word, 20);
        auto slow = brute(word, 20);
        REQUIRE(fast.size() == slow.size());
        for (std::size_t i = 0; i < fast.size(); ++i) {
            CHECK(fast[i].first == slow[i].first);
            CHECK(fast[i].second == doctest::Approx(slow[i].second).epsilon(1e-12));
        }
    }
}

TEST_CASE("lexicon relations load and a word is never its own antonym") {
    auto lex = Lexicon::parse(
        "hot\tant\tcold\n"
        "hot\tsyn\twarm\n"
        "hot\tant\thot\n"
        "paris\tent:place\tlyon\n");
    const LexiconEntry* entry = lex.find("hot");
    REQUIRE(entry != nullptr);
    CHECK(entry->antonyms == std::vector<std::string>{"cold"});
    CHECK(entry->synonyms == std::vector<std::string>{"warm"});
    CHECK(lex.find("paris")->same_type == std::vector<std::string>{"lyon"});
    CHECK(lex.find("Paris") != nullptr);  // lowercase fallback
    CHECK(lex.find("nope") == nullptr);
    CHECK_THROWS_AS(Lexicon::parse("a\tweird\tb\n"), ParseError);
    CHECK_THROWS_AS(Lexicon::parse("a\tent:planet\tb\n"), ParseError);
    CHECK_THROWS_AS(Lexicon::parse("only two\tfields\n"), ParseError);
}

TEST_CASE("substitute_word draws uniformly and deterministically") {
    auto lex = Lexicon::parse("hot\tant\tcold\nbig\tsyn\thuge\nbig\tsyn\tlarge\n");

    Rng rng(1);
    CHECK(substitute_word(lex, "hot", SubstitutionMode::antonym, rng) == "cold");
    CHECK(substitute_word(lex, "hot", SubstitutionMode::synonym, rng) == std::nullopt);
    CHECK(substitute_word(lex, "unknown", SubstitutionMode::antonym, rng) == std::nullopt);

    Rng a(7), b(7);
    for (int i = 0; i < 20; ++i)
        CHECK(substitute_word(lex, "big", SubstitutionMode::synonym, a) ==
              substitute_word(lex, "big", SubstitutionMode::synonym, b));

    int huge_count = 0;
    Rng c(11);
    for (int i = 0; i < 1000; ++i)
        if (substitute_word(lex, "big", SubstitutionMode::synonym, c) == "huge")
            ++huge_count;
    CHECK(huge_count > 400);
    CHECK(huge_count < 600);
}

TEST_CASE("tag_token follows lexicon then suffix rules") {
    auto pos = PosLexicon::parse("run\tverb\nrun\tnoun\ncat\tnoun\n");
    CHECK(tag_token(pos, "run") == std::set<PosTag>{PosTag::verb, PosTag::noun});
    CHECK(tag_token(pos, "quickly") == std::set<PosTag>{PosTag::adverb});
    CHECK(tag_token(pos, "jumping") == std::set<PosTag>{PosTag::verb});
    CHECK(tag_token(pos, "walked") == std::set<PosTag>{PosTag::verb});
    CHECK(tag_token(pos, "famous") == std::set<PosTag>{PosTag::adjective});
    CHECK(tag_token(pos, "helpful") == std::set<PosTag>{PosTag::adjective});
    CHECK(tag_token(pos, "zzz") == std::set<PosTag>{PosTag::other});
    CHECK(tag_token(pos, "Paris") == std::set<PosTag>{PosTag::noun});
    CHECK(tag_token(pos, "Paris", true) == std::set<PosTag>{PosTag::other});
    // the -ing rule outranks the capitalization rule
    CHECK(tag_token(pos, "Flying") == std::set<PosTag>{PosTag::verb});
    CHECK_THROWS_AS(PosLexicon::parse("x\tgerund\n"), ParseError);
}

TEST_CASE("bigram probabilities match hand counts on 'a b a b'") {
    auto lm = NgramLm::train_text("a b a b", 2, 1.0, 2);
    // bigram (a,b) occurs twice, prefix 'a' twice: (2+1)/(2+2)
    CHECK(lm.token_prob({"a"}, "b") == doctest::Approx(0.75));
    // unigram start: (2+1)/(4+2)
    CHECK(lm.token_prob({}, "a") == doctest::Approx(0.5));
    CHECK(lm.score({"a", "b"}) ==
          doctest::Approx((std::log(0.5) + std::log(0.75)) / 2.0));
}

TEST_CASE("unigram model over an empty corpus scores log(1/V)") {
    auto lm = NgramLm::train_text("", 1, 0.5, 2);
    CHECK(lm.score({"anything"}) == doctest::Approx(std::log(0.5)));
}

TEST_CASE("seen phrases outscore phrases with an unseen token") {
    auto lm = NgramLm::train_text("the cat sat on the mat the cat sat", 2, 0.1);
    CHECK(lm.score({"the", "cat", "sat"}) > lm.score({"the", "cat, ", "qqq"}));
    CHECK(lm.score({"the", "cat", "sat"}) >= lm.score({"the", "qqq", "sat"}));
}

TEST_CASE("lm scores are finite and non-positive") {
    auto lm = NgramLm::train_text("one two three two one", 3, 0.1);
    for (auto& tokens : std::vector<std::vector<std::string>>{
             {"one"}, {"one", "two", "three"}, {"zz", "yy", "xx", "ww"}}) {
        double s = lm.score(tokens);
        CHECK(std::isfinite(s));
        CHECK(s <= 0.0);
    }
    CHECK_THROWS_AS(lm.score({}), PreconditionError);
}

TEST_CASE("scoring is case-insensitive like training") {
    auto lm = NgramLm::train_text("The Cat Sat", 2, 0.1);
    CHECK(lm.score({"the", "cat"}) == doctest::Approx(lm.score({"The", "Cat"})));
}

TEST_CASE("gazetteer lookup and typed sampling") {
    auto gaz = Gazetteer::parse(
        "Paris\tplace\n"
        "France\tplace\n"
        "Marie Curie\tperson\n"
        "1917\tnumber\n");
    CHECK(gaz.type_of("Paris") == EntityType::place);
    CHECK(gaz.type_of("paris") == EntityType::place);  // case-insensitive
    CHECK(gaz.type_of("Berlin") == std::nullopt);
    CHECK(gaz.max_words() == 2);

    Rng rng(3);
    auto drawn = gaz.sample(EntityType::place, rng, {"Paris"});
    CHECK(drawn == "France");
    CHECK(gaz.sample(EntityType::place, rng, {"Paris", "france"}) == std::nullopt);
    CHECK(gaz.sample(EntityType::org, rng) == std::nullopt);
    CHECK_THROWS_AS(Gazetteer::parse("X\tcity\n"), ParseError);
}

TEST_CASE("resource bundle loads a directory and merges entity rows") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "advforge_bundle_test";
    fs::create_directories(dir);
    std::ofstream(dir / "embeddings.txt") << "a 1 0\nb 0 1\n";
    std::ofstream(dir / "lexicon.tsv") << "hot\tant\tcold\nParis\tent:place\tLyon\n";
    std::ofstream(dir / "pos.tsv") << "cat\tnoun\n";
    std::ofstream(dir / "lm.txt") << "a b a b\n";
    std::ofstream(dir / "gazetteer.tsv") << "France\tplace\n";
    std::ofstream(dir / "abbreviations.txt") << "Dr.\n# comment\nMr.\n";

    ResourceBundle bundle = ResourceBundle::load(dir);
    CHECK(bundle.embeddings.size() == 2);
    CHECK(bundle.lexicon.find("hot") != nullptr);
    CHECK(bundle.pos.has_entry("cat"));
    CHECK(bundle.lm.total_tokens() == 4);
    CHECK(bundle.abbreviations == std::vector<std::string>{"Dr.", "Mr."});

    // ent: rows put both sides into the gazetteer alongside the file entries
    CHECK(bundle.gazetteer.type_of("Paris") == EntityType::place);
    CHECK(bundle.gazetteer.type_of("Lyon") == EntityType::place);
    CHECK(bundle.gazetteer.type_of("France") == EntityType::place);

    fs::remove_all(dir);

    ResourceBundle empty = ResourceBundle::load(dir);  // nothing there
    CHECK(empty.embeddings.size() == 0);
    CHECK(empty.abbreviations == default_abbreviations());
}
