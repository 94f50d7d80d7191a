#include <doctest.h>

#include <cmath>
#include <set>

#include "advforge/rng.hpp"
#include "advforge/text.hpp"

using namespace advforge;

TEST_CASE("tokenize splits words and punctuation with offsets") {
    auto toks = tokenize("The cat sat.");
    REQUIRE(toks.size() == 4);
    CHECK(toks[0].text == "The");
    CHECK(toks[0].char_start == 0);
    CHECK(toks[1].text == "cat");
    CHECK(toks[1].char_start == 4);
    CHECK(toks[2].text == "sat");
    CHECK(toks[2].char_start == 8);
    CHECK(toks[3].text == ".");
    CHECK(toks[3].char_start == 11);
}

TEST_CASE("tokenize keeps inner joiners but splits trailing ones") {
    CHECK(token_texts("don't stop") == std::vector<std::string>{"don't", "stop"});
    CHECK(token_texts("well-known fact") ==
          std::vector<std::string>{"well-known", "fact"});
    CHECK(token_texts("U.S. Army") == std::vector<std::string>{"U.S", ".", "Army"});
    CHECK(token_texts("3.5 liters") == std::vector<std::string>{"3.5", "liters"});
    CHECK(token_texts("a,b") == std::vector<std::string>{"a", ",", "b"});
    auto toks = tokenize("a,b");
    CHECK(toks[1].char_start == 1);
    CHECK(toks[2].char_start == 2);
}

TEST_CASE("tokenize handles empty and whitespace input") {
    CHECK(tokenize("").empty());
    CHECK(tokenize("  \t\n ").empty());
}

TEST_CASE("token offsets always index back into the source") {
    std::string src = "Mixed: 12 'quoted' text-with-dash, U.K. end!";
    for (const Token& t : tokenize(src))
        CHECK(src.substr(t.char_start, t.text.size()) == t.text);
}

TEST_CASE("character class helpers") {
    CHECK(lower("AbC-9") == "abc-9");
    CHECK(is_word("cat"));
    CHECK(is_word("3rd"));
    CHECK_FALSE(is_word(","));
    CHECK(is_capitalized("Paris"));
    CHECK_FALSE(is_capitalized("paris"));
    CHECK(is_number("1917"));
    CHECK(is_number("3.5"));
    CHECK(is_number("10,000"));
    CHECK_FALSE(is_number("a1"));
    CHECK_FALSE(is_number("."));
}

TEST_CASE("fnv1a matches published reference values") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("rng replays identically from the same seed") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
    Rng c(43);
    CHECK(Rng(42).next_u64() != c.next_u64());
}

TEST_CASE("child streams depend on the construction seed, not the position") {
    Rng a(7), b(7);
    b.next_u64();
    b.next_u64();
    CHECK(a.child("x").next_u64() == b.child("x").next_u64());
    CHECK(a.child("x").next_u64() != a.child("y").next_u64());
}

TEST_CASE("uniform draws stay in range") {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        std::size_t k = rng.uniform_below(7);
        CHECK(k < 7);
    }
}

TEST_CASE("normal draws have roughly standard moments") {
    Rng rng(5);
    double sum = 0, sumsq = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double x = rng.normal();
        sum += x;
        sumsq += x * x;
    }
    double mean = sum / n;
    double var = sumsq / n - mean * mean;
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("shuffle permutes without losing elements") {
    std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
    auto orig = v;
    Rng rng(9);
    shuffle(v, rng);
    CHECK(std::multiset<int>(v.begin(), v.end()) ==
          std::multiset<int>(orig.begin(), orig.end()));
    Rng rng2(9);
    auto v2 = orig;
    shuffle(v2, rng2);
    CHECK(v == v2);
}
