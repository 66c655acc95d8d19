#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <string>
#include <vector>

#include "forge/textseg.hpp"

using namespace forge;

namespace {

std::string random_words(std::mt19937_64& rng, std::size_t n) {
    static const std::vector<std::string> pool = {
        "county", "pitcher", "river",  "treaty", "bridge", "season",
        "record", "launch",  "museum", "harbor", "signal", "ledger"};
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (!out.empty()) out += " ";
        out += pool[pick(rng)];
    }
    return out;
}

}  // namespace

TEST_CASE("word counter counts whitespace-delimited tokens") {
    const TokenCounter& counter = word_counter();
    CHECK(counter.count("") == 0);
    CHECK(counter.count("one") == 1);
    CHECK(counter.count("one two three") == 3);
    CHECK(counter.count("  padded   out  ") == 2);
    CHECK(counter.name() == "words");
    CHECK(count_tokens("a b c") == 3);
}

TEST_CASE("normalize_whitespace collapses runs and trims") {
    CHECK(normalize_whitespace("  a\t\tb\n c ") == "a b c");
    CHECK(normalize_whitespace("") == "");
    CHECK(normalize_whitespace(" \n\t ") == "");
    CHECK(normalize_whitespace("already clean") == "already clean");
}

TEST_CASE("split_sentences splits on terminators followed by space") {
    auto s = split_sentences("First point. Second point! Third? Fourth");
    REQUIRE(s.size() == 4);
    CHECK(s[0] == "First point.");
    CHECK(s[1] == "Second point!");
    CHECK(s[2] == "Third?");
    CHECK(s[3] == "Fourth");

    CHECK(split_sentences("").empty());
    CHECK(split_sentences("Version 1.5 shipped").size() == 1);
}

TEST_CASE("split_into_chunks validates max_tokens") {
    CHECK_THROWS_AS(split_into_chunks("text", 0), std::invalid_argument);
}

TEST_CASE("chunking respects the token budget and loses no words") {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 50; ++trial) {
        std::uniform_int_distribution<std::size_t> len(1, 400);
        std::uniform_int_distribution<int> budget(1, 64);
        std::string text = random_words(rng, len(rng));
        int max_tokens = budget(rng);

        auto chunks = split_into_chunks(text, max_tokens, "http://x/page");

        std::string joined;
        std::size_t total_tokens = 0;
        for (std::size_t i = 0; i < chunks.size(); ++i) {
            const auto& c = chunks[i];
            CHECK(c.token_count <= static_cast<std::size_t>(max_tokens));
            CHECK(c.token_count == count_tokens(c.text));
            CHECK(c.index == i);
            CHECK(c.id == "http://x/page#" + std::to_string(i));
            CHECK_FALSE(c.seed);
            if (!joined.empty()) joined += " ";
            joined += c.text;
            total_tokens += c.token_count;
        }
        CHECK(joined == normalize_whitespace(text));
        CHECK(total_tokens == count_tokens(text));
    }
}

TEST_CASE("chunking prefers sentence boundaries when they fit") {
    std::string text = "Alpha beta gamma. Delta epsilon zeta. Eta theta iota.";
    auto chunks = split_into_chunks(text, 3);
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[0].text == "Alpha beta gamma.");
    CHECK(chunks[1].text == "Delta epsilon zeta.");
    CHECK(chunks[2].text == "Eta theta iota.");
}

TEST_CASE("oversized sentences fall back to word windows") {
    std::string text = "one two three four five six seven";
    auto chunks = split_into_chunks(text, 3);
    REQUIRE(chunks.size() == 3);
    CHECK(chunks[0].text == "one two three");
    CHECK(chunks[1].text == "four five six");
    CHECK(chunks[2].text == "seven");
}

TEST_CASE("empty text produces no chunks") {
    CHECK(split_into_chunks("", 10).empty());
    CHECK(split_into_chunks("   \n\t ", 10).empty());
}

TEST_CASE("extract_main_text strips markup and recovers the title") {
    std::string html =
        "<html><head><title>Bill Dailey</title>"
        "<style>body { color: red; }</style>"
        "<script>var x = 1 < 2;</script></head>"
        "<body><h1>Bill Dailey</h1>"
        "<p>He pitched for the <b>Cleveland Indians</b> &amp; the Twins.</p>"
        "<!-- infra comment --></body></html>";
    auto page = extract_main_text(html);
    CHECK(page.title == "Bill Dailey");
    CHECK(page.text.find("Cleveland Indians") != std::string::npos);
    CHECK(page.text.find("& the Twins") != std::string::npos);
    CHECK(page.text.find("color: red") == std::string::npos);
    CHECK(page.text.find("var x") == std::string::npos);
    CHECK(page.text.find("infra comment") == std::string::npos);
    CHECK(page.text.find("<") == std::string::npos);
}

TEST_CASE("extract_main_text tolerates plain text and empty input") {
    CHECK(extract_main_text("no markup at all").text == "no markup at all");
    CHECK(extract_main_text("").text.empty());
    CHECK(extract_main_text("").title.empty());
}
