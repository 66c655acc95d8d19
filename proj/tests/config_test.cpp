#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "forge/config.hpp"

using namespace forge;

TEST_CASE("key=value text parses with comments and blank lines") {
    std::istringstream in(
        "# a comment line\n"
        "\n"
        "region_lang = de-de\n"
        "  results_n=7   # trailing comment\n"
        "engine_priority = backup, primary\n");
    auto kv = parse_config_text(in);
    REQUIRE(kv.size() == 3);
    CHECK(kv.at("region_lang") == "de-de");
    CHECK(kv.at("results_n") == "7");
    CHECK(kv.at("engine_priority") == "backup, primary");

    SECTION("a later assignment wins") {
        std::istringstream twice("a = 1\na = 2\n");
        CHECK(parse_config_text(twice).at("a") == "2");
    }

    SECTION("malformed lines report their line number") {
        std::istringstream bad("ok = 1\nthis line has no equals\n");
        try {
            parse_config_text(bad);
            FAIL("expected a parse error");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }

        std::istringstream empty_key(" = value\n");
        CHECK_THROWS_AS(parse_config_text(empty_key), std::invalid_argument);
    }

    SECTION("missing files fail loudly") {
        CHECK_THROWS_AS(parse_config_file("no_such_config.conf"), std::runtime_error);
    }
}

TEST_CASE("every tool server key loads into its field") {
    std::map<std::string, std::string> kv = {
        {"region_lang", "fr-fr"},
        {"engine_priority", "backup,primary,tertiary"},
        {"fast_lane_capacity", "2.5"},
        {"fast_lane_target_share", "0.3"},
        {"results_n", "9"},
        {"search_timeout_seconds", "12.5"},
        {"pipeline.chunk_tokens", "256"},
        {"pipeline.k_q", "50"},
        {"pipeline.k_s", "4"},
        {"pipeline.embed_top", "16"},
        {"pipeline.rerank_top", "5"},
        {"pipeline.snippet_max_words", "80"},
        {"browse.chunk_tokens", "4096"},
        {"browse.k_q", "60"},
        {"browse.embed_top", "12"},
        {"browse.rerank_top", "2"},
    };
    auto cfg = tool_server_config_from_map(kv);
    CHECK(cfg.region_lang == "fr-fr");
    CHECK(cfg.engine_priority == std::vector<std::string>{"backup", "primary", "tertiary"});
    CHECK(cfg.fast_lane_capacity == 2.5);
    CHECK(cfg.fast_lane_target_share == 0.3);
    CHECK(cfg.results_n == 9);
    CHECK(cfg.search_timeout_seconds == 12.5);
    CHECK(cfg.pipeline.chunk_tokens == 256);
    CHECK(cfg.pipeline.k_q == 50);
    CHECK(cfg.pipeline.k_s == 4);
    CHECK(cfg.pipeline.embed_top == 16);
    CHECK(cfg.pipeline.rerank_top == 5);
    CHECK(cfg.pipeline.snippet_max_words == 80);
    CHECK(cfg.browse.chunk_tokens == 4096);
    CHECK(cfg.browse.k_q == 60);
    CHECK(cfg.browse.embed_top == 12);
    CHECK(cfg.browse.rerank_top == 2);
    CHECK(cfg.pipeline.results_n == 9);  // results_n feeds the pipeline cap

    SECTION("an empty map keeps the defaults") {
        auto defaults = tool_server_config_from_map({});
        CHECK(defaults.region_lang == "us-en");
        CHECK(defaults.results_n == 5);
        CHECK(defaults.pipeline.results_n == 5);
        CHECK(defaults.pipeline.chunk_tokens == 128);
        CHECK(defaults.browse.chunk_tokens == 2048);
    }

    SECTION("unknown keys are rejected") {
        CHECK_THROWS_AS(tool_server_config_from_map({{"reslts_n", "5"}}),
                        std::invalid_argument);
    }

    SECTION("type errors name the key") {
        try {
            tool_server_config_from_map({{"results_n", "many"}});
            FAIL("expected a type error");
        } catch (const std::invalid_argument& e) {
            CHECK(std::string(e.what()).find("results_n") != std::string::npos);
        }
        CHECK_THROWS_AS(tool_server_config_from_map({{"results_n", "-2"}}),
                        std::invalid_argument);
        CHECK_THROWS_AS(tool_server_config_from_map({{"fast_lane_capacity", "fast"}}),
                        std::invalid_argument);
    }

    SECTION("a config file round trips") {
        std::string path = "config_test_tool.conf";
        {
            std::ofstream out(path);
            out << "results_n = 3\npipeline.rerank_top = 2 # trim\n";
        }
        auto from_file = tool_server_config_from_file(path);
        std::remove(path.c_str());
        CHECK(from_file.results_n == 3);
        CHECK(from_file.pipeline.results_n == 3);
        CHECK(from_file.pipeline.rerank_top == 2);
        CHECK(from_file.region_lang == "us-en");
    }
}

TEST_CASE("synth job keys load and validate") {
    std::map<std::string, std::string> kv = {
        {"max_depth", "4"},      {"branching", "2"},      {"facts_per_node", "6"},
        {"rng_seed", "12345"},   {"subtree_budget", "5"}, {"attribute", "debut_team"},
        {"solver_rounds", "2"},  {"oracle_budget", "32"},
    };
    auto cfg = synth_config_from_map(kv);
    CHECK(cfg.tree.max_depth == 4);
    CHECK(cfg.tree.branching == 2);
    CHECK(cfg.tree.facts_per_node == 6);
    CHECK(cfg.tree.rng_seed == 12345);
    CHECK(cfg.subtree_budget == 5);
    CHECK(cfg.attribute == "debut_team");
    CHECK(cfg.solver_rounds == 2);
    CHECK(cfg.oracle_budget == 32);

    SECTION("defaults hold when keys are absent") {
        auto defaults = synth_config_from_map({});
        CHECK(defaults.tree.max_depth == 3);
        CHECK(defaults.tree.branching == 3);
        CHECK(defaults.tree.facts_per_node == 5);
        CHECK(defaults.subtree_budget == 4);
        CHECK(defaults.attribute == "birth_year");
        CHECK(defaults.solver_rounds == 3);
        CHECK(defaults.oracle_budget == 16);
    }

    SECTION("unknown keys and invalid shapes are rejected") {
        CHECK_THROWS_AS(synth_config_from_map({{"depth", "3"}}), std::invalid_argument);
        CHECK_THROWS_AS(synth_config_from_map({{"max_depth", "0"}}), std::invalid_argument);
        CHECK_THROWS_AS(synth_config_from_map({{"branching", "x"}}), std::invalid_argument);
    }
}

TEST_CASE("service url overrides read from the environment") {
    const char* name = "FORGE_CONFIG_TEST_URL";
    unsetenv(name);
    CHECK_FALSE(env_service_url(name).has_value());

    setenv(name, "http://127.0.0.1:9999", 1);
    auto url = env_service_url(name);
    REQUIRE(url.has_value());
    CHECK(*url == "http://127.0.0.1:9999");

    setenv(name, "", 1);
    CHECK_FALSE(env_service_url(name).has_value());
    unsetenv(name);
}
