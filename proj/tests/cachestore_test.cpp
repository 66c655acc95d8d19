#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "forge/cachestore.hpp"

using namespace forge;

TEST_CASE("keys normalize whitespace but keep case") {
    auto a = make_cache_key(CacheNamespace::engine, {"search", "Foo  Bar", "us-en"});
    auto b = make_cache_key(CacheNamespace::engine, {"search", "Foo Bar", "us-en"});
    auto c = make_cache_key(CacheNamespace::engine, {"search", " Foo\tBar ", "us-en"});
    auto different_case = make_cache_key(CacheNamespace::engine, {"search", "foo bar", "us-en"});
    CHECK(a == b);
    CHECK(a == c);
    CHECK_FALSE(a == different_case);
}

TEST_CASE("same digest in different namespaces stays independent") {
    auto engine_key = make_cache_key(CacheNamespace::engine, {"x"});
    auto page_key = make_cache_key(CacheNamespace::page, {"x"});
    CHECK(engine_key.digest == page_key.digest);
    CHECK_FALSE(engine_key == page_key);

    CacheStore store;
    store.put(engine_key, "engine value");
    store.put(page_key, "page value");
    CHECK(store.get(engine_key) == std::optional<std::string>("engine value"));
    CHECK(store.get(page_key) == std::optional<std::string>("page value"));
}

TEST_CASE("region is part of the engine key") {
    auto us = make_cache_key(CacheNamespace::engine, {"search", "query", "us-en"});
    auto de = make_cache_key(CacheNamespace::engine, {"search", "query", "de-de"});
    CHECK_FALSE(us == de);
}

TEST_CASE("joining parts cannot collide across part boundaries") {
    auto ab_c = make_cache_key(CacheNamespace::engine, {"ab", "c"});
    auto a_bc = make_cache_key(CacheNamespace::engine, {"a", "bc"});
    CHECK_FALSE(ab_c == a_bc);
}

TEST_CASE("miss before put, hit after, overwrite wins") {
    CacheStore store;
    auto key = make_cache_key(CacheNamespace::snippet, {"q", "http://u"});
    CHECK_FALSE(store.get(key).has_value());
    store.put(key, "v1");
    CHECK(store.get(key) == std::optional<std::string>("v1"));
    store.put(key, "v2");
    CHECK(store.get(key) == std::optional<std::string>("v2"));

    auto stats = store.stats();
    CHECK(stats.hits == 2);
    CHECK(stats.misses == 1);
    CHECK(stats.puts == 2);
    CHECK(stats.lookups() == 3);
    CHECK(stats.hits_by_namespace.at("snippet") == 2);
    CHECK(stats.misses_by_namespace.at("snippet") == 1);
}

TEST_CASE("hit rate is hits over lookups") {
    CacheStore store;
    auto key = make_cache_key(CacheNamespace::page, {"http://u"});
    CHECK(store.stats().hit_rate() == 0.0);
    store.get(key);
    store.put(key, "body");
    store.get(key);
    store.get(key);
    CHECK(store.stats().hit_rate() == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("get_or_compute computes once and caches") {
    CacheStore store;
    auto key = make_cache_key(CacheNamespace::browse, {"http://u"});
    int calls = 0;
    auto compute = [&]() -> std::optional<std::string> {
        ++calls;
        return "doc";
    };
    CHECK(store.get_or_compute(key, compute) == std::optional<std::string>("doc"));
    CHECK(store.get_or_compute(key, compute) == std::optional<std::string>("doc"));
    CHECK(calls == 1);
}

TEST_CASE("get_or_compute does not cache a failed compute") {
    CacheStore store;
    auto key = make_cache_key(CacheNamespace::browse, {"http://u"});
    int calls = 0;
    auto failing = [&]() -> std::optional<std::string> {
        ++calls;
        return std::nullopt;
    };
    CHECK_FALSE(store.get_or_compute(key, failing).has_value());
    CHECK_FALSE(store.get_or_compute(key, failing).has_value());
    CHECK(calls == 2);
}

TEST_CASE("random interleavings match a reference map") {
    std::mt19937_64 rng(99);
    CacheStore store;
    std::map<std::pair<int, std::string>, std::string> reference;

    std::uniform_int_distribution<int> ns_pick(0, 3);
    std::uniform_int_distribution<int> part_pick(0, 19);
    std::uniform_int_distribution<int> op_pick(0, 2);

    std::size_t expected_hits = 0, expected_misses = 0;
    for (int step = 0; step < 10000; ++step) {
        auto ns = static_cast<CacheNamespace>(ns_pick(rng));
        std::string part = "key-" + std::to_string(part_pick(rng));
        auto key = make_cache_key(ns, {part});
        auto ref_key = std::make_pair(static_cast<int>(ns), part);

        if (op_pick(rng) == 0) {
            std::string value = "v" + std::to_string(step);
            store.put(key, value);
            reference[ref_key] = value;
        } else {
            auto got = store.get(key);
            auto ref_it = reference.find(ref_key);
            if (ref_it == reference.end()) {
                CHECK_FALSE(got.has_value());
                ++expected_misses;
            } else {
                REQUIRE(got.has_value());
                CHECK(*got == ref_it->second);
                ++expected_hits;
            }
        }
    }
    auto stats = store.stats();
    CHECK(stats.hits == expected_hits);
    CHECK(stats.misses == expected_misses);
}

TEST_CASE("concurrent access stays consistent and loses no counts") {
    CacheStore store;
    constexpr int kThreads = 8;
    constexpr int kOps = 2000;

    std::vector<std::thread> threads;
    for (int t = 0; t < kThreads; ++t) {
        threads.emplace_back([&store, t] {
            std::mt19937_64 rng(1000 + t);
            std::uniform_int_distribution<int> part_pick(0, 9);
            for (int i = 0; i < kOps; ++i) {
                std::string part = "key-" + std::to_string(part_pick(rng));
                auto key = make_cache_key(CacheNamespace::engine, {part});
                if (i % 3 == 0) {
                    store.put(key, part);
                } else {
                    auto got = store.get(key);
                    // Values are keyed by their own name, so any hit must
                    // round-trip exactly even under contention.
                    if (got) CHECK(*got == part);
                }
            }
        });
    }
    for (auto& t : threads) t.join();

    auto stats = store.stats();
    CHECK(stats.puts == kThreads * (kOps / 3 + (kOps % 3 ? 1 : 0)));
    CHECK(stats.lookups() == static_cast<std::size_t>(kThreads) * kOps - stats.puts);
    CHECK(stats.hits + stats.misses == stats.lookups());
}

TEST_CASE("lru cap evicts the least recently used entry") {
    auto backend = std::make_shared<InMemoryKv>(2);
    CacheStore store(backend);
    auto k1 = make_cache_key(CacheNamespace::page, {"1"});
    auto k2 = make_cache_key(CacheNamespace::page, {"2"});
    auto k3 = make_cache_key(CacheNamespace::page, {"3"});
    store.put(k1, "a");
    store.put(k2, "b");
    store.get(k1);          // k1 most recent, k2 next
    store.put(k3, "c");     // evicts k2
    CHECK(store.get(k1).has_value());
    CHECK_FALSE(store.get(k2).has_value());
    CHECK(store.get(k3).has_value());
    CHECK(backend->size() == 2);
}

TEST_CASE("grouped rollouts with shared queries hit at least the overlap rate") {
    // Eight rollouts of the same question share most of their searches, the
    // way grouped RL sampling does. The hit rate must be at least the share
    // of lookups that are repeats of an earlier one.
    std::mt19937_64 rng(4242);
    CacheStore store;

    std::vector<std::string> shared_queries;
    for (int i = 0; i < 6; ++i) shared_queries.push_back("shared query " + std::to_string(i));

    std::vector<std::vector<std::string>> rollouts(8);
    std::uniform_int_distribution<std::size_t> shared_pick(0, shared_queries.size() - 1);
    for (int g = 0; g < 8; ++g) {
        for (int step = 0; step < 10; ++step) {
            if (step % 4 == 3) {
                rollouts[g].push_back("unique query " + std::to_string(g) + "-" +
                                      std::to_string(step));
            } else {
                rollouts[g].push_back(shared_queries[shared_pick(rng)]);
            }
        }
    }

    std::set<std::string> seen;
    std::size_t total = 0, repeats = 0;
    for (const auto& rollout : rollouts) {
        for (const auto& q : rollout) {
            ++total;
            if (!seen.insert(q).second) ++repeats;
            auto key = make_cache_key(CacheNamespace::engine, {"search", q, "us-en"});
            if (!store.get(key)) store.put(key, "results for " + q);
        }
    }

    double overlap = static_cast<double>(repeats) / static_cast<double>(total);
    CHECK(store.stats().hit_rate() >= overlap);
    CHECK(store.stats().hit_rate() == Catch::Approx(overlap));
}
