#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "forge/fakes.hpp"
#include "forge/http_server.hpp"
#include "forge/toolserver.hpp"

using namespace forge;

namespace {

// Engine with a fixed behavior per instance, for fallback matrices where the
// fixture engine's content heuristics would get in the way.
class ScriptedEngine : public SearchEngineClient {
  public:
    enum class Mode { results, empty, error };

    ScriptedEngine(std::string name, Mode mode) : name_(std::move(name)), mode_(mode) {}

    std::string name() const override { return name_; }

    Result<std::vector<EngineResult>> search(std::string_view, std::string_view) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        switch (mode_) {
            case Mode::results:
                return std::vector<EngineResult>{
                    {"snapshot from " + name_, "Title " + name_, "http://" + name_ + "/page"}};
            case Mode::empty:
                return std::vector<EngineResult>{};
            case Mode::error:
                return ClientError::unavailable(name_ + " offline");
        }
        return std::vector<EngineResult>{};
    }

    std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }

  private:
    std::string name_;
    Mode mode_;
    std::atomic<std::uint64_t> calls_{0};
};

struct ServiceFixture {
    FakeStack fakes;
    std::shared_ptr<ToolService> service;

    explicit ServiceFixture(ToolServerConfig cfg = {}, std::function<double()> clock = nullptr,
                            std::shared_ptr<const FixtureCorpus> corpus = nullptr) {
        fakes = make_fake_stack(std::move(corpus));
        ToolService::Clients clients;
        clients.engines = {fakes.engine, fakes.backup_engine};
        clients.crawler = fakes.crawler;
        clients.embedder = fakes.embedder;
        clients.reranker = fakes.reranker;
        clients.snippet_writer = fakes.snippet_writer;
        service = std::make_shared<ToolService>(std::move(cfg), clients, nullptr,
                                                std::move(clock));
    }
};

const std::string kQuery = "born in Arlington County Virginia pitcher 1930s";

}  // namespace

TEST_CASE("config defaults") {
    ToolServerConfig cfg;
    CHECK(cfg.region_lang == "us-en");
    CHECK(cfg.engine_priority == std::vector<std::string>{"primary", "backup"});
    CHECK(cfg.fast_lane_capacity == 1.0);
    CHECK(cfg.fast_lane_target_share == Catch::Approx(0.15));
    CHECK(cfg.results_n == 5);
    CHECK(cfg.search_timeout_seconds == 30.0);
}

TEST_CASE("token bucket grants up to burst then refills with time") {
    TokenBucket bucket(1.0, 2.0);
    CHECK(bucket.try_acquire(0.0));
    CHECK(bucket.try_acquire(0.0));
    CHECK_FALSE(bucket.try_acquire(0.0));
    CHECK_FALSE(bucket.try_acquire(0.5));
    CHECK(bucket.try_acquire(1.0));
    CHECK_FALSE(bucket.try_acquire(1.0));

    TokenBucket dead(0.0, 2.0);
    CHECK_FALSE(dead.try_acquire(0.0));
}

TEST_CASE("token bucket never exceeds its burst even after a long idle") {
    TokenBucket bucket(10.0, 3.0);
    CHECK(bucket.try_acquire(0.0));
    CHECK(bucket.try_acquire(1000.0));
    CHECK(bucket.try_acquire(1000.0));
    CHECK(bucket.try_acquire(1000.0));
    CHECK_FALSE(bucket.try_acquire(1000.0));
}

TEST_CASE("fallback takes the first engine that returns results") {
    auto primary = std::make_shared<ScriptedEngine>("primary", ScriptedEngine::Mode::results);
    auto backup = std::make_shared<ScriptedEngine>("backup", ScriptedEngine::Mode::results);
    bool all_errored = true;
    auto out = engine_with_fallback("q", "us-en", {primary, backup}, &all_errored);
    REQUIRE(out.size() == 1);
    CHECK(out[0].url == "http://primary/page");
    CHECK(primary->calls() == 1);
    CHECK(backup->calls() == 0);
    CHECK_FALSE(all_errored);
}

TEST_CASE("fallback skips empty and errored engines") {
    SECTION("primary empty") {
        auto primary = std::make_shared<ScriptedEngine>("primary", ScriptedEngine::Mode::empty);
        auto backup = std::make_shared<ScriptedEngine>("backup", ScriptedEngine::Mode::results);
        bool all_errored = true;
        auto out = engine_with_fallback("q", "us-en", {primary, backup}, &all_errored);
        REQUIRE(out.size() == 1);
        CHECK(out[0].url == "http://backup/page");
        CHECK_FALSE(all_errored);
    }
    SECTION("primary errors") {
        auto primary = std::make_shared<ScriptedEngine>("primary", ScriptedEngine::Mode::error);
        auto backup = std::make_shared<ScriptedEngine>("backup", ScriptedEngine::Mode::results);
        bool all_errored = true;
        auto out = engine_with_fallback("q", "us-en", {primary, backup}, &all_errored);
        REQUIRE(out.size() == 1);
        CHECK(out[0].url == "http://backup/page");
        CHECK_FALSE(all_errored);
    }
    SECTION("all empty is a success with no results") {
        auto primary = std::make_shared<ScriptedEngine>("primary", ScriptedEngine::Mode::empty);
        auto backup = std::make_shared<ScriptedEngine>("backup", ScriptedEngine::Mode::empty);
        bool all_errored = true;
        auto out = engine_with_fallback("q", "us-en", {primary, backup}, &all_errored);
        CHECK(out.empty());
        CHECK_FALSE(all_errored);
    }
    SECTION("all errored") {
        auto primary = std::make_shared<ScriptedEngine>("primary", ScriptedEngine::Mode::error);
        auto backup = std::make_shared<ScriptedEngine>("backup", ScriptedEngine::Mode::error);
        bool all_errored = false;
        auto out = engine_with_fallback("q", "us-en", {primary, backup}, &all_errored);
        CHECK(out.empty());
        CHECK(all_errored);
    }
    SECTION("no engines") {
        CHECK_THROWS_AS(engine_with_fallback("q", "us-en", {}), std::invalid_argument);
    }
}

TEST_CASE("wire formats are pinned byte for byte") {
    SnippetResult r{"the snippet", 0.5, "The Title", "http://u"};
    CHECK(wire::snippet_result_to_json(r).dump() ==
          R"({"snippets":"the snippet","title":"The Title","url":"http://u"})");

    auto cached = wire::snippet_result_to_cache_json(r);
    CHECK(cached.dump() ==
          R"({"relevance":0.5,"snippets":"the snippet","title":"The Title","url":"http://u"})");
    auto back = wire::snippet_result_from_cache_json(cached);
    CHECK(back.snippet == r.snippet);
    CHECK(back.relevance == r.relevance);
    CHECK(back.title == r.title);
    CHECK(back.url == r.url);

    BrowseResult b{"http://u", "the document"};
    CHECK(wire::browse_result_to_json(b).dump() ==
          R"({"semanticDocument":"the document","url":"http://u"})");
    auto b2 = wire::browse_result_from_json(wire::browse_result_to_json(b));
    CHECK(b2.url == b.url);
    CHECK(b2.document == b.document);

    EngineResult er{"snap", "t", "http://u"};
    auto arr = wire::engine_results_to_json({er});
    CHECK(arr.dump() == R"([{"snapshot":"snap","title":"t","url":"http://u"}])");
    auto ers = wire::engine_results_from_json(arr);
    REQUIRE(ers.size() == 1);
    CHECK(ers[0].snapshot == "snap");
}

TEST_CASE("constructor validates config and clients") {
    FakeStack fakes = make_fake_stack();
    ToolService::Clients clients;
    clients.engines = {fakes.engine};
    clients.crawler = fakes.crawler;
    clients.embedder = fakes.embedder;
    clients.reranker = fakes.reranker;
    clients.snippet_writer = fakes.snippet_writer;

    ToolServerConfig no_priority;
    no_priority.engine_priority.clear();
    CHECK_THROWS_AS(ToolService(no_priority, clients), std::invalid_argument);

    ToolServerConfig bad_share;
    bad_share.fast_lane_target_share = 1.5;
    CHECK_THROWS_AS(ToolService(bad_share, clients), std::invalid_argument);

    ToolService::Clients no_engines = clients;
    no_engines.engines.clear();
    CHECK_THROWS_AS(ToolService({}, no_engines), std::invalid_argument);

    ToolService::Clients no_crawler = clients;
    no_crawler.crawler = nullptr;
    CHECK_THROWS_AS(ToolService({}, no_crawler), std::invalid_argument);
}

TEST_CASE("search returns at most results_n entries with bounded snippets") {
    ServiceFixture f;
    auto res = f.service->handle_search({kQuery, std::nullopt});
    REQUIRE(res.ok());
    const auto& results = res.value();
    REQUIRE_FALSE(results.empty());
    CHECK(results.size() <= 5);
    for (const auto& r : results) {
        CHECK_FALSE(r.url.empty());
        CHECK_FALSE(r.title.empty());
        CHECK_FALSE(r.snippet.empty());
        CHECK(count_tokens(r.snippet) <= 60);
    }

    ToolServerConfig capped;
    capped.results_n = 2;
    ServiceFixture g(capped);
    auto capped_res = g.service->handle_search({kQuery, std::nullopt});
    REQUIRE(capped_res.ok());
    CHECK(capped_res.value().size() <= 2);
}

TEST_CASE("empty query and empty url are malformed") {
    ServiceFixture f;
    auto search = f.service->handle_search({"   ", std::nullopt});
    REQUIRE_FALSE(search.ok());
    CHECK(search.error().kind == ClientError::Kind::malformed_response);

    auto browse = f.service->handle_browse({""});
    REQUIRE_FALSE(browse.ok());
    CHECK(browse.error().kind == ClientError::Kind::malformed_response);
}

TEST_CASE("a repeated search touches no upstream and returns identical bytes") {
    ServiceFixture f;
    auto first = f.service->handle_search({kQuery, std::nullopt});
    REQUIRE(first.ok());
    auto engine_calls = f.fakes.engine->calls() + f.fakes.backup_engine->calls();
    auto crawler_calls = f.fakes.crawler->calls();

    auto second = f.service->handle_search({kQuery, std::nullopt});
    REQUIRE(second.ok());
    CHECK(f.fakes.engine->calls() + f.fakes.backup_engine->calls() == engine_calls);
    CHECK(f.fakes.crawler->calls() == crawler_calls);

    nlohmann::json first_json = nlohmann::json::array();
    for (const auto& r : first.value()) first_json.push_back(wire::snippet_result_to_json(r));
    nlohmann::json second_json = nlohmann::json::array();
    for (const auto& r : second.value()) second_json.push_back(wire::snippet_result_to_json(r));
    CHECK(first_json.dump() == second_json.dump());
}

TEST_CASE("region is cached separately and a changed region hits the engine again") {
    ServiceFixture f;
    f.service->handle_search({kQuery, std::nullopt});
    auto calls_after_first = f.fakes.engine->calls();
    f.service->handle_search({kQuery, std::string("de-de")});
    CHECK(f.fakes.engine->calls() > calls_after_first);
}

TEST_CASE("engine failure after a cached search still serves results") {
    ServiceFixture f;
    auto first = f.service->handle_search({kQuery, std::nullopt});
    REQUIRE(first.ok());

    f.fakes.engine->set_fail_all(true);
    f.fakes.backup_engine->set_fail_all(true);
    auto cached = f.service->handle_search({kQuery, std::nullopt});
    REQUIRE(cached.ok());
    CHECK(cached.value().size() == first.value().size());

    auto uncached = f.service->handle_search({"a never before seen query", std::nullopt});
    REQUIRE_FALSE(uncached.ok());
    CHECK(uncached.error().kind == ClientError::Kind::unavailable);
}

TEST_CASE("blocked pages degrade to snapshot-only snippets without errors") {
    auto corpus = std::make_shared<FixtureCorpus>(demo_corpus());
    for (const auto& row : corpus->query_table.at(kQuery))
        corpus->blocked_urls.insert(row.url);
    ServiceFixture f({}, nullptr, corpus);

    auto res = f.service->handle_search({kQuery, std::nullopt});
    REQUIRE(res.ok());
    REQUIRE_FALSE(res.value().empty());
    for (const auto& r : res.value()) {
        CHECK_FALSE(r.snippet.empty());
        CHECK(count_tokens(r.snippet) <= 60);
    }
    CHECK(f.fakes.crawler->calls() > 0);
}

TEST_CASE("browse returns a document and caches it") {
    ServiceFixture f;
    const std::string url = "https://en.wikipedia.org/wiki/Bill_Dailey";
    auto first = f.service->handle_browse({url});
    REQUIRE(first.ok());
    CHECK(first.value().url == url);
    CHECK(first.value().document.find("Cleveland") != std::string::npos);

    auto crawler_calls = f.fakes.crawler->calls();
    auto second = f.service->handle_browse({url});
    REQUIRE(second.ok());
    CHECK(second.value().document == first.value().document);
    CHECK(f.fakes.crawler->calls() == crawler_calls);
}

TEST_CASE("browsing an unknown url is unavailable") {
    ServiceFixture f;
    auto res = f.service->handle_browse({"https://example.com/nowhere"});
    REQUIRE_FALSE(res.ok());
    CHECK(res.error().kind == ClientError::Kind::unavailable);
}

TEST_CASE("engine priority order decides who is asked first") {
    auto corpus = std::make_shared<const FixtureCorpus>(demo_corpus());
    auto primary = std::make_shared<FakeSearchEngine>(corpus, 5, "primary");
    auto backup = std::make_shared<FakeSearchEngine>(corpus, 5, "backup");
    FakeStack fakes = make_fake_stack(corpus);
    ToolService::Clients clients;
    clients.engines = {primary, backup};
    clients.crawler = fakes.crawler;
    clients.embedder = fakes.embedder;
    clients.reranker = fakes.reranker;
    clients.snippet_writer = fakes.snippet_writer;

    ToolServerConfig cfg;
    cfg.engine_priority = {"backup", "primary"};
    ToolService service(cfg, clients);
    auto res = service.handle_search({kQuery, std::nullopt});
    REQUIRE(res.ok());
    CHECK(backup->calls() == 1);
    CHECK(primary->calls() == 0);
}

TEST_CASE("fast lane share converges to capacity over request rate") {
    double now = 0.0;
    ToolServerConfig cfg;
    cfg.fast_lane_capacity = 1.0;  // one fast token per second
    ServiceFixture f(cfg, [&now] { return now; });

    // One request every 150 ms: the fast lane can serve 15% of them.
    const int kRequests = 2000;
    for (int i = 0; i < kRequests; ++i) {
        now = 0.15 * i;
        f.service->dispatch();
    }
    auto lanes = f.service->lane_stats();
    CHECK(lanes.total() == kRequests);
    CHECK(std::abs(lanes.fast_share() - 0.15) <= 0.02);
}

TEST_CASE("every request lands in exactly one lane") {
    ServiceFixture f;
    f.service->handle_search({kQuery, std::nullopt});
    f.service->handle_browse({"https://en.wikipedia.org/wiki/Bill_Dailey"});
    f.service->handle_search({"   ", std::nullopt});  // malformed: rejected before dispatch
    auto lanes = f.service->lane_stats();
    CHECK(lanes.total() == 2);
}

TEST_CASE("http routes speak the documented wire format") {
    ServiceFixture f;
    ToolHttpServer server(f.service);
    int port = server.start(0);
    REQUIRE(port > 0);
    httplib::Client client("127.0.0.1", port);

    SECTION("healthz") {
        auto res = client.Get("/healthz");
        REQUIRE(res);
        CHECK(res->status == 200);
        CHECK(res->body == R"({"status":"ok"})");
    }

    SECTION("search returns an array of url/title/snippets objects") {
        nlohmann::json req = {{"query", kQuery}};
        auto res = client.Post("/search", req.dump(), "application/json");
        REQUIRE(res);
        REQUIRE(res->status == 200);
        auto body = nlohmann::json::parse(res->body);
        REQUIRE(body.is_array());
        REQUIRE_FALSE(body.empty());
        for (const auto& item : body) {
            CHECK(item.size() == 3);
            CHECK(item.contains("url"));
            CHECK(item.contains("title"));
            CHECK(item.contains("snippets"));
        }
    }

    SECTION("malformed search bodies are 400") {
        auto res = client.Post("/search", "not json", "application/json");
        REQUIRE(res);
        CHECK(res->status == 400);

        nlohmann::json no_query = {{"q", "x"}};
        auto res2 = client.Post("/search", no_query.dump(), "application/json");
        REQUIRE(res2);
        CHECK(res2->status == 400);
    }

    SECTION("browse returns the url and semanticDocument") {
        nlohmann::json req = {{"url", "https://en.wikipedia.org/wiki/Bill_Dailey"}};
        auto res = client.Post("/browse", req.dump(), "application/json");
        REQUIRE(res);
        REQUIRE(res->status == 200);
        auto body = nlohmann::json::parse(res->body);
        CHECK(body.size() == 2);
        CHECK(body.at("url") == "https://en.wikipedia.org/wiki/Bill_Dailey");
        CHECK(body.at("semanticDocument").get<std::string>().find("Cleveland") !=
              std::string::npos);
    }

    SECTION("browsing an unknown page is 404") {
        nlohmann::json req = {{"url", "https://example.com/nowhere"}};
        auto res = client.Post("/browse", req.dump(), "application/json");
        REQUIRE(res);
        CHECK(res->status == 404);
    }

    SECTION("stats exposes cache and lane counters") {
        client.Get("/healthz");
        nlohmann::json req = {{"query", kQuery}};
        client.Post("/search", req.dump(), "application/json");
        auto res = client.Get("/stats");
        REQUIRE(res);
        REQUIRE(res->status == 200);
        auto body = nlohmann::json::parse(res->body);
        for (const char* key : {"hits", "misses", "puts", "hit_rate", "hits_by_namespace",
                                "misses_by_namespace"})
            CHECK(body.at("cache").contains(key));
        for (const char* key : {"fast", "standard", "fast_share"})
            CHECK(body.at("lanes").contains(key));
        CHECK(body.at("lanes").at("fast").get<int>() +
                  body.at("lanes").at("standard").get<int>() >=
              1);
    }

    server.stop();
}
