#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <future>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/cachestore.hpp"
#include "forge/gateway.hpp"
#include "forge/snippetpipe.hpp"
#include "forge/textseg.hpp"

namespace forge {

struct ToolServerConfig {
    std::string region_lang = "us-en";
    std::vector<std::string> engine_priority = {"primary", "backup"};
    double fast_lane_capacity = 1.0;  // requests per second through the fast lane
    double fast_lane_target_share = 0.15;
    std::size_t results_n = 5;
    double search_timeout_seconds = 30.0;
    SearchPipelineConfig pipeline;
    BrowsePipelineConfig browse;
};

struct SearchRequest {
    std::string query;
    std::optional<std::string> region_lang;
};

struct BrowseRequest {
    std::string url;
};

struct DispatchDecision {
    enum class Lane { fast, standard };
    Lane lane = Lane::standard;
    std::string reason;
};

inline std::string to_string(DispatchDecision::Lane lane) {
    return lane == DispatchDecision::Lane::fast ? "fast" : "standard";
}

struct LaneStats {
    std::uint64_t fast = 0;
    std::uint64_t standard = 0;

    std::uint64_t total() const { return fast + standard; }
    double fast_share() const {
        return total() == 0 ? 0.0 : static_cast<double>(fast) / static_cast<double>(total());
    }
};

/// Classic token bucket, time supplied by the caller so tests can drive it
/// with a scripted clock. Refills continuously at `rate` up to `burst`.
class TokenBucket {
  public:
    TokenBucket(double rate_per_sec, double burst)
        : rate_(rate_per_sec), capacity_(burst), tokens_(burst) {}

    bool try_acquire(double now_seconds) {
        if (rate_ <= 0.0 || capacity_ <= 0.0) return false;
        if (last_refill_ < 0.0) last_refill_ = now_seconds;
        double elapsed = std::max(0.0, now_seconds - last_refill_);
        tokens_ = std::min(capacity_, tokens_ + elapsed * rate_);
        last_refill_ = now_seconds;
        if (tokens_ >= 1.0) {
            tokens_ -= 1.0;
            return true;
        }
        return false;
    }

    double tokens() const { return tokens_; }

  private:
    double rate_;
    double capacity_;
    double tokens_;
    double last_refill_ = -1.0;
};

/// First non-empty engine wins; transport errors count as empty so a flaky
/// engine degrades to the next one instead of failing the request. Sets
/// all_errored when no engine produced a successful (even empty) response.
inline std::vector<EngineResult> engine_with_fallback(
    std::string_view query, std::string_view region,
    const std::vector<std::shared_ptr<SearchEngineClient>>& engines,
    bool* all_errored = nullptr) {
    if (engines.empty()) throw std::invalid_argument("engine_with_fallback: no engines");
    bool any_success = false;
    for (const auto& engine : engines) {
        auto res = engine->search(query, region);
        if (!res.ok()) continue;
        any_success = true;
        if (!res.value().empty()) {
            if (all_errored) *all_errored = false;
            return res.value();
        }
    }
    if (all_errored) *all_errored = !any_success;
    return {};
}

namespace wire {

inline nlohmann::json engine_results_to_json(const std::vector<EngineResult>& results) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : results)
        arr.push_back({{"snapshot", r.snapshot}, {"title", r.title}, {"url", r.url}});
    return arr;
}

inline std::vector<EngineResult> engine_results_from_json(const nlohmann::json& arr) {
    std::vector<EngineResult> out;
    for (const auto& item : arr)
        out.push_back({item.at("snapshot").get<std::string>(),
                       item.at("title").get<std::string>(), item.at("url").get<std::string>()});
    return out;
}

/// Search response entry exactly as the agent sees it.
inline nlohmann::json snippet_result_to_json(const SnippetResult& r) {
    return {{"url", r.url}, {"title", r.title}, {"snippets", r.snippet}};
}

inline nlohmann::json snippet_result_to_cache_json(const SnippetResult& r) {
    auto j = snippet_result_to_json(r);
    j["relevance"] = r.relevance;
    return j;
}

inline SnippetResult snippet_result_from_cache_json(const nlohmann::json& j) {
    SnippetResult r;
    r.url = j.at("url").get<std::string>();
    r.title = j.at("title").get<std::string>();
    r.snippet = j.at("snippets").get<std::string>();
    r.relevance = j.value("relevance", 0.0);
    return r;
}

inline nlohmann::json browse_result_to_json(const BrowseResult& r) {
    return {{"url", r.url}, {"semanticDocument", r.document}};
}

inline BrowseResult browse_result_from_json(const nlohmann::json& j) {
    return {j.at("url").get<std::string>(), j.at("semanticDocument").get<std::string>()};
}

}  // namespace wire

/// The tool service behind /search and /browse: engine fallback, read-through
/// caching of every intermediate result, fast-lane accounting, and one
/// snippet pipeline per engine result, run concurrently.
class ToolService {
  public:
    struct Clients {
        std::vector<std::shared_ptr<SearchEngineClient>> engines;  // priority order
        std::shared_ptr<CrawlerClient> crawler;
        std::shared_ptr<EmbeddingClient> embedder;
        std::shared_ptr<RerankClient> reranker;
        std::shared_ptr<SnippetClient> snippet_writer;
    };

    ToolService(ToolServerConfig cfg, Clients clients,
                std::shared_ptr<CacheStore> cache = nullptr,
                std::function<double()> clock = nullptr)
        : cfg_(std::move(cfg)),
          clients_(std::move(clients)),
          cache_(cache ? std::move(cache) : std::make_shared<CacheStore>()),
          clock_(clock ? std::move(clock) : default_clock()),
          bucket_(cfg_.fast_lane_capacity, std::max(1.0, cfg_.fast_lane_capacity / 2.0)) {
        if (cfg_.engine_priority.empty())
            throw std::invalid_argument("ToolServerConfig: engine_priority must be non-empty");
        if (cfg_.fast_lane_target_share < 0.0 || cfg_.fast_lane_target_share > 1.0)
            throw std::invalid_argument("ToolServerConfig: fast_lane_target_share out of [0,1]");
        if (clients_.engines.empty())
            throw std::invalid_argument("ToolService: at least one engine client required");
        if (!clients_.crawler || !clients_.embedder || !clients_.reranker ||
            !clients_.snippet_writer)
            throw std::invalid_argument("ToolService: missing client");
        order_engines_by_priority();
    }

    Result<std::vector<SnippetResult>> handle_search(const SearchRequest& req) {
        if (normalize_whitespace(req.query).empty())
            return ClientError::malformed_response("query must be non-empty");
        dispatch();

        std::string region = req.region_lang.value_or(cfg_.region_lang);
        auto engine_key = make_cache_key(CacheNamespace::engine, {"search", req.query, region});

        std::vector<EngineResult> engine_results;
        bool all_errored = false;
        if (auto cached = cache_->get(engine_key)) {
            engine_results = wire::engine_results_from_json(nlohmann::json::parse(*cached));
        } else {
            engine_results =
                engine_with_fallback(req.query, region, clients_.engines, &all_errored);
            if (all_errored)
                return ClientError::unavailable("all engines failed and nothing cached");
            cache_->put(engine_key, wire::engine_results_to_json(engine_results).dump());
        }
        if (engine_results.size() > cfg_.results_n) engine_results.resize(cfg_.results_n);
        if (engine_results.empty()) return std::vector<SnippetResult>{};

        auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(cfg_.search_timeout_seconds));

        std::vector<std::future<SnippetResult>> futures;
        futures.reserve(engine_results.size());
        for (const auto& er : engine_results) {
            futures.push_back(std::async(std::launch::async, [this, &req, er]() {
                return snippet_for_result(req.query, er);
            }));
        }
        std::vector<SnippetResult> out;
        out.reserve(futures.size());
        for (std::size_t i = 0; i < futures.size(); ++i) {
            if (futures[i].wait_until(deadline) == std::future_status::ready) {
                out.push_back(futures[i].get());
            } else {
                const auto& er = engine_results[i];
                out.push_back({truncate_words(normalize_whitespace(er.snapshot),
                                              cfg_.pipeline.snippet_max_words),
                               0.0, er.title, er.url});
            }
        }
        return out;
    }

    Result<BrowseResult> handle_browse(const BrowseRequest& req) {
        if (normalize_whitespace(req.url).empty())
            return ClientError::malformed_response("url must be non-empty");
        dispatch();

        auto browse_key = make_cache_key(CacheNamespace::browse, {req.url});
        if (auto cached = cache_->get(browse_key))
            return wire::browse_result_from_json(nlohmann::json::parse(*cached));

        auto html = fetch_page(req.url);
        if (!html) return ClientError::unavailable("page unavailable: " + req.url);

        auto page = extract_main_text(*html);
        if (page.text.empty()) return ClientError::unavailable("page has no text: " + req.url);

        try {
            auto result = browse_pipeline(req.url, page.text, page.title, cfg_.browse,
                                          {*clients_.embedder, *clients_.reranker,
                                           *clients_.snippet_writer});
            cache_->put(browse_key, wire::browse_result_to_json(result).dump());
            return result;
        } catch (const PipelineError& e) {
            return ClientError::unavailable(std::string("browse pipeline failed: ") + e.what());
        }
    }

    /// Routes a request to the fast lane while bucket tokens last; everything
    /// else takes the standard lane. Nothing is ever dropped.
    DispatchDecision dispatch() {
        std::lock_guard<std::mutex> lock(mu_);
        DispatchDecision d;
        if (bucket_.try_acquire(clock_())) {
            d.lane = DispatchDecision::Lane::fast;
            d.reason = "fast-lane token available";
            ++lanes_.fast;
        } else {
            d.lane = DispatchDecision::Lane::standard;
            d.reason = "fast lane at capacity";
            ++lanes_.standard;
        }
        return d;
    }

    CacheStats cache_stats() const { return cache_->stats(); }
    LaneStats lane_stats() const {
        std::lock_guard<std::mutex> lock(mu_);
        return lanes_;
    }
    const ToolServerConfig& config() const { return cfg_; }
    CacheStore& cache() { return *cache_; }

  private:
    static std::function<double()> default_clock() {
        return [] {
            auto now = std::chrono::steady_clock::now().time_since_epoch();
            return std::chrono::duration<double>(now).count();
        };
    }

    void order_engines_by_priority() {
        std::vector<std::shared_ptr<SearchEngineClient>> ordered;
        for (const auto& name : cfg_.engine_priority) {
            for (const auto& e : clients_.engines) {
                if (e->name() == name) ordered.push_back(e);
            }
        }
        for (const auto& e : clients_.engines) {
            if (std::find(ordered.begin(), ordered.end(), e) == ordered.end())
                ordered.push_back(e);
        }
        clients_.engines = std::move(ordered);
    }

    std::optional<std::string> fetch_page(const std::string& url) {
        auto page_key = make_cache_key(CacheNamespace::page, {url});
        if (auto cached = cache_->get(page_key)) return cached;
        auto fetched = clients_.crawler->fetch(url);
        if (!fetched.ok()) return std::nullopt;  // failures are not cached, retried next time
        cache_->put(page_key, fetched.value());
        return fetched.value();
    }

    SnippetResult snippet_for_result(const std::string& query, const EngineResult& er) {
        auto snippet_key = make_cache_key(CacheNamespace::snippet, {query, er.url});
        if (auto cached = cache_->get(snippet_key))
            return wire::snippet_result_from_cache_json(nlohmann::json::parse(*cached));

        std::optional<std::string> page_text;
        if (auto html = fetch_page(er.url)) {
            auto page = extract_main_text(*html);
            if (!page.text.empty()) page_text = page.text;
        }
        auto result = search_result_pipeline(query, er, page_text, cfg_.pipeline,
                                             {*clients_.embedder, *clients_.reranker,
                                              *clients_.snippet_writer});
        cache_->put(snippet_key, wire::snippet_result_to_cache_json(result).dump());
        return result;
    }

    ToolServerConfig cfg_;
    Clients clients_;
    std::shared_ptr<CacheStore> cache_;
    std::function<double()> clock_;
    mutable std::mutex mu_;
    TokenBucket bucket_;
    LaneStats lanes_;
};

}  // namespace forge
