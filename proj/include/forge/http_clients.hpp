#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "forge/agentloop.hpp"
#include "forge/cachestore.hpp"
#include "forge/gateway.hpp"
#include "forge/toolserver.hpp"

namespace forge {

/// Splits an http(s) URL into origin ("http://host:port") and path+query.
/// Returns nullopt for anything that does not look like an absolute URL.
inline std::optional<std::pair<std::string, std::string>> split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) return std::nullopt;
    auto path_begin = url.find('/', scheme_end + 3);
    if (path_begin == std::string::npos) return std::make_pair(url, std::string("/"));
    return std::make_pair(url.substr(0, path_begin), url.substr(path_begin));
}

namespace detail {

/// POSTs JSON and parses a JSON reply, with one retry on transport timeout.
/// All other transport failures map to unavailable, HTTP 429 to rate_limited,
/// other non-2xx statuses to unavailable, and unparseable bodies to
/// malformed_response.
inline Result<nlohmann::json> post_json(const std::string& base, const std::string& path,
                                        const nlohmann::json& body) {
    auto request = [&]() {
        httplib::Client cli(base);
        cli.set_connection_timeout(10, 0);
        cli.set_read_timeout(30, 0);
        return cli.Post(path, body.dump(), "application/json");
    };
    auto res = request();
    bool timed_out = !res && (res.error() == httplib::Error::ConnectionTimeout ||
                              res.error() == httplib::Error::Read ||
                              res.error() == httplib::Error::Write);
    if (timed_out) res = request();  // single retry, timeouts only

    if (!res) {
        auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
            err == httplib::Error::Write)
            return ClientError::timeout(base + path + ": " + httplib::to_string(err));
        return ClientError::unavailable(base + path + ": " + httplib::to_string(err));
    }
    if (res->status == 429) return ClientError::rate_limited(base + path);
    if (res->status < 200 || res->status >= 300)
        return ClientError::unavailable(base + path + ": HTTP " +
                                        std::to_string(res->status));
    auto parsed = nlohmann::json::parse(res->body, nullptr, false);
    if (parsed.is_discarded())
        return ClientError::malformed_response(base + path + ": body is not JSON");
    return parsed;
}

}  // namespace detail

/// Search engine over HTTP: POST {base}/search {"query","region_lang"} ->
/// [{"snapshot","title","url"}, ...].
class HttpSearchEngine : public SearchEngineClient {
  public:
    HttpSearchEngine(std::string base_url, std::string name = "http")
        : base_(std::move(base_url)), name_(std::move(name)) {}

    std::string name() const override { return name_; }

    Result<std::vector<EngineResult>> search(std::string_view query,
                                             std::string_view region_lang) override {
        auto reply = detail::post_json(
            base_, "/search",
            {{"query", std::string(query)}, {"region_lang", std::string(region_lang)}});
        if (!reply.ok()) return reply.error();
        if (!reply.value().is_array())
            return ClientError::malformed_response("engine reply must be an array");
        std::vector<EngineResult> out;
        for (const auto& item : reply.value()) {
            if (!item.is_object() || !item.contains("snapshot") || !item.contains("title") ||
                !item.contains("url"))
                return ClientError::malformed_response(
                    "engine result needs snapshot, title, url");
            out.push_back({item["snapshot"].get<std::string>(),
                           item["title"].get<std::string>(), item["url"].get<std::string>()});
        }
        return out;
    }

  private:
    std::string base_;
    std::string name_;
};

/// Plain HTTP page fetcher: GETs the URL itself and returns the body.
class HttpCrawler : public CrawlerClient {
  public:
    Result<std::string> fetch(std::string_view url) override {
        auto parts = split_url(std::string(url));
        if (!parts) return ClientError::malformed_response("not an absolute URL: " + std::string(url));
        httplib::Client cli(parts->first);
        cli.set_connection_timeout(10, 0);
        cli.set_read_timeout(30, 0);
        cli.set_follow_location(true);
        auto res = cli.Get(parts->second);
        if (!res) {
            auto err = res.error();
            if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
                return ClientError::timeout(std::string(url) + ": " + httplib::to_string(err));
            return ClientError::unavailable(std::string(url) + ": " + httplib::to_string(err));
        }
        if (res->status == 429) return ClientError::rate_limited(std::string(url));
        if (res->status < 200 || res->status >= 300)
            return ClientError::unavailable(std::string(url) + ": HTTP " +
                                            std::to_string(res->status));
        return res->body;
    }
};

/// Embedding service: POST {base}/embed {"texts":[...]} ->
/// {"dimension":N,"vectors":[[...],...]}. The dimension is probed lazily with
/// a single empty-text request and cached.
class HttpEmbedder : public EmbeddingClient {
  public:
    explicit HttpEmbedder(std::string base_url) : base_(std::move(base_url)) {}

    std::size_t dimension() const override {
        if (dim_ == 0) {
            auto probe = const_cast<HttpEmbedder*>(this)->embed({""});
            if (probe.ok() && !probe.value().empty()) dim_ = probe.value().front().size();
        }
        return dim_;
    }

    Result<std::vector<std::vector<double>>> embed(
        const std::vector<std::string>& texts) override {
        auto reply = detail::post_json(base_, "/embed", {{"texts", texts}});
        if (!reply.ok()) return reply.error();
        const auto& j = reply.value();
        if (!j.is_object() || !j.contains("vectors") || !j["vectors"].is_array())
            return ClientError::malformed_response("embed reply needs a vectors array");
        std::vector<std::vector<double>> out;
        for (const auto& v : j["vectors"]) {
            if (!v.is_array()) return ClientError::malformed_response("vector must be an array");
            out.push_back(v.get<std::vector<double>>());
        }
        if (!out.empty()) dim_ = out.front().size();
        return out;
    }

  private:
    std::string base_;
    mutable std::size_t dim_ = 0;
};

/// Rerank service: POST {base}/rerank {"query","docs":[...]} -> {"scores":[...]}.
class HttpReranker : public RerankClient {
  public:
    explicit HttpReranker(std::string base_url) : base_(std::move(base_url)) {}

    Result<std::vector<double>> rerank(std::string_view query,
                                       const std::vector<std::string>& docs) override {
        auto reply =
            detail::post_json(base_, "/rerank", {{"query", std::string(query)}, {"docs", docs}});
        if (!reply.ok()) return reply.error();
        const auto& j = reply.value();
        if (!j.is_object() || !j.contains("scores") || !j["scores"].is_array())
            return ClientError::malformed_response("rerank reply needs a scores array");
        auto scores = j["scores"].get<std::vector<double>>();
        if (scores.size() != docs.size())
            return ClientError::malformed_response("rerank returned wrong score count");
        return scores;
    }

  private:
    std::string base_;
};

/// Snippet-writing model: POST {base}/snippet {"query","context"} ->
/// {"snippet","relevance"}.
class HttpSnippetWriter : public SnippetClient {
  public:
    explicit HttpSnippetWriter(std::string base_url) : base_(std::move(base_url)) {}

    Result<SnippetVerdict> write_snippet(std::string_view query,
                                         std::string_view context) override {
        auto reply = detail::post_json(
            base_, "/snippet",
            {{"query", std::string(query)}, {"context", std::string(context)}});
        if (!reply.ok()) return reply.error();
        const auto& j = reply.value();
        if (!j.is_object() || !j.contains("snippet") || !j["snippet"].is_string())
            return ClientError::malformed_response("snippet reply needs a snippet string");
        return SnippetVerdict{j["snippet"].get<std::string>(), j.value("relevance", 0.0)};
    }

  private:
    std::string base_;
};

/// Judge model: POST {base}/judge {"question","response","ground_truth"} ->
/// {"extracted_final_answer","reasoning","correctness","confidence"}.
class HttpJudge : public JudgeClient {
  public:
    explicit HttpJudge(std::string base_url) : base_(std::move(base_url)) {}

    Result<JudgeVerdict> judge(std::string_view question, std::string_view response,
                               std::string_view ground_truth) override {
        auto reply = detail::post_json(base_, "/judge",
                                       {{"question", std::string(question)},
                                        {"response", std::string(response)},
                                        {"ground_truth", std::string(ground_truth)}});
        if (!reply.ok()) return reply.error();
        const auto& j = reply.value();
        if (!j.is_object() || !j.contains("correctness") || !j["correctness"].is_string())
            return ClientError::malformed_response("judge reply needs a correctness string");
        std::string c = j["correctness"].get<std::string>();
        if (c != "correct" && c != "incorrect")
            return ClientError::malformed_response("correctness must be correct or incorrect");
        JudgeVerdict v;
        v.extracted_final_answer = j.value("extracted_final_answer", std::string("None"));
        v.reasoning = j.value("reasoning", std::string());
        v.correctness = c == "correct" ? JudgeVerdict::Correctness::correct
                                       : JudgeVerdict::Correctness::incorrect;
        v.confidence = j.value("confidence", 0);
        return v;
    }

  private:
    std::string base_;
};

/// Key-value cache backend over HTTP: GET/PUT {base}/kv/{namespace}/{digest}
/// with {"value": ...} bodies. Transport failures read as cache misses and
/// drop writes, so a flaky remote cache degrades instead of breaking.
class HttpKvBackend : public KvBackend {
  public:
    explicit HttpKvBackend(std::string base_url) : base_(std::move(base_url)) {}

    std::optional<std::string> get(const CacheKey& key) override {
        httplib::Client cli(base_);
        cli.set_connection_timeout(10, 0);
        cli.set_read_timeout(30, 0);
        auto res = cli.Get(path_for(key));
        if (!res || res->status != 200) return std::nullopt;
        auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("value") ||
            !j["value"].is_string())
            return std::nullopt;
        return j["value"].get<std::string>();
    }

    void put(const CacheKey& key, std::string value) override {
        httplib::Client cli(base_);
        cli.set_connection_timeout(10, 0);
        cli.set_read_timeout(30, 0);
        nlohmann::json body = {{"value", std::move(value)}};
        cli.Put(path_for(key), body.dump(), "application/json");
    }

  private:
    static std::string path_for(const CacheKey& key) {
        return "/kv/" + to_string(key.ns) + "/" + key.digest;
    }

    std::string base_;
};

/// Tool transport speaking the /search and /browse wire format of the tool
/// server, for agents that target a remote instance.
class HttpToolTransport : public ToolTransport {
  public:
    explicit HttpToolTransport(std::string base_url) : base_(std::move(base_url)) {}

    Result<std::vector<SnippetResult>> search(
        const std::string& query, const std::optional<std::string>& region) override {
        nlohmann::json body = {{"query", query}};
        if (region) body["region_lang"] = *region;
        auto reply = detail::post_json(base_, "/search", body);
        if (!reply.ok()) return reply.error();
        if (!reply.value().is_array())
            return ClientError::malformed_response("search reply must be an array");
        std::vector<SnippetResult> out;
        for (const auto& item : reply.value()) {
            SnippetResult r;
            r.url = item.value("url", std::string());
            r.title = item.value("title", std::string());
            r.snippet = item.value("snippets", std::string());
            out.push_back(std::move(r));
        }
        return out;
    }

    Result<BrowseResult> browse(const std::string& url) override {
        auto reply = detail::post_json(base_, "/browse", {{"url", url}});
        if (!reply.ok()) return reply.error();
        const auto& j = reply.value();
        if (!j.is_object() || !j.contains("url") || !j.contains("semanticDocument"))
            return ClientError::malformed_response(
                "browse reply needs url and semanticDocument");
        return wire::browse_result_from_json(j);
    }

  private:
    std::string base_;
};

}  // namespace forge
