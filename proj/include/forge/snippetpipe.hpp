#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/bm25.hpp"
#include "forge/gateway.hpp"
#include "forge/textseg.hpp"

namespace forge {

/// Stage budgets for turning one engine result into one snippet. Defaults
/// give the 44 -> 8 -> 3 ladder: BM25 keeps top-40 by the user query plus
/// top-3 by the snapshot (plus the seed), embeddings keep 8, the reranker 3.
struct SearchPipelineConfig {
    std::size_t results_n = 5;
    std::size_t chunk_tokens = 128;
    std::size_t k_q = 40;
    std::size_t k_s = 3;
    std::size_t embed_top = 8;
    std::size_t rerank_top = 3;
    std::size_t snippet_max_words = 60;
};

/// Browse keeps whole regions of the page: long chunks, BM25 by page title,
/// and a single surviving chunk after the semantic stages.
struct BrowsePipelineConfig {
    std::size_t chunk_tokens = 2048;
    std::size_t k_q = 40;
    std::size_t embed_top = 8;
    std::size_t rerank_top = 1;
};

struct SnippetResult {
    std::string snippet;
    double relevance = 0.0;
    std::string title;
    std::string url;
};

struct BrowseResult {
    std::string url;
    std::string document;
};

/// Per-stage cardinalities recorded during a pipeline run, for observability
/// and for tests that pin the stage ladder.
struct StageTrace {
    std::size_t candidate_count = 0;
    std::size_t lexical_count = 0;
    std::size_t embed_count = 0;
    std::size_t rerank_count = 0;
};

/// Non-owning bundle of the model-backed clients a pipeline run needs.
struct PipelineClients {
    EmbeddingClient& embedder;
    RerankClient& reranker;
    SnippetClient& snippet_writer;
};

/// Raised when a client call fails mid-pipeline. Search falls back to the
/// snapshot on this; browse surfaces it to the caller.
class PipelineError : public std::runtime_error {
  public:
    explicit PipelineError(const ClientError& e) : std::runtime_error(to_string(e)) {}
    explicit PipelineError(const std::string& what) : std::runtime_error(what) {}
};

/// Chunks the crawled page and appends the engine snapshot as a flagged seed
/// chunk, so at least one query-related chunk always survives even when the
/// page itself is off-topic or missing.
inline std::vector<Chunk> candidate_chunks(std::string_view page_text, std::string_view snapshot,
                                           std::size_t chunk_tokens, std::string_view url = "",
                                           const TokenCounter& counter = word_counter()) {
    std::string page_norm = normalize_whitespace(page_text);
    std::string snap_norm = normalize_whitespace(snapshot);
    if (page_norm.empty() && snap_norm.empty())
        throw std::invalid_argument("candidate_chunks: page text and snapshot are both empty");

    std::vector<Chunk> out;
    if (!page_norm.empty()) out = split_into_chunks(page_norm, chunk_tokens, url, counter);
    if (!snap_norm.empty()) {
        Chunk seed;
        seed.index = out.size();
        seed.id = std::string(url) + "#seed";
        seed.text = snap_norm;
        seed.token_count = counter.count(seed.text);
        seed.source_url = std::string(url);
        seed.seed = true;
        out.push_back(std::move(seed));
    }
    return out;
}

/// Dual-query lexical filter: BM25 top-k_q by the user query concatenated
/// with BM25 top-k_s by the engine snapshot, deduplicated by chunk id with
/// first occurrence winning, and the seed chunk appended if it fell out.
inline std::vector<Chunk> lexical_stage(std::string_view query, std::string_view snapshot,
                                        const std::vector<Chunk>& candidates, std::size_t k_q,
                                        std::size_t k_s) {
    if (candidates.empty()) return {};
    Bm25Index index(candidates);
    auto by_query = index.top_k(query, k_q);
    auto by_snapshot = index.top_k(snapshot, k_s);

    std::vector<Chunk> out;
    std::set<std::string> seen;
    auto take = [&](const std::vector<ScoredChunk>& scored) {
        for (const auto& sc : scored) {
            if (seen.insert(sc.chunk.id).second) out.push_back(sc.chunk);
        }
    };
    take(by_query);
    take(by_snapshot);
    for (const auto& c : candidates) {
        if (c.seed && !seen.count(c.id)) {
            seen.insert(c.id);
            out.push_back(c);
        }
    }
    return out;
}

/// Embedding stage then rerank stage. Keeps embed_top chunks by cosine
/// similarity to the query, reorders those by reranker score, and returns the
/// top rerank_top. All ties break by ascending chunk index so runs are
/// reproducible across equal scores.
inline std::vector<Chunk> semantic_stage(std::string_view query, const std::vector<Chunk>& chunks,
                                         std::size_t embed_top, std::size_t rerank_top,
                                         EmbeddingClient& embedder, RerankClient& reranker,
                                         std::size_t* embed_survivors = nullptr) {
    if (chunks.empty()) throw std::invalid_argument("semantic_stage: no chunks");

    std::vector<std::string> texts;
    texts.reserve(chunks.size() + 1);
    texts.emplace_back(query);
    for (const auto& c : chunks) texts.push_back(c.text);
    auto embedded = embedder.embed(texts);
    if (!embedded.ok()) throw PipelineError(embedded.error());
    const auto& vecs = embedded.value();
    if (vecs.size() != texts.size())
        throw PipelineError("embedder returned " + std::to_string(vecs.size()) + " vectors for " +
                            std::to_string(texts.size()) + " texts");

    struct Ranked {
        double score;
        std::size_t pos;  // position in `chunks`
    };
    std::vector<Ranked> by_cosine;
    by_cosine.reserve(chunks.size());
    for (std::size_t i = 0; i < chunks.size(); ++i)
        by_cosine.push_back({cosine(vecs[0], vecs[i + 1]), i});
    std::stable_sort(by_cosine.begin(), by_cosine.end(), [&](const Ranked& a, const Ranked& b) {
        if (a.score != b.score) return a.score > b.score;
        return chunks[a.pos].index < chunks[b.pos].index;
    });
    if (by_cosine.size() > embed_top) by_cosine.resize(embed_top);
    if (embed_survivors) *embed_survivors = by_cosine.size();

    std::vector<std::string> survivor_texts;
    survivor_texts.reserve(by_cosine.size());
    for (const auto& r : by_cosine) survivor_texts.push_back(chunks[r.pos].text);
    auto scores = reranker.rerank(query, survivor_texts);
    if (!scores.ok()) throw PipelineError(scores.error());
    if (scores.value().size() != survivor_texts.size())
        throw PipelineError("reranker returned " + std::to_string(scores.value().size()) +
                            " scores for " + std::to_string(survivor_texts.size()) + " docs");

    std::vector<Ranked> by_rerank;
    by_rerank.reserve(by_cosine.size());
    for (std::size_t i = 0; i < by_cosine.size(); ++i)
        by_rerank.push_back({scores.value()[i], by_cosine[i].pos});
    std::stable_sort(by_rerank.begin(), by_rerank.end(), [&](const Ranked& a, const Ranked& b) {
        if (a.score != b.score) return a.score > b.score;
        return chunks[a.pos].index < chunks[b.pos].index;
    });
    if (by_rerank.size() > rerank_top) by_rerank.resize(rerank_top);

    std::vector<Chunk> out;
    out.reserve(by_rerank.size());
    for (const auto& r : by_rerank) out.push_back(chunks[r.pos]);
    return out;
}

/// Full per-URL chain for one engine result: chunk, lexically filter,
/// semantically filter, then write a bounded snippet over the survivors.
/// Client failures degrade to a snapshot-derived snippet rather than erroring
/// so one bad URL never sinks a whole search response.
inline SnippetResult search_result_pipeline(std::string_view query,
                                            const EngineResult& engine_result,
                                            const std::optional<std::string>& page_text,
                                            const SearchPipelineConfig& cfg,
                                            PipelineClients clients,
                                            StageTrace* trace = nullptr) {
    std::string snapshot = normalize_whitespace(engine_result.snapshot);
    auto fallback = [&]() {
        SnippetResult r;
        r.snippet = truncate_words(snapshot, cfg.snippet_max_words);
        r.relevance = 0.0;
        r.title = engine_result.title;
        r.url = engine_result.url;
        return r;
    };

    try {
        auto candidates =
            candidate_chunks(page_text ? std::string_view(*page_text) : std::string_view(""),
                             snapshot, cfg.chunk_tokens, engine_result.url);
        if (trace) trace->candidate_count = candidates.size();

        auto lexical = lexical_stage(query, snapshot, candidates, cfg.k_q, cfg.k_s);
        if (trace) trace->lexical_count = lexical.size();

        std::size_t embed_survivors = 0;
        auto survivors = semantic_stage(query, lexical, cfg.embed_top, cfg.rerank_top,
                                        clients.embedder, clients.reranker, &embed_survivors);
        if (trace) {
            trace->embed_count = embed_survivors;
            trace->rerank_count = survivors.size();
        }

        std::string context;
        for (const auto& c : survivors) {
            if (!context.empty()) context += "\n";
            context += c.text;
        }
        auto verdict = clients.snippet_writer.write_snippet(query, context);
        if (!verdict.ok()) throw PipelineError(verdict.error());

        SnippetResult r;
        r.snippet = truncate_words(verdict.value().snippet, cfg.snippet_max_words);
        r.relevance = verdict.value().relevance;
        r.title = engine_result.title;
        r.url = engine_result.url;
        return r;
    } catch (const std::invalid_argument&) {
        throw;  // both page and snapshot empty: nothing to degrade to
    } catch (const PipelineError&) {
        if (!snapshot.empty()) return fallback();
        throw;
    }
}

/// Browse-side chain: long chunks ranked lexically by the page title, then
/// the semantic stages keep exactly one chunk. No snapshot exists here, so
/// client failures propagate.
inline BrowseResult browse_pipeline(std::string_view url, std::string_view page_text,
                                    std::string_view title, const BrowsePipelineConfig& cfg,
                                    PipelineClients clients, StageTrace* trace = nullptr) {
    std::string page_norm = normalize_whitespace(page_text);
    if (page_norm.empty()) throw std::invalid_argument("browse_pipeline: page text is empty");

    auto chunks = split_into_chunks(page_norm, cfg.chunk_tokens, url);
    if (trace) trace->candidate_count = chunks.size();

    auto lexical = lexical_stage(title, "", chunks, cfg.k_q, /*k_s=*/0);
    if (trace) trace->lexical_count = lexical.size();

    std::size_t embed_survivors = 0;
    auto survivors = semantic_stage(title, lexical, cfg.embed_top, cfg.rerank_top,
                                    clients.embedder, clients.reranker, &embed_survivors);
    if (trace) {
        trace->embed_count = embed_survivors;
        trace->rerank_count = survivors.size();
    }

    BrowseResult r;
    r.url = std::string(url);
    r.document = survivors.front().text;
    return r;
}

}  // namespace forge
