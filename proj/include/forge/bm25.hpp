#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "forge/textseg.hpp"

namespace forge {

/// Lowercases and splits on non-alphanumeric characters. No stemming, no
/// stopwords (both are config knobs elsewhere, defaulting to off).
inline std::vector<std::string> bm25_tokenize(std::string_view text) {
    std::vector<std::string> terms;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            terms.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) terms.push_back(std::move(cur));
    return terms;
}

struct ScoredChunk {
    Chunk chunk;
    double score = 0.0;
};

/// Okapi BM25 index over a chunk corpus. Immutable after build; concurrent
/// queries are safe. The idf uses the non-negative ln(1 + (N - df + 0.5) /
/// (df + 0.5)) form so scores never go below zero.
class Bm25Index {
public:
    Bm25Index() = default;

    Bm25Index(std::vector<Chunk> chunks, double k1 = 1.5, double b = 0.75)
        : chunks_(std::move(chunks)), k1_(k1), b_(b) {
        if (k1 < 0.0) throw std::invalid_argument("bm25: k1 must be >= 0");
        if (b < 0.0 || b > 1.0) throw std::invalid_argument("bm25: b must be in [0,1]");
        term_freqs_.resize(chunks_.size());
        doc_len_.resize(chunks_.size());
        std::size_t total_len = 0;
        for (std::size_t i = 0; i < chunks_.size(); ++i) {
            auto terms = bm25_tokenize(chunks_[i].text);
            doc_len_[i] = terms.size();
            total_len += terms.size();
            for (auto& t : terms) term_freqs_[i][t] += 1;
            for (auto& [t, f] : term_freqs_[i]) {
                (void)f;
                doc_freq_[t] += 1;
            }
        }
        avg_len_ = chunks_.empty() ? 0.0 : static_cast<double>(total_len) / chunks_.size();
    }

    std::size_t size() const { return chunks_.size(); }
    const std::vector<Chunk>& chunks() const { return chunks_; }
    double k1() const { return k1_; }
    double b() const { return b_; }
    double avg_len() const { return avg_len_; }
    std::size_t doc_len(std::size_t i) const { return doc_len_[i]; }

    std::size_t doc_freq(std::string_view term) const {
        auto it = doc_freq_.find(std::string(term));
        return it == doc_freq_.end() ? 0 : it->second;
    }

    /// Sum of per-term BM25 contributions for one chunk. Query term
    /// repetitions contribute once per occurrence.
    double score(std::string_view query, std::size_t chunk_pos) const {
        double s = 0.0;
        for (const auto& term : bm25_tokenize(query)) s += term_score(term, chunk_pos);
        return s;
    }

    /// Top-k chunks by score, ties broken by ascending chunk index. Chunks
    /// with zero score still participate, so the result always has
    /// min(k, corpus size) entries.
    std::vector<ScoredChunk> top_k(std::string_view query, std::size_t k) const {
        std::vector<ScoredChunk> scored;
        scored.reserve(chunks_.size());
        auto query_terms = bm25_tokenize(query);
        for (std::size_t i = 0; i < chunks_.size(); ++i) {
            double s = 0.0;
            for (const auto& term : query_terms) s += term_score(term, i);
            scored.push_back({chunks_[i], s});
        }
        std::sort(scored.begin(), scored.end(), [](const ScoredChunk& a, const ScoredChunk& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.chunk.index < b.chunk.index;
        });
        if (scored.size() > k) scored.resize(k);
        return scored;
    }

private:
    double term_score(const std::string& term, std::size_t i) const {
        auto tf_it = term_freqs_[i].find(term);
        if (tf_it == term_freqs_[i].end()) return 0.0;
        double df = static_cast<double>(doc_freq_.at(term));
        double n = static_cast<double>(chunks_.size());
        double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
        double f = static_cast<double>(tf_it->second);
        double norm = 1.0 - b_ + b_ * static_cast<double>(doc_len_[i]) / avg_len_;
        return idf * (f * (k1_ + 1.0)) / (f + k1_ * norm);
    }

    std::vector<Chunk> chunks_;
    double k1_ = 1.5;
    double b_ = 0.75;
    double avg_len_ = 0.0;
    std::vector<std::unordered_map<std::string, std::size_t>> term_freqs_;
    std::vector<std::size_t> doc_len_;
    std::unordered_map<std::string, std::size_t> doc_freq_;
};

inline Bm25Index build_index(std::vector<Chunk> chunks, double k1 = 1.5, double b = 0.75) {
    return Bm25Index(std::move(chunks), k1, b);
}

inline std::vector<ScoredChunk> top_k(const Bm25Index& index, std::string_view query, std::size_t k) {
    return index.top_k(query, k);
}

}  // namespace forge
