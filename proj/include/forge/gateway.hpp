#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "forge/result.hpp"
#include "forge/textseg.hpp"

namespace forge {

/// Raw search-engine hit: a ~20 word snapshot, page title, and URL.
struct EngineResult {
    std::string snapshot;
    std::string title;
    std::string url;
};

/// Snippet plus self-assessed relevance, as produced by the snippet writer.
/// The snippet is capped at 60 words and relevance lies in [0,1].
struct SnippetVerdict {
    std::string snippet;
    double relevance = 0.0;
};

/// Verdict of the answer judge. Exactly these four fields, mirroring the
/// wire contract of the judging service.
struct JudgeVerdict {
    enum class Correctness { correct, incorrect };
    std::string extracted_final_answer;
    std::string reasoning;
    Correctness correctness = Correctness::incorrect;
    int confidence = 0;  // 0..100
};

inline const char* to_string(JudgeVerdict::Correctness c) {
    return c == JudgeVerdict::Correctness::correct ? "correct" : "incorrect";
}

/// Truncates text to at most max_words whitespace-delimited words.
inline std::string truncate_words(std::string_view text, std::size_t max_words) {
    std::size_t words = 0;
    bool in_word = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        bool space = std::isspace(static_cast<unsigned char>(text[i])) != 0;
        if (!space && !in_word) {
            in_word = true;
            if (++words > max_words) {
                std::string out(text.substr(0, i));
                while (!out.empty() && std::isspace(static_cast<unsigned char>(out.back())))
                    out.pop_back();
                return out;
            }
        } else if (space) {
            in_word = false;
        }
    }
    return std::string(text);
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

// ---------------------------------------------------------------------------
// Client interfaces. Every external or model-backed dependency sits behind
// one of these; deterministic fakes implement all of them for offline runs.
// Implementations must tolerate concurrent calls.
// ---------------------------------------------------------------------------

class SearchEngineClient {
public:
    virtual ~SearchEngineClient() = default;
    virtual std::string name() const = 0;
    /// Empty result list is a valid outcome (it triggers engine fallback).
    virtual Result<std::vector<EngineResult>> search(std::string_view query,
                                                     std::string_view region_lang) = 0;
};

class CrawlerClient {
public:
    virtual ~CrawlerClient() = default;
    virtual Result<std::string> fetch(std::string_view url) = 0;
};

class EmbeddingClient {
public:
    virtual ~EmbeddingClient() = default;
    virtual std::size_t dimension() const = 0;
    /// One unit-norm vector per input text, deterministic per text.
    virtual Result<std::vector<std::vector<double>>> embed(
        const std::vector<std::string>& texts) = 0;
};

class RerankClient {
public:
    virtual ~RerankClient() = default;
    /// One score in [0,1] per doc.
    virtual Result<std::vector<double>> rerank(std::string_view query,
                                               const std::vector<std::string>& docs) = 0;
};

class SnippetClient {
public:
    virtual ~SnippetClient() = default;
    virtual Result<SnippetVerdict> write_snippet(std::string_view query,
                                                 std::string_view context) = 0;
};

class JudgeClient {
public:
    virtual ~JudgeClient() = default;
    virtual Result<JudgeVerdict> judge(std::string_view question, std::string_view response,
                                       std::string_view ground_truth) = 0;
};

class NerClient {
public:
    virtual ~NerClient() = default;
    /// Entity mentions in order of first occurrence, deduplicated.
    virtual Result<std::vector<std::string>> ner(std::string_view text) = 0;
};

class RephraseClient {
public:
    virtual ~RephraseClient() = default;
    virtual Result<std::string> rephrase(std::string_view fact) = 0;
};

struct SolveOutcome {
    bool solved = false;
    std::string answer;
};

class SolverClient {
public:
    virtual ~SolverClient() = default;
    /// round is 1-based so scripted pass patterns read naturally.
    virtual Result<SolveOutcome> solve(std::string_view question, int round) = 0;
};

class QuestionGenClient {
public:
    virtual ~QuestionGenClient() = default;
    virtual Result<std::string> generate_question(const std::vector<std::string>& constraints,
                                                  std::string_view answer_hint) = 0;
};

}  // namespace forge
