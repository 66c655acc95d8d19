#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "forge/bm25.hpp"
#include "forge/fixtures.hpp"
#include "forge/gateway.hpp"
#include "forge/textseg.hpp"

namespace forge {

/// 64-bit FNV-1a, optionally seeded, used wherever the fakes need a stable
/// hash (embedding features, cache digests in tests).
inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0) {
    std::uint64_t h = 14695981039346656037ull ^ (seed * 0x9e3779b97f4a7c15ull);
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ull;
    }
    return h;
}

namespace detail {

inline std::set<std::string> term_set(std::string_view text) {
    auto terms = bm25_tokenize(text);
    return {terms.begin(), terms.end()};
}

inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() || b.empty()) return 0.0;
    std::size_t inter = 0;
    for (const auto& t : a) inter += b.count(t);
    std::size_t uni = a.size() + b.size() - inter;
    return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return out;
}

}  // namespace detail

/// Serves the corpus query table verbatim; for unknown queries falls back to
/// ranking corpus pages by term overlap so any query gets plausible results.
/// Thread-safe; counts calls so cache tests can assert on traffic.
class FakeSearchEngine : public SearchEngineClient {
  public:
    explicit FakeSearchEngine(std::shared_ptr<const FixtureCorpus> corpus,
                              std::size_t results_n = 5, std::string name = "primary")
        : corpus_(std::move(corpus)), results_n_(results_n), name_(std::move(name)) {}

    std::string name() const override { return name_; }

    Result<std::vector<EngineResult>> search(std::string_view query,
                                             std::string_view region_lang) override {
        (void)region_lang;  // the corpus is single-region; recorded for interface parity
        calls_.fetch_add(1, std::memory_order_relaxed);
        if (fail_all_) return ClientError::unavailable("engine offline");

        auto it = corpus_->query_table.find(std::string(query));
        if (it != corpus_->query_table.end()) return it->second;

        auto query_terms = detail::term_set(query);
        struct Hit {
            std::size_t distinct;
            std::size_t total;
            const FixturePage* page;
        };
        std::vector<Hit> hits;
        for (const auto& page : corpus_->pages) {
            auto extracted = extract_main_text(page.html);
            auto page_terms = bm25_tokenize(extracted.text);
            std::set<std::string> seen;
            std::size_t total = 0;
            for (const auto& t : page_terms) {
                if (query_terms.count(t)) {
                    ++total;
                    seen.insert(t);
                }
            }
            if (total > 0) hits.push_back({seen.size(), total, &page});
        }
        std::sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) {
            if (a.distinct != b.distinct) return a.distinct > b.distinct;
            if (a.total != b.total) return a.total > b.total;
            return a.page->url < b.page->url;
        });
        std::vector<EngineResult> out;
        for (const auto& h : hits) {
            if (out.size() == results_n_) break;
            out.push_back({snapshot_for(*h.page, query_terms), h.page->title, h.page->url});
        }
        return out;
    }

    std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }
    void set_fail_all(bool fail) { fail_all_ = fail; }

  private:
    // A ~20 word window centered on the first query-term occurrence.
    static std::string snapshot_for(const FixturePage& page,
                                    const std::set<std::string>& query_terms) {
        auto extracted = extract_main_text(page.html);
        std::vector<std::string> words;
        {
            std::string word;
            for (char ch : extracted.text) {
                if (std::isspace(static_cast<unsigned char>(ch))) {
                    if (!word.empty()) words.push_back(word), word.clear();
                } else {
                    word.push_back(ch);
                }
            }
            if (!word.empty()) words.push_back(word);
        }
        std::size_t first = 0;
        for (std::size_t i = 0; i < words.size(); ++i) {
            auto toks = bm25_tokenize(words[i]);
            if (!toks.empty() && query_terms.count(toks.front())) {
                first = i;
                break;
            }
        }
        std::size_t begin = first >= 10 ? first - 10 : 0;
        std::size_t end = std::min(words.size(), begin + 20);
        std::string out;
        for (std::size_t i = begin; i < end; ++i) {
            if (!out.empty()) out.push_back(' ');
            out += words[i];
        }
        return out;
    }

    std::shared_ptr<const FixtureCorpus> corpus_;
    std::size_t results_n_;
    std::string name_;
    std::atomic<std::uint64_t> calls_{0};
    bool fail_all_ = false;
};

/// Returns raw fixture HTML for known URLs; blocked URLs and unknown URLs
/// fail with an unavailable error. Counts fetches for cache assertions.
class FakeCrawler : public CrawlerClient {
  public:
    explicit FakeCrawler(std::shared_ptr<const FixtureCorpus> corpus)
        : corpus_(std::move(corpus)) {}

    Result<std::string> fetch(std::string_view url) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        if (corpus_->blocked_urls.count(std::string(url)))
            return ClientError::unavailable("fetch blocked: " + std::string(url));
        if (const auto* page = corpus_->page(url)) return page->html;
        return ClientError::unavailable("no such page: " + std::string(url));
    }

    std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }

  private:
    std::shared_ptr<const FixtureCorpus> corpus_;
    std::atomic<std::uint64_t> calls_{0};
};

/// Feature-hashing bag-of-words embedder: each term hashes to one of `dim`
/// buckets with a hash-derived sign, then the vector is L2-normalized.
/// Texts sharing terms share coordinates, so overlap raises cosine.
class FakeEmbedder : public EmbeddingClient {
  public:
    explicit FakeEmbedder(std::size_t dim = 64, std::uint64_t seed = 7) : dim_(dim), seed_(seed) {}

    std::size_t dimension() const override { return dim_; }

    Result<std::vector<std::vector<double>>> embed(
        const std::vector<std::string>& texts) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        std::vector<std::vector<double>> out;
        out.reserve(texts.size());
        for (const auto& text : texts) out.push_back(embed_one(text));
        return out;
    }

    std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }

  private:
    std::vector<double> embed_one(std::string_view text) const {
        std::vector<double> v(dim_, 0.0);
        for (const auto& term : bm25_tokenize(text)) {
            std::uint64_t h = fnv1a64(term, seed_);
            double sign = (h >> 63) ? -1.0 : 1.0;
            v[h % dim_] += sign;
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        if (norm == 0.0) {
            v[0] = 1.0;  // canonical unit vector for term-free text
            return v;
        }
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
        return v;
    }

    std::size_t dim_;
    std::uint64_t seed_;
    mutable std::atomic<std::uint64_t> calls_{0};
};

/// Scores each document by Jaccard overlap between its term set and the
/// query's. Deterministic and order-preserving (one score per input doc).
class FakeReranker : public RerankClient {
  public:
    Result<std::vector<double>> rerank(std::string_view query,
                                       const std::vector<std::string>& docs) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        auto q = detail::term_set(query);
        std::vector<double> scores;
        scores.reserve(docs.size());
        for (const auto& d : docs) scores.push_back(detail::jaccard(q, detail::term_set(d)));
        return scores;
    }

    std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }

  private:
    std::atomic<std::uint64_t> calls_{0};
};

/// Extractive snippet writer: picks the context sentences that best overlap
/// the query, keeps them in document order, and caps the result at
/// `max_words`. Relevance is the best single-sentence overlap.
class FakeSnippetWriter : public SnippetClient {
  public:
    explicit FakeSnippetWriter(std::size_t max_words = 60) : max_words_(max_words) {}

    Result<SnippetVerdict> write_snippet(std::string_view query,
                                         std::string_view context) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        std::string normalized = normalize_whitespace(context);
        if (normalized.empty()) return SnippetVerdict{"", 0.0};

        auto sentences = forge::split_sentences(normalized);
        auto query_terms = detail::term_set(query);
        struct Scored {
            double score;
            std::size_t pos;
            std::size_t words;
        };
        std::vector<Scored> scored;
        scored.reserve(sentences.size());
        double best = 0.0;
        for (std::size_t i = 0; i < sentences.size(); ++i) {
            double s = detail::jaccard(query_terms, detail::term_set(sentences[i]));
            best = std::max(best, s);
            scored.push_back({s, i, count_tokens(sentences[i])});
        }
        std::vector<Scored> order = scored;
        std::sort(order.begin(), order.end(), [](const Scored& a, const Scored& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.pos < b.pos;
        });
        std::set<std::size_t> chosen;
        std::size_t budget = max_words_;
        for (const auto& s : order) {
            if (s.words > budget) continue;
            chosen.insert(s.pos);
            budget -= s.words;
        }
        std::string snippet;
        if (chosen.empty()) {
            snippet = truncate_words(sentences[order.front().pos], max_words_);
        } else {
            for (std::size_t pos : chosen) {
                if (!snippet.empty()) snippet.push_back(' ');
                snippet += sentences[pos];
            }
        }
        return SnippetVerdict{truncate_words(snippet, max_words_), best};
    }

    std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }

  private:
    std::size_t max_words_;
    std::atomic<std::uint64_t> calls_{0};
};

/// Grades by substring containment: the answer extracted from the response
/// (text after the final `</think>`, or the whole response) must contain one
/// of the ` OR `-separated ground-truth variants after case and whitespace
/// normalization.
class FakeJudge : public JudgeClient {
  public:
    Result<JudgeVerdict> judge(std::string_view question, std::string_view response,
                               std::string_view ground_truth) override {
        (void)question;
        calls_.fetch_add(1, std::memory_order_relaxed);
        std::string extracted = extract_answer(response);
        JudgeVerdict v;
        v.confidence = 100;
        if (extracted.empty()) {
            v.extracted_final_answer = "None";
            v.reasoning = "the response contains no final answer";
            v.correctness = JudgeVerdict::Correctness::incorrect;
            return v;
        }
        v.extracted_final_answer = extracted;
        std::string haystack = detail::lower(normalize_whitespace(extracted));
        bool match = false;
        for (const auto& variant : split_variants(ground_truth)) {
            std::string needle = detail::lower(normalize_whitespace(variant));
            if (!needle.empty() && haystack.find(needle) != std::string::npos) {
                match = true;
                break;
            }
        }
        v.reasoning = match ? "the final answer contains the expected answer"
                            : "the final answer does not match any accepted variant";
        v.correctness =
            match ? JudgeVerdict::Correctness::correct : JudgeVerdict::Correctness::incorrect;
        return v;
    }

    std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }

    static std::string extract_answer(std::string_view response) {
        static constexpr std::string_view kClose = "</think>";
        std::string text(response);
        auto pos = text.rfind(kClose);
        if (pos != std::string::npos) text = text.substr(pos + kClose.size());
        return normalize_whitespace(text);
    }

    static std::vector<std::string> split_variants(std::string_view ground_truth) {
        static constexpr std::string_view kSep = " OR ";
        std::vector<std::string> out;
        std::string rest(ground_truth);
        std::size_t pos;
        while ((pos = rest.find(kSep)) != std::string::npos) {
            out.push_back(rest.substr(0, pos));
            rest = rest.substr(pos + kSep.size());
        }
        out.push_back(rest);
        return out;
    }

  private:
    std::atomic<std::uint64_t> calls_{0};
};

/// Dictionary-based mention finder. Scans for the longest dictionary name at
/// each word boundary and reports each distinct name once, in first-mention
/// order.
class FakeNer : public NerClient {
  public:
    explicit FakeNer(std::vector<std::string> dictionary) : dictionary_(std::move(dictionary)) {
        std::sort(dictionary_.begin(), dictionary_.end(),
                  [](const std::string& a, const std::string& b) {
                      if (a.size() != b.size()) return a.size() > b.size();
                      return a < b;
                  });
    }

    Result<std::vector<std::string>> ner(std::string_view text) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        std::vector<std::string> found;
        std::set<std::string> seen;
        std::size_t i = 0;
        while (i < text.size()) {
            if (!boundary_before(text, i)) {
                ++i;
                continue;
            }
            std::size_t matched = 0;
            for (const auto& name : dictionary_) {
                if (text.compare(i, name.size(), name) == 0 &&
                    boundary_after(text, i + name.size())) {
                    if (!seen.count(name)) {
                        seen.insert(name);
                        found.push_back(name);
                    }
                    matched = name.size();
                    break;  // dictionary is longest-first, so this is the longest match
                }
            }
            i += matched > 0 ? matched : 1;
        }
        return found;
    }

    std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }

  private:
    static bool is_word_char(char ch) {
        return std::isalnum(static_cast<unsigned char>(ch)) != 0;
    }
    static bool boundary_before(std::string_view text, std::size_t i) {
        return i == 0 || !is_word_char(text[i - 1]);
    }
    static bool boundary_after(std::string_view text, std::size_t end) {
        return end >= text.size() || !is_word_char(text[end]);
    }

    std::vector<std::string> dictionary_;
    std::atomic<std::uint64_t> calls_{0};
};

/// Rewrites a fact as hearsay without touching its content words: prefixes a
/// reporting phrase and lowercases the old sentence start.
class FakeRephraser : public RephraseClient {
  public:
    Result<std::string> rephrase(std::string_view fact) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        std::string body = normalize_whitespace(fact);
        if (body.empty()) return std::string("Reportedly, nothing is known.");
        // Keep proper nouns intact: only lowercase a leading article.
        for (const char* article : {"The ", "A ", "An "}) {
            std::string_view a(article);
            if (body.size() > a.size() && body.compare(0, a.size(), a) == 0) {
                body[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(body[0])));
                break;
            }
        }
        return "Reportedly, " + body;
    }

    std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }

  private:
    std::atomic<std::uint64_t> calls_{0};
};

/// Scripted solver used by the difficulty filter: each question maps to a
/// per-round pass pattern (true = solved). Unknown questions never solve.
class ScriptedSolver : public SolverClient {
  public:
    ScriptedSolver() = default;
    explicit ScriptedSolver(std::map<std::string, std::vector<bool>> patterns,
                            std::map<std::string, std::string> answers = {})
        : patterns_(std::move(patterns)), answers_(std::move(answers)) {}

    void set_pattern(std::string question, std::vector<bool> pattern, std::string answer = "") {
        patterns_[question] = std::move(pattern);
        if (!answer.empty()) answers_[std::move(question)] = std::move(answer);
    }

    Result<SolveOutcome> solve(std::string_view question, int round) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        if (round < 1) return ClientError::malformed_response("round must be 1-based");
        auto it = patterns_.find(std::string(question));
        if (it == patterns_.end()) return SolveOutcome{false, ""};
        const auto& pattern = it->second;
        std::size_t idx = static_cast<std::size_t>(round - 1);
        bool solved = idx < pattern.size() && pattern[idx];
        std::string answer;
        if (solved) {
            auto a = answers_.find(std::string(question));
            answer = a != answers_.end() ? a->second : "solved";
        }
        return SolveOutcome{solved, answer};
    }

    std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }

  private:
    std::map<std::string, std::vector<bool>> patterns_;
    std::map<std::string, std::string> answers_;
    std::atomic<std::uint64_t> calls_{0};
};

/// Renders constraints as a numbered riddle so every clause survives into the
/// question text verbatim; the answer type is named but the answer is not.
class TemplateQuestionGen : public QuestionGenClient {
  public:
    Result<std::string> generate_question(const std::vector<std::string>& constraints,
                                          std::string_view answer_hint) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        std::string out = "I am looking for ";
        out += answer_hint.empty() ? std::string("something") : std::string(answer_hint);
        out += " that fits all of the following clues.";
        for (std::size_t i = 0; i < constraints.size(); ++i) {
            out += " (" + std::to_string(i + 1) + ") " + constraints[i];
        }
        out += " What is it?";
        return out;
    }

    std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }

  private:
    std::atomic<std::uint64_t> calls_{0};
};

/// Convenience bundle wiring every fake to one shared corpus.
struct FakeStack {
    std::shared_ptr<const FixtureCorpus> corpus;
    std::shared_ptr<FakeSearchEngine> engine;
    std::shared_ptr<FakeSearchEngine> backup_engine;
    std::shared_ptr<FakeCrawler> crawler;
    std::shared_ptr<FakeEmbedder> embedder;
    std::shared_ptr<FakeReranker> reranker;
    std::shared_ptr<FakeSnippetWriter> snippet_writer;
    std::shared_ptr<FakeJudge> judge;
    std::shared_ptr<FakeNer> ner;
    std::shared_ptr<FakeRephraser> rephraser;
};

inline FakeStack make_fake_stack(std::shared_ptr<const FixtureCorpus> corpus = nullptr) {
    FakeStack s;
    s.corpus = corpus ? std::move(corpus)
                      : std::make_shared<const FixtureCorpus>(demo_corpus());
    s.engine = std::make_shared<FakeSearchEngine>(s.corpus, 5, "primary");
    s.backup_engine = std::make_shared<FakeSearchEngine>(s.corpus, 5, "backup");
    s.crawler = std::make_shared<FakeCrawler>(s.corpus);
    s.embedder = std::make_shared<FakeEmbedder>();
    s.reranker = std::make_shared<FakeReranker>();
    s.snippet_writer = std::make_shared<FakeSnippetWriter>();
    s.judge = std::make_shared<FakeJudge>();
    s.ner = std::make_shared<FakeNer>(s.corpus->entity_names());
    s.rephraser = std::make_shared<FakeRephraser>();
    return s;
}

}  // namespace forge
