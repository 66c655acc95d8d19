#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

/// Counting abstraction behind every "N tokens" threshold in the system.
/// The default implementation counts whitespace-delimited words, which is a
/// stable, vocabulary-free proxy; callers that care about a specific model
/// vocabulary inject their own counter.
class TokenCounter {
public:
    virtual ~TokenCounter() = default;
    virtual std::string name() const = 0;
    virtual std::size_t count(std::string_view text) const = 0;
};

class WordTokenCounter final : public TokenCounter {
public:
    std::string name() const override { return "words"; }
    std::size_t count(std::string_view text) const override {
        std::size_t n = 0;
        bool in_word = false;
        for (unsigned char c : text) {
            if (std::isspace(c)) {
                in_word = false;
            } else if (!in_word) {
                in_word = true;
                ++n;
            }
        }
        return n;
    }
};

inline const TokenCounter& word_counter() {
    static const WordTokenCounter counter;
    return counter;
}

inline std::size_t count_tokens(std::string_view text, const TokenCounter& counter = word_counter()) {
    return counter.count(text);
}

/// Token-bounded contiguous segment of a source text. Unit of all retrieval.
struct Chunk {
    std::string id;
    std::string text;
    std::size_t token_count = 0;
    std::string source_url;
    std::size_t index = 0;  // consecutive from 0 within one source
    bool seed = false;      // snapshot seed chunk inserted by the pipeline
};

/// Collapses whitespace runs to single spaces and trims the ends. Chunking
/// operates on this normal form so the space-join of the chunks reproduces
/// the input exactly.
inline std::string normalize_whitespace(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (unsigned char c : text) {
        if (std::isspace(c)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(static_cast<char>(c));
        }
    }
    return out;
}

namespace detail {

inline bool sentence_end(std::string_view text, std::size_t i) {
    char c = text[i];
    if (c != '.' && c != '!' && c != '?') return false;
    return i + 1 >= text.size() || text[i + 1] == ' ';
}

// Longest prefix of `word` that fits the budget under `counter`. Used only
// when a single indivisible word exceeds the budget (possible with sub-word
// counters, never with the default word counter).
inline std::size_t fitting_prefix(std::string_view word, std::size_t max_tokens, const TokenCounter& counter) {
    std::size_t lo = 1, hi = word.size(), best = 1;
    while (lo <= hi) {
        std::size_t mid = lo + (hi - lo) / 2;
        if (counter.count(word.substr(0, mid)) <= max_tokens) {
            best = mid;
            lo = mid + 1;
        } else {
            if (mid == 1) break;
            hi = mid - 1;
        }
    }
    return best;
}

}  // namespace detail

/// Splits normalized text at sentence boundaries (., !, ? followed by a
/// space or end of text). Sentences come back trimmed, in document order.
inline std::vector<std::string> split_sentences(std::string_view text) {
    std::string norm = normalize_whitespace(text);
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i < norm.size(); ++i) {
        if (detail::sentence_end(norm, i)) {
            out.push_back(norm.substr(start, i - start + 1));
            start = i + 2;  // skip the boundary space
            ++i;
        }
    }
    if (start < norm.size()) out.push_back(norm.substr(start));
    return out;
}

/// Splits text into chunks of at most max_tokens tokens each. Boundaries
/// prefer sentence ends, then whitespace, then hard character cuts.
/// Joining the chunk texts with single spaces reproduces the normalized
/// input whenever no hard cut was needed.
inline std::vector<Chunk> split_into_chunks(std::string_view text,
                                            std::size_t max_tokens,
                                            std::string_view source_url = {},
                                            const TokenCounter& counter = word_counter()) {
    if (max_tokens < 1) throw std::invalid_argument("split_into_chunks: max_tokens must be >= 1");
    std::string norm = normalize_whitespace(text);
    std::vector<Chunk> chunks;
    if (norm.empty()) return chunks;

    // Segment into sentences first, falling back to single words for any
    // sentence that does not fit the budget on its own.
    std::vector<std::string_view> pieces;
    {
        std::string_view v = norm;
        std::size_t start = 0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (detail::sentence_end(v, i)) {
                pieces.push_back(v.substr(start, i - start + 1));
                start = i + 2;  // skip the boundary space
                ++i;
            }
        }
        if (start < v.size()) pieces.push_back(v.substr(start));
    }

    auto emit = [&](std::string piece_text) {
        Chunk c;
        c.index = chunks.size();
        c.source_url = std::string(source_url);
        c.id = c.source_url + "#" + std::to_string(c.index);
        c.text = std::move(piece_text);
        c.token_count = counter.count(c.text);
        chunks.push_back(std::move(c));
    };

    std::string current;
    auto flush = [&] {
        if (!current.empty()) {
            emit(std::move(current));
            current.clear();
        }
    };

    auto append_unit = [&](std::string_view unit) {
        std::size_t unit_tokens = counter.count(unit);
        if (unit_tokens > max_tokens) {
            // Indivisible over-budget unit: hard cuts.
            flush();
            std::string_view rest = unit;
            while (!rest.empty()) {
                std::size_t len = detail::fitting_prefix(rest, max_tokens, counter);
                emit(std::string(rest.substr(0, len)));
                rest.remove_prefix(len);
            }
            return;
        }
        std::size_t joined = current.empty() ? unit_tokens
                                             : counter.count(current + " " + std::string(unit));
        if (!current.empty() && joined > max_tokens) flush();
        if (current.empty()) {
            current.assign(unit);
        } else {
            current += ' ';
            current += unit;
        }
    };

    for (std::string_view piece : pieces) {
        if (counter.count(piece) <= max_tokens) {
            append_unit(piece);
            continue;
        }
        // Over-budget sentence: fall back to word units.
        std::size_t start = 0;
        for (std::size_t i = 0; i <= piece.size(); ++i) {
            if (i == piece.size() || piece[i] == ' ') {
                if (i > start) append_unit(piece.substr(start, i - start));
                start = i + 1;
            }
        }
    }
    flush();
    return chunks;
}

/// Title plus boilerplate-free main text of an HTML document.
struct ExtractedPage {
    std::string title;
    std::string text;
};

namespace detail {

inline std::string decode_entities(std::string_view in) {
    static const std::pair<std::string_view, char> table[] = {
        {"&amp;", '&'}, {"&lt;", '<'}, {"&gt;", '>'},
        {"&quot;", '"'}, {"&#39;", '\''}, {"&apos;", '\''}, {"&nbsp;", ' '},
    };
    std::string out;
    out.reserve(in.size());
    for (std::size_t i = 0; i < in.size();) {
        if (in[i] == '&') {
            bool matched = false;
            for (auto [name, repl] : table) {
                if (in.substr(i, name.size()) == name) {
                    out.push_back(repl);
                    i += name.size();
                    matched = true;
                    break;
                }
            }
            if (matched) continue;
        }
        out.push_back(in[i++]);
    }
    return out;
}

inline std::string lowercase_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace detail

/// Tolerant tag-stripping extraction: drops script/style/navigation subtrees
/// and comments, keeps text content, and pulls the title from the title
/// element. Malformed markup degrades to plain tag stripping.
inline ExtractedPage extract_main_text(std::string_view html) {
    static const char* kDropTags[] = {"script", "style", "nav", "head", "header",
                                      "footer", "noscript", "template", "aside", "title"};
    ExtractedPage page;
    std::string text;
    std::size_t i = 0;
    const std::size_t n = html.size();

    // The title nests inside head, which the walk below drops whole, so pull
    // it out before walking.
    {
        std::string lower = detail::lowercase_ascii(html);
        std::size_t t = lower.find("<title");
        if (t != std::string_view::npos) {
            std::size_t gt = html.find('>', t);
            std::size_t close = (gt == std::string_view::npos)
                                    ? std::string::npos
                                    : lower.find("</title", gt);
            if (gt != std::string_view::npos && close != std::string::npos)
                page.title = normalize_whitespace(
                    detail::decode_entities(html.substr(gt + 1, close - gt - 1)));
        }
    }

    auto tag_name_at = [&](std::size_t pos) -> std::string {
        std::size_t j = pos;
        std::string name;
        while (j < n && (std::isalnum(static_cast<unsigned char>(html[j])) || html[j] == '-')) {
            name.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(html[j]))));
            ++j;
        }
        return name;
    };

    while (i < n) {
        if (html[i] != '<') {
            std::size_t next = html.find('<', i);
            if (next == std::string_view::npos) next = n;
            text.append(html.substr(i, next - i));
            i = next;
            continue;
        }
        if (html.substr(i, 4) == "<!--") {
            std::size_t end = html.find("-->", i + 4);
            i = (end == std::string_view::npos) ? n : end + 3;
            continue;
        }
        std::size_t name_start = i + 1;
        bool closing = name_start < n && html[name_start] == '/';
        if (closing) ++name_start;
        std::string name = tag_name_at(name_start);
        std::size_t gt = html.find('>', i);
        if (gt == std::string_view::npos) break;  // truncated tag: stop here

        bool drop = false;
        for (const char* t : kDropTags) {
            if (!closing && name == t) {
                drop = true;
                // Skip to the matching close tag (no nesting tracking; these
                // tags do not nest in practice).
                std::string needle = "</" + name;
                std::string lower = detail::lowercase_ascii(html.substr(gt));
                std::size_t close = lower.find(needle);
                if (close == std::string::npos) {
                    i = gt + 1;  // unterminated: treat as empty element
                } else {
                    std::size_t close_gt = html.find('>', gt + close);
                    i = (close_gt == std::string_view::npos) ? n : close_gt + 1;
                }
                break;
            }
        }
        if (drop) continue;
        // Block-level elements become whitespace so words don't glue together.
        text.push_back(' ');
        i = gt + 1;
    }

    page.text = normalize_whitespace(detail::decode_entities(text));
    return page;
}

}  // namespace forge
