#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/agentloop.hpp"
#include "forge/gateway.hpp"
#include "forge/textseg.hpp"

namespace forge {

/// Tree-shape knobs for question synthesis.
struct TreeConfig {
    int max_depth = 3;
    int branching = 3;
    int facts_per_node = 5;
    std::uint64_t rng_seed = 0;

    void validate() const {
        if (max_depth < 1 || branching < 1 || facts_per_node < 1)
            throw std::invalid_argument("TreeConfig: max_depth, branching, facts_per_node must be >= 1");
    }
};

struct EntityNode {
    std::string name;
    std::string url;
    std::vector<std::string> facts;
    std::vector<std::string> fuzzed_facts;
    std::vector<std::string> constraints;
    bool barren = false;    // page could not be fetched; never expanded
    bool unusable = false;  // constraint selection found no defeating subset
    EntityNode* parent = nullptr;
    std::vector<std::unique_ptr<EntityNode>> children;
};

/// Owning tree handle with pre-order traversal helpers.
struct EntityTree {
    std::unique_ptr<EntityNode> root;

    std::vector<EntityNode*> nodes() const {
        std::vector<EntityNode*> out;
        if (!root) return out;
        std::vector<EntityNode*> stack{root.get()};
        while (!stack.empty()) {
            EntityNode* n = stack.back();
            stack.pop_back();
            out.push_back(n);
            for (auto it = n->children.rbegin(); it != n->children.rend(); ++it)
                stack.push_back(it->get());
        }
        return out;
    }

    std::size_t size() const { return nodes().size(); }
};

struct QaItem {
    std::string question;
    std::string answer;
    std::string root_attribute;
    std::vector<std::pair<std::string, std::string>> entities;  // (name, url), pre-order
    std::size_t subtree_size = 0;
};

struct ToolCallStats {
    double mean = 0.0;
    double median = 0.0;
    std::map<int, std::size_t> histogram;  // bucket start (width 5) -> count
};

/// Extracts candidate facts from a page: sentences mentioning the entity name
/// first, then the remaining sentences in document order, capped at n. Every
/// fact is a verbatim sentence of the extracted page text.
using FactExtractor =
    std::function<std::vector<std::string>(const ExtractedPage&, const std::string&, int)>;

inline std::vector<std::string> default_fact_extractor(const ExtractedPage& page,
                                                       const std::string& name, int n) {
    auto sentences = split_sentences(page.text);
    std::vector<std::string> facts;
    std::vector<std::string> rest;
    for (const auto& s : sentences) {
        if (!name.empty() && s.find(name) != std::string::npos)
            facts.push_back(s);
        else
            rest.push_back(s);
    }
    for (const auto& s : rest) facts.push_back(s);
    if (facts.size() > static_cast<std::size_t>(n)) facts.resize(static_cast<std::size_t>(n));
    return facts;
}

/// Fetches the entity's page and extracts its facts. A failed crawl yields a
/// barren node (no facts) that callers must not expand.
inline EntityNode build_node(const std::string& name, const std::string& url,
                             CrawlerClient& crawler, const FactExtractor& fact_extractor,
                             const TreeConfig& theta) {
    theta.validate();
    EntityNode node;
    node.name = name;
    node.url = url;
    auto fetched = crawler.fetch(url);
    if (!fetched.ok()) {
        node.barren = true;
        return node;
    }
    auto page = extract_main_text(fetched.value());
    node.facts = fact_extractor(page, name, theta.facts_per_node);
    if (node.facts.empty()) node.barren = true;
    return node;
}

/// Maps an entity name to its page URL, if known. Names that do not resolve
/// become barren leaves when built.
using UrlResolver = std::function<std::optional<std::string>(const std::string&)>;

/// Recognizes child entities across the node's facts (deduplicated by name,
/// excluding the node itself) and samples at most `branching` of them without
/// replacement. Nodes are shallow: name and URL only.
inline std::vector<EntityNode> expand_children(const EntityNode& node, NerClient& ner,
                                               const TreeConfig& theta, std::mt19937_64& rng,
                                               const UrlResolver& resolve) {
    std::vector<std::string> mentions;
    std::set<std::string> seen{node.name};
    for (const auto& fact : node.facts) {
        auto found = ner.ner(fact);
        if (!found.ok()) continue;
        for (const auto& name : found.value()) {
            if (seen.insert(name).second) mentions.push_back(name);
        }
    }
    std::vector<std::string> chosen;
    std::sample(mentions.begin(), mentions.end(), std::back_inserter(chosen),
                static_cast<std::size_t>(theta.branching), rng);
    std::vector<EntityNode> out;
    out.reserve(chosen.size());
    for (const auto& name : chosen) {
        EntityNode child;
        child.name = name;
        if (auto url = resolve(name)) child.url = *url;
        out.push_back(std::move(child));
    }
    return out;
}

/// Builds the full entity tree from one seed, breadth-first to max_depth.
/// Children whose page cannot be fetched stay as barren leaves. A barren
/// root is an error: there is nothing to synthesize from.
inline EntityTree build_tree(const std::string& seed_name, const std::string& seed_url,
                             const TreeConfig& theta, CrawlerClient& crawler, NerClient& ner,
                             const UrlResolver& resolve,
                             const FactExtractor& fact_extractor = default_fact_extractor) {
    theta.validate();
    EntityTree tree;
    tree.root = std::make_unique<EntityNode>(
        build_node(seed_name, seed_url, crawler, fact_extractor, theta));
    if (tree.root->barren)
        throw std::runtime_error("build_tree: seed page unavailable or empty: " + seed_url);

    std::mt19937_64 rng(theta.rng_seed);
    std::vector<std::pair<EntityNode*, int>> frontier{{tree.root.get(), 1}};
    while (!frontier.empty()) {
        auto [node, depth] = frontier.front();
        frontier.erase(frontier.begin());
        if (depth >= theta.max_depth || node->barren) continue;
        for (auto& shell : expand_children(*node, ner, theta, rng, resolve)) {
            bool unresolved = shell.url.empty();
            EntityNode built = unresolved
                                   ? std::move(shell)
                                   : build_node(shell.name, shell.url, crawler, fact_extractor,
                                                theta);
            if (unresolved) built.barren = true;
            auto child = std::make_unique<EntityNode>(std::move(built));
            child->parent = node;
            node->children.push_back(std::move(child));
            frontier.push_back({node->children.back().get(), depth + 1});
        }
    }
    return tree;
}

/// Replaces every detected entity mention with its category descriptor, so
/// the fact no longer names anyone directly. Longer mentions are replaced
/// first so "Arlington County" never half-survives as "County".
inline std::string fuzz_entity(const std::string& fact, const std::vector<std::string>& mentions,
                               const std::map<std::string, std::string>& descriptors) {
    std::vector<std::string> ordered = mentions;
    std::sort(ordered.begin(), ordered.end(), [](const std::string& a, const std::string& b) {
        if (a.size() != b.size()) return a.size() > b.size();
        return a < b;
    });
    // When the text already supplies an article ("the Foo company"), drop
    // the descriptor's own leading article instead of doubling it.
    auto preceded_by_article = [](const std::string& text, std::size_t pos) {
        static const std::vector<std::string> articles = {"a ", "an ", "the ",
                                                          "A ", "An ", "The "};
        for (const auto& art : articles) {
            if (pos >= art.size() && text.compare(pos - art.size(), art.size(), art) == 0)
                return true;
        }
        return false;
    };
    auto without_article = [](const std::string& s) {
        for (const char* art : {"a ", "an ", "the "}) {
            std::size_t n = std::char_traits<char>::length(art);
            if (s.size() > n && s.compare(0, n, art) == 0) return s.substr(n);
        }
        return s;
    };

    std::string out = fact;
    for (const auto& mention : ordered) {
        if (mention.empty()) continue;
        auto it = descriptors.find(mention);
        std::string replacement = it != descriptors.end() ? it->second : "a related entity";
        std::size_t pos = 0;
        while ((pos = out.find(mention, pos)) != std::string::npos) {
            std::string r = preceded_by_article(out, pos) ? without_article(replacement)
                                                          : replacement;
            out.replace(pos, mention.size(), r);
            pos += r.size();
        }
    }
    return out;
}

namespace detail {

inline bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }
inline bool alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace detail

/// Vagues out standalone numbers: four-digit tokens read as years and become
/// decade phrases (final digit 0-3 early, 4-6 mid, 7-9 late); other integers
/// round to the nearest multiple of ten as "around N". Digits embedded in
/// words (including the produced "1990s") are left alone, and numbers already
/// prefixed with "around" keep a single prefix, so the operation is
/// idempotent.
inline std::string fuzz_static(const std::string& fact) {
    std::string out;
    out.reserve(fact.size());
    std::size_t i = 0;
    while (i < fact.size()) {
        if (!detail::digit(fact[i]) || (i > 0 && detail::alnum(fact[i - 1]))) {
            out.push_back(fact[i]);
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < fact.size() && detail::digit(fact[j])) ++j;
        bool standalone = j >= fact.size() || !detail::alnum(fact[j]);
        std::string token = fact.substr(i, j - i);
        if (!standalone || token.size() > 18) {  // length guard: keep non-numeric-range digits
            out += token;
        } else if (token.size() == 4) {
            long year = std::stol(token);
            long decade = (year / 10) * 10;
            long last = year % 10;
            const char* part = last <= 3 ? "early" : (last <= 6 ? "mid" : "late");
            out += std::string(part) + " " + std::to_string(decade) + "s";
        } else {
            long value = std::stol(token);
            long rounded = ((value + 5) / 10) * 10;
            // An "around " already in front means the number was vagued by an
            // earlier pass; reprefixing would stack up on repeated runs.
            static constexpr std::string_view kMarker = "around ";
            bool already_vague = out.size() >= kMarker.size() &&
                                 out.compare(out.size() - kMarker.size(), kMarker.size(),
                                             kMarker) == 0;
            out += already_vague ? std::to_string(rounded)
                                 : "around " + std::to_string(rounded);
        }
        i = j;
    }
    return out;
}

/// Three-stage fuzzification per fact: entity descriptors first, then the
/// static number rules, then the rephraser's semantic pass. Rephraser errors
/// fall back to the statically fuzzed text.
inline std::vector<std::string> fuzzify(const std::vector<std::string>& facts, NerClient& ner,
                                        RephraseClient& rephraser,
                                        const std::map<std::string, std::string>& descriptors) {
    std::vector<std::string> out;
    out.reserve(facts.size());
    for (const auto& fact : facts) {
        auto mentions = ner.ner(fact);
        std::string fuzzed =
            fuzz_entity(fact, mentions.ok() ? mentions.value() : std::vector<std::string>{},
                        descriptors);
        fuzzed = fuzz_static(fuzzed);
        auto rephrased = rephraser.rephrase(fuzzed);
        out.push_back(rephrased.ok() ? rephrased.value() : fuzzed);
    }
    return out;
}

/// Estimated size of the candidate entity space consistent with a constraint
/// set. Smaller is more restrictive.
using GtSpaceEstimator = std::function<std::size_t(const std::vector<std::string>&)>;

/// Returns true when a budget-limited shallow search agent can still name the
/// target entity given only the constraints. Selection stops once it cannot.
using ShallowAgent = std::function<bool(const std::vector<std::string>&, const std::string&)>;

struct ConstraintSelection {
    std::vector<std::string> constraints;
    bool feasible = false;
    std::size_t oracle_calls = 0;
};

/// Greedy forward selection over the node's fuzzed facts: repeatedly add the
/// fact that shrinks the estimated candidate space the most, stopping as soon
/// as the shallow agent fails to identify the entity. Runs out of facts or
/// oracle budget without defeating the agent -> infeasible, node unusable.
inline ConstraintSelection select_constraints(const EntityNode& node,
                                              const GtSpaceEstimator& gt_space,
                                              const ShallowAgent& shallow_agent,
                                              std::size_t budget) {
    if (node.fuzzed_facts.empty())
        throw std::invalid_argument("select_constraints: node has no fuzzed facts");

    ConstraintSelection sel;
    std::vector<bool> used(node.fuzzed_facts.size(), false);
    while (sel.constraints.size() < node.fuzzed_facts.size()) {
        std::size_t best_idx = node.fuzzed_facts.size();
        std::size_t best_size = std::numeric_limits<std::size_t>::max();
        for (std::size_t i = 0; i < node.fuzzed_facts.size(); ++i) {
            if (used[i]) continue;
            auto trial = sel.constraints;
            trial.push_back(node.fuzzed_facts[i]);
            std::size_t estimated = gt_space(trial);
            if (estimated < best_size) {
                best_size = estimated;
                best_idx = i;
            }
        }
        used[best_idx] = true;
        sel.constraints.push_back(node.fuzzed_facts[best_idx]);

        if (sel.oracle_calls >= budget) return sel;  // budget exhausted, infeasible
        ++sel.oracle_calls;
        if (!shallow_agent(sel.constraints, node.name)) {
            sel.feasible = true;
            return sel;
        }
    }
    return sel;  // every fact used and the agent still finds it
}

/// Budgeted random subtree sampling: draw a uniform node, take its whole
/// root path if the uncovered part fits the remaining budget, repeat until
/// the budget is spent. The result is always a root-anchored connected
/// subtree of at most min(k, |V|) nodes.
inline EntityTree extract_subtree(const EntityTree& tree, std::size_t k, std::mt19937_64& rng) {
    if (k < 1) throw std::invalid_argument("extract_subtree: k must be >= 1");
    if (!tree.root) throw std::invalid_argument("extract_subtree: empty tree");

    auto all = tree.nodes();
    std::size_t budget = std::min(k, all.size());
    std::set<const EntityNode*> selected;
    std::uniform_int_distribution<std::size_t> pick(0, all.size() - 1);
    while (budget > 0) {
        const EntityNode* v = all[pick(rng)];
        std::vector<const EntityNode*> path;
        for (const EntityNode* n = v; n != nullptr; n = n->parent) path.push_back(n);
        std::size_t cost = 0;
        for (const EntityNode* n : path)
            if (!selected.count(n)) ++cost;
        if (cost == 0 || cost > budget) continue;
        for (const EntityNode* n : path) selected.insert(n);
        budget -= cost;
    }

    std::function<std::unique_ptr<EntityNode>(const EntityNode&, EntityNode*)> clone =
        [&](const EntityNode& src, EntityNode* parent) {
            auto copy = std::make_unique<EntityNode>();
            copy->name = src.name;
            copy->url = src.url;
            copy->facts = src.facts;
            copy->fuzzed_facts = src.fuzzed_facts;
            copy->constraints = src.constraints;
            copy->barren = src.barren;
            copy->unusable = src.unusable;
            copy->parent = parent;
            for (const auto& child : src.children) {
                if (selected.count(child.get()))
                    copy->children.push_back(clone(*child, copy.get()));
            }
            return copy;
        };
    EntityTree out;
    out.root = clone(*tree.root, nullptr);
    return out;
}

/// Looks up the value of a named attribute of an entity (the answer side of
/// a generated question).
using AttributeLookup =
    std::function<std::optional<std::string>(const std::string& entity, const std::string& attribute)>;

/// Composes the question from every subtree node's constraints and records
/// the full provenance entity list for the recall bonus.
inline QaItem generate_question(const EntityTree& subtree, const std::string& attribute,
                                QuestionGenClient& generator, const AttributeLookup& attr_value) {
    if (!subtree.root) throw std::invalid_argument("generate_question: empty subtree");
    auto value = attr_value(subtree.root->name, attribute);
    if (!value)
        throw std::invalid_argument("generate_question: root entity lacks attribute " + attribute);

    QaItem item;
    item.root_attribute = attribute;
    item.answer = *value;

    std::vector<std::string> constraints;
    for (const EntityNode* n : subtree.nodes()) {
        item.entities.emplace_back(n->name, n->url);
        for (const auto& c : n->constraints) constraints.push_back(c);
    }
    item.subtree_size = item.entities.size();

    auto question =
        generator.generate_question(constraints, "the " + attribute + " of the entity");
    if (!question.ok())
        throw std::runtime_error("generate_question: generator failed: " +
                                 to_string(question.error()));
    item.question = question.value();
    return item;
}

/// Drops items the solver cannot crack in any of `rounds` attempts; such
/// questions are likely unanswerable rather than hard.
inline std::vector<QaItem> difficulty_filter(const std::vector<QaItem>& items,
                                             SolverClient& solver, int rounds) {
    if (rounds < 1) throw std::invalid_argument("difficulty_filter: rounds must be >= 1");
    std::vector<QaItem> kept;
    for (const auto& item : items) {
        for (int round = 1; round <= rounds; ++round) {
            auto outcome = solver.solve(item.question, round);
            if (outcome.ok() && outcome.value().solved) {
                kept.push_back(item);
                break;
            }
        }
    }
    return kept;
}

/// Mean, lower-median, and width-5 histogram of per-trajectory tool-call
/// counts.
inline ToolCallStats toolcall_stats(const std::vector<int>& counts) {
    if (counts.empty()) throw std::invalid_argument("toolcall_stats: empty input");
    ToolCallStats s;
    double sum = 0.0;
    for (int c : counts) sum += c;
    s.mean = sum / static_cast<double>(counts.size());
    std::vector<int> sorted = counts;
    std::sort(sorted.begin(), sorted.end());
    s.median = sorted[(sorted.size() - 1) / 2];
    for (int c : counts) {
        int bucket = (c / 5) * 5;
        ++s.histogram[bucket];
    }
    return s;
}

inline nlohmann::json qa_item_to_json(const QaItem& item) {
    nlohmann::json entities = nlohmann::json::array();
    for (const auto& [name, url] : item.entities)
        entities.push_back({{"name", name}, {"url", url}});
    return {{"question", item.question},
            {"answer", item.answer},
            {"root_attribute", item.root_attribute},
            {"entities", entities},
            {"subtree_size", item.subtree_size}};
}

inline QaItem qa_item_from_json(const nlohmann::json& j) {
    QaItem item;
    item.question = j.at("question").get<std::string>();
    item.answer = j.at("answer").get<std::string>();
    item.root_attribute = j.at("root_attribute").get<std::string>();
    for (const auto& e : j.at("entities"))
        item.entities.emplace_back(e.at("name").get<std::string>(),
                                   e.at("url").get<std::string>());
    item.subtree_size = j.at("subtree_size").get<std::size_t>();
    return item;
}

inline void write_qa_items(const std::string& path, const std::vector<QaItem>& items) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& item : items) out << qa_item_to_json(item).dump() << "\n";
}

inline std::vector<QaItem> read_qa_items(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<QaItem> items;
    std::string line;
    while (std::getline(in, line)) {
        if (normalize_whitespace(line).empty()) continue;
        items.push_back(qa_item_from_json(nlohmann::json::parse(line)));
    }
    return items;
}

/// Backfills the reasoning for an assistant turn that jumps straight into a
/// tool call, as needed when assembling supervised trajectories. Emits at
/// most five sentences and names the upcoming tool.
inline std::string generate_reasoning_stub(const std::vector<Message>& history,
                                           std::uint64_t seed = 0) {
    const Message* target = nullptr;
    std::string tool_name;
    for (const auto& m : history) {
        if (m.role != Role::assistant) continue;
        auto parsed = parse_tool_calls(m.content);
        if (parsed.calls.empty()) continue;
        std::string before = m.content.substr(0, m.content.find("<tool_call>"));
        if (normalize_whitespace(before).empty()) {
            target = &m;
            tool_name = parsed.calls.front().name;
            break;
        }
    }
    if (!target)
        throw std::invalid_argument(
            "generate_reasoning_stub: no tool-call turn with an empty reasoning slot");

    std::vector<std::string> pool = {
        "The information gathered so far does not settle the question.",
        "One detail still needs independent confirmation before answering.",
        "The most promising lead points to a source not yet consulted.",
        "Narrowing the candidate set requires one more lookup.",
    };
    std::mt19937_64 rng(seed);
    std::size_t extra = 1 + rng() % 3;  // 2 to 4 sentences total, under the 5-sentence cap
    std::string out;
    for (std::size_t i = 0; i < extra; ++i) {
        if (!out.empty()) out.push_back(' ');
        out += pool[rng() % pool.size()];
    }
    if (!out.empty()) out.push_back(' ');
    out += "A " + tool_name + " call should resolve this.";
    return out;
}

}  // namespace forge
