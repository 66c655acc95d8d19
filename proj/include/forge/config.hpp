#pragma once

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "forge/synth.hpp"
#include "forge/toolserver.hpp"

namespace forge {

/// Key=value text config: one `key = value` pair per line, `#` starts a
/// comment, blank lines ignored. Unknown keys are rejected by the typed
/// loaders below so typos fail loudly.
inline std::map<std::string, std::string> parse_config_text(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::string trimmed = normalize_whitespace(line);
        if (trimmed.empty()) continue;
        auto eq = trimmed.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        std::string key = normalize_whitespace(trimmed.substr(0, eq));
        std::string value = normalize_whitespace(trimmed.substr(eq + 1));
        if (key.empty())
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        out[key] = value;
    }
    return out;
}

inline std::map<std::string, std::string> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config file " + path);
    return parse_config_text(in);
}

namespace detail {

inline std::size_t to_size(const std::string& key, const std::string& value) {
    try {
        long long v = std::stoll(value);
        if (v < 0) throw std::invalid_argument("negative");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key " + key + ": expected a non-negative integer, got \"" +
                                    value + "\"");
    }
}

inline double to_real(const std::string& key, const std::string& value) {
    try {
        return std::stod(value);
    } catch (const std::exception&) {
        throw std::invalid_argument("config key " + key + ": expected a number, got \"" + value +
                                    "\"");
    }
}

inline std::vector<std::string> to_list(const std::string& value) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(value);
    while (std::getline(in, item, ',')) {
        std::string trimmed = normalize_whitespace(item);
        if (!trimmed.empty()) out.push_back(trimmed);
    }
    return out;
}

}  // namespace detail

/// Loads a ToolServerConfig from parsed key=value pairs. Recognized keys:
///   region_lang, engine_priority (comma-separated), fast_lane_capacity,
///   fast_lane_target_share, results_n, search_timeout_seconds,
///   pipeline.{chunk_tokens,k_q,k_s,embed_top,rerank_top,snippet_max_words},
///   browse.{chunk_tokens,k_q,embed_top,rerank_top}
inline ToolServerConfig tool_server_config_from_map(
    const std::map<std::string, std::string>& kv) {
    ToolServerConfig cfg;
    for (const auto& [key, value] : kv) {
        if (key == "region_lang") cfg.region_lang = value;
        else if (key == "engine_priority") cfg.engine_priority = detail::to_list(value);
        else if (key == "fast_lane_capacity") cfg.fast_lane_capacity = detail::to_real(key, value);
        else if (key == "fast_lane_target_share")
            cfg.fast_lane_target_share = detail::to_real(key, value);
        else if (key == "results_n") cfg.results_n = detail::to_size(key, value);
        else if (key == "search_timeout_seconds")
            cfg.search_timeout_seconds = detail::to_real(key, value);
        else if (key == "pipeline.chunk_tokens")
            cfg.pipeline.chunk_tokens = detail::to_size(key, value);
        else if (key == "pipeline.k_q") cfg.pipeline.k_q = detail::to_size(key, value);
        else if (key == "pipeline.k_s") cfg.pipeline.k_s = detail::to_size(key, value);
        else if (key == "pipeline.embed_top") cfg.pipeline.embed_top = detail::to_size(key, value);
        else if (key == "pipeline.rerank_top")
            cfg.pipeline.rerank_top = detail::to_size(key, value);
        else if (key == "pipeline.snippet_max_words")
            cfg.pipeline.snippet_max_words = detail::to_size(key, value);
        else if (key == "browse.chunk_tokens")
            cfg.browse.chunk_tokens = detail::to_size(key, value);
        else if (key == "browse.k_q") cfg.browse.k_q = detail::to_size(key, value);
        else if (key == "browse.embed_top") cfg.browse.embed_top = detail::to_size(key, value);
        else if (key == "browse.rerank_top")
            cfg.browse.rerank_top = detail::to_size(key, value);
        else
            throw std::invalid_argument("unknown tool server config key: " + key);
    }
    cfg.pipeline.results_n = cfg.results_n;
    return cfg;
}

inline ToolServerConfig tool_server_config_from_file(const std::string& path) {
    return tool_server_config_from_map(parse_config_file(path));
}

/// Question-synthesis job settings beyond the tree shape itself.
struct SynthJobConfig {
    TreeConfig tree;
    std::size_t subtree_budget = 4;
    std::string attribute = "birth_year";
    int solver_rounds = 3;
    std::size_t oracle_budget = 16;
};

/// Recognized keys: max_depth, branching, facts_per_node, rng_seed,
/// subtree_budget, attribute, solver_rounds, oracle_budget.
inline SynthJobConfig synth_config_from_map(const std::map<std::string, std::string>& kv) {
    SynthJobConfig cfg;
    for (const auto& [key, value] : kv) {
        if (key == "max_depth") cfg.tree.max_depth = static_cast<int>(detail::to_size(key, value));
        else if (key == "branching")
            cfg.tree.branching = static_cast<int>(detail::to_size(key, value));
        else if (key == "facts_per_node")
            cfg.tree.facts_per_node = static_cast<int>(detail::to_size(key, value));
        else if (key == "rng_seed") cfg.tree.rng_seed = detail::to_size(key, value);
        else if (key == "subtree_budget") cfg.subtree_budget = detail::to_size(key, value);
        else if (key == "attribute") cfg.attribute = value;
        else if (key == "solver_rounds")
            cfg.solver_rounds = static_cast<int>(detail::to_size(key, value));
        else if (key == "oracle_budget") cfg.oracle_budget = detail::to_size(key, value);
        else
            throw std::invalid_argument("unknown synth config key: " + key);
    }
    cfg.tree.validate();
    return cfg;
}

inline SynthJobConfig synth_config_from_file(const std::string& path) {
    return synth_config_from_map(parse_config_file(path));
}

/// Reads one of the FORGE_*_URL service overrides from the environment.
inline std::optional<std::string> env_service_url(const char* name) {
    const char* value = std::getenv(name);
    if (value == nullptr || *value == '\0') return std::nullopt;
    return std::string(value);
}

}  // namespace forge
