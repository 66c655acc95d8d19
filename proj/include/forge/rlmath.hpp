#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/agentloop.hpp"
#include "forge/gateway.hpp"

namespace forge {

enum class RecallMethod { name_em, url_em, judge_score };

inline std::string to_string(RecallMethod m) {
    switch (m) {
        case RecallMethod::name_em: return "name_em";
        case RecallMethod::url_em: return "url_em";
        case RecallMethod::judge_score: return "judge_score";
    }
    return "unknown";
}

inline RecallMethod recall_method_from_string(std::string_view s) {
    if (s == "name_em") return RecallMethod::name_em;
    if (s == "url_em") return RecallMethod::url_em;
    if (s == "judge_score") return RecallMethod::judge_score;
    throw std::invalid_argument("unknown recall method: " + std::string(s));
}

struct RewardConfig {
    double lambda = 0.5;  // sweep values: 0, 0.5, 0.9
    RecallMethod recall_method = RecallMethod::judge_score;
};

struct ClipConfig {
    double epsilon = 0.2;
    double beta = 0.0;  // KL weight; zero disables the penalty term
};

struct GroupRollout {
    std::string question;
    std::vector<Trajectory> trajectories;
    std::vector<double> rewards;
    std::vector<double> advantages;
};

struct CorrectnessResult {
    int reward = 0;           // 1 iff the judge marked the answer correct
    bool judge_failed = false;  // audit flag: judge errored, reward forced to 0
};

/// Binary answer grade via the judge client. A failed judge call never
/// crashes grading; it yields reward 0 with the audit flag set.
inline CorrectnessResult correctness_reward(const std::string& question,
                                            const std::string& response,
                                            const std::string& ground_truth,
                                            JudgeClient& judge) {
    auto verdict = judge.judge(question, response, ground_truth);
    if (!verdict.ok()) return {0, true};
    return {verdict.value().correctness == JudgeVerdict::Correctness::correct ? 1 : 0, false};
}

namespace detail {

inline std::string lower_copy(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

/// Pulls the retrieved texts out of a tool message: snippet strings and
/// browse documents when the content parses as wire JSON, the raw content
/// otherwise.
inline std::vector<std::string> retrieved_texts(const std::string& tool_content) {
    auto j = nlohmann::json::parse(tool_content, nullptr, false);
    std::vector<std::string> out;
    if (j.is_array()) {
        for (const auto& item : j) {
            if (item.is_object() && item.contains("snippets") && item["snippets"].is_string())
                out.push_back(item["snippets"].get<std::string>());
        }
    } else if (j.is_object() && j.contains("semanticDocument") &&
               j["semanticDocument"].is_string()) {
        out.push_back(j["semanticDocument"].get<std::string>());
    }
    if (out.empty()) out.push_back(tool_content);
    return out;
}

}  // namespace detail

/// Fraction of the question's provenance entities the trajectory actually
/// surfaced. name_em and url_em scan tool messages for case-insensitive
/// verbatim matches; judge_score asks the reranker how strongly the best
/// retrieved text matches each entity name and averages those scores.
inline double recall_rate(const Trajectory& t,
                          const std::vector<std::pair<std::string, std::string>>& entities,
                          RecallMethod method, RerankClient* reranker = nullptr) {
    if (entities.empty()) throw std::invalid_argument("recall_rate: entities must be non-empty");

    std::vector<std::string> tool_contents;
    for (const auto& m : t.messages)
        if (m.role == Role::tool) tool_contents.push_back(m.content);

    if (method == RecallMethod::name_em || method == RecallMethod::url_em) {
        std::string haystack;
        for (const auto& c : tool_contents) {
            haystack += detail::lower_copy(c);
            haystack.push_back('\n');
        }
        std::size_t found = 0;
        for (const auto& [name, url] : entities) {
            const std::string& target = method == RecallMethod::name_em ? name : url;
            if (!target.empty() &&
                haystack.find(detail::lower_copy(target)) != std::string::npos)
                ++found;
        }
        return static_cast<double>(found) / static_cast<double>(entities.size());
    }

    if (!reranker)
        throw std::invalid_argument("recall_rate: judge_score requires a reranker client");
    std::vector<std::string> texts;
    for (const auto& c : tool_contents)
        for (auto& text : detail::retrieved_texts(c)) texts.push_back(std::move(text));
    if (texts.empty()) return 0.0;

    double total = 0.0;
    for (const auto& [name, url] : entities) {
        auto scores = reranker->rerank(name, texts);
        double best = 0.0;
        if (scores.ok())
            for (double s : scores.value()) best = std::max(best, s);
        total += std::clamp(best, 0.0, 1.0);
    }
    return total / static_cast<double>(entities.size());
}

/// Reward with the recall bonus folded in: correct trajectories always score
/// exactly 1; failed ones earn lambda times their recall, capped at 1.
inline double combined_reward(int r_corr, double r_recall, double lambda) {
    if (r_corr != 0 && r_corr != 1)
        throw std::invalid_argument("combined_reward: correctness must be 0 or 1");
    if (r_recall < 0.0 || r_recall > 1.0)
        throw std::invalid_argument("combined_reward: recall out of [0,1]");
    if (lambda < 0.0 || lambda > 1.0)
        throw std::invalid_argument("combined_reward: lambda out of [0,1]");
    if (r_corr == 1) return 1.0;
    return std::min(lambda * r_recall, 1.0);
}

/// Group-relative advantages: rewards standardized by the group mean and
/// population standard deviation. Degenerate (constant-reward) groups get
/// all-zero advantages instead of dividing by ~0.
inline std::vector<double> group_advantages(const std::vector<double>& rewards) {
    if (rewards.size() < 2)
        throw std::invalid_argument("group_advantages: need at least 2 rewards");
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= static_cast<double>(rewards.size());
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= static_cast<double>(rewards.size());
    double std_dev = std::sqrt(var);
    std::vector<double> out(rewards.size(), 0.0);
    if (std_dev < 1e-12) return out;
    for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = (rewards[i] - mean) / std_dev;
    return out;
}

/// Per-token clipped surrogate: min(R*A, clip(R, 1-eps, 1+eps)*A) minus the
/// optional KL penalty. R is the importance ratio exp(logp_new - logp_old).
inline double grpo_token_term(double logp_new, double logp_old, double advantage,
                              const ClipConfig& cfg, double kl_term = 0.0) {
    if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("ClipConfig: epsilon must be > 0");
    if (cfg.beta < 0.0) throw std::invalid_argument("ClipConfig: beta must be >= 0");
    if (!std::isfinite(logp_new) || !std::isfinite(logp_old) || !std::isfinite(advantage))
        throw std::invalid_argument("grpo_token_term: inputs must be finite");
    double ratio = std::exp(logp_new - logp_old);
    double clipped = std::clamp(ratio, 1.0 - cfg.epsilon, 1.0 + cfg.epsilon);
    double term = std::min(ratio * advantage, clipped * advantage);
    if (cfg.beta > 0.0) term -= cfg.beta * kl_term;
    return term;
}

/// Keeps items whose empirical pass rate over k attempts lies inside the
/// inclusive [lo, hi] difficulty band.
template <typename T>
std::vector<T> pass_rate_filter(const std::vector<T>& items,
                                const std::vector<int>& pass_counts, int k = 4,
                                double lo = 0.25, double hi = 0.75) {
    if (items.size() != pass_counts.size())
        throw std::invalid_argument("pass_rate_filter: items and pass_counts sizes differ");
    if (k < 1) throw std::invalid_argument("pass_rate_filter: k must be >= 1");
    std::vector<T> kept;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (pass_counts[i] < 0 || pass_counts[i] > k)
            throw std::invalid_argument("pass_rate_filter: pass count out of [0,k]");
        double rate = static_cast<double>(pass_counts[i]) / static_cast<double>(k);
        if (rate >= lo && rate <= hi) kept.push_back(items[i]);
    }
    return kept;
}

}  // namespace forge
