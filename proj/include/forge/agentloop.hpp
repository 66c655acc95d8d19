#pragma once

#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/textseg.hpp"
#include "forge/toolserver.hpp"

namespace forge {

enum class Role { system, user, assistant, tool };

inline std::string to_string(Role r) {
    switch (r) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
        case Role::tool: return "tool";
    }
    return "unknown";
}

inline Role role_from_string(std::string_view s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    if (s == "tool") return Role::tool;
    throw std::invalid_argument("unknown role: " + std::string(s));
}

struct Message {
    Role role;
    std::string content;
};

struct ToolCall {
    std::string name;           // "search" or "browse"
    nlohmann::json arguments;   // {"query": ...} or {"url": ...}
};

/// A malformed tool-call block: the offending text and its span in the
/// original assistant message, so callers can report it precisely.
struct ToolCallIssue {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string block;
    std::string reason;
};

struct ParsedToolCalls {
    std::vector<ToolCall> calls;
    std::vector<ToolCallIssue> issues;
};

/// Extracts every <tool_call>...</tool_call> block. Well-formed bodies (a
/// JSON object with a string "name" and an object "arguments") become calls;
/// anything else becomes an issue rather than being silently dropped.
inline ParsedToolCalls parse_tool_calls(std::string_view text) {
    static constexpr std::string_view kOpen = "<tool_call>";
    static constexpr std::string_view kClose = "</tool_call>";
    ParsedToolCalls out;
    std::size_t pos = 0;
    while (true) {
        std::size_t open = text.find(kOpen, pos);
        if (open == std::string_view::npos) break;
        std::size_t body_begin = open + kOpen.size();
        std::size_t close = text.find(kClose, body_begin);
        if (close == std::string_view::npos) {
            out.issues.push_back({open, text.size(), std::string(text.substr(open)),
                                  "unterminated <tool_call> block"});
            break;
        }
        std::string body = normalize_whitespace(text.substr(body_begin, close - body_begin));
        std::size_t span_end = close + kClose.size();
        nlohmann::json parsed = nlohmann::json::parse(body, nullptr, false);
        if (parsed.is_discarded()) {
            out.issues.push_back({open, span_end, body, "tool call body is not valid JSON"});
        } else if (!parsed.is_object() || !parsed.contains("name") ||
                   !parsed["name"].is_string() || !parsed.contains("arguments") ||
                   !parsed["arguments"].is_object()) {
            out.issues.push_back(
                {open, span_end, body,
                 "tool call must be an object with a string \"name\" and an object "
                 "\"arguments\""});
        } else {
            out.calls.push_back({parsed["name"].get<std::string>(), parsed["arguments"]});
        }
        pos = span_end;
    }
    return out;
}

enum class Finish { answered, forced_answer, error };

inline std::string to_string(Finish f) {
    switch (f) {
        case Finish::answered: return "answered";
        case Finish::forced_answer: return "forced_answer";
        case Finish::error: return "error";
    }
    return "unknown";
}

inline Finish finish_from_string(std::string_view s) {
    if (s == "answered") return Finish::answered;
    if (s == "forced_answer") return Finish::forced_answer;
    if (s == "error") return Finish::error;
    throw std::invalid_argument("unknown finish: " + std::string(s));
}

struct Trajectory {
    std::string question;
    std::vector<Message> messages;
    std::size_t tool_call_count = 0;
    std::size_t token_count = 0;
    Finish finish = Finish::answered;
    std::string final_answer;
};

struct AgentConfig {
    std::size_t max_context_tokens = 16384;
    std::size_t results_n = 5;
    std::string system_prompt;  // empty = no system message
    std::string forcing_text =
        "You have reached the context limit. Output your final answer now.";
};

/// Produces the next assistant turn given the conversation so far.
class PolicyClient {
  public:
    virtual ~PolicyClient() = default;
    virtual std::string next_message(const std::vector<Message>& history) = 0;
};

/// Replays a fixed list of assistant turns; once exhausted it emits a
/// terminal no-tool answer so episodes always end.
class ScriptedPolicy : public PolicyClient {
  public:
    explicit ScriptedPolicy(std::vector<std::string> turns,
                            std::string exhausted_answer = "I do not know.")
        : turns_(std::move(turns)), exhausted_answer_(std::move(exhausted_answer)) {}

    std::string next_message(const std::vector<Message>&) override {
        if (cursor_ < turns_.size()) return turns_[cursor_++];
        return exhausted_answer_;
    }

    std::size_t turns_consumed() const { return cursor_; }

  private:
    std::vector<std::string> turns_;
    std::string exhausted_answer_;
    std::size_t cursor_ = 0;
};

/// The tool side of an episode, either in-process or over HTTP.
class ToolTransport {
  public:
    virtual ~ToolTransport() = default;
    virtual Result<std::vector<SnippetResult>> search(
        const std::string& query, const std::optional<std::string>& region) = 0;
    virtual Result<BrowseResult> browse(const std::string& url) = 0;
};

class LocalToolTransport : public ToolTransport {
  public:
    explicit LocalToolTransport(std::shared_ptr<ToolService> service)
        : service_(std::move(service)) {}

    Result<std::vector<SnippetResult>> search(
        const std::string& query, const std::optional<std::string>& region) override {
        return service_->handle_search({query, region});
    }

    Result<BrowseResult> browse(const std::string& url) override {
        return service_->handle_browse({url});
    }

    ToolService& service() { return *service_; }

  private:
    std::shared_ptr<ToolService> service_;
};

/// Content following the last </think> tag, or the whole text when there is
/// no reasoning block. Used to lift final answers out of assistant turns.
inline std::string strip_reasoning(std::string_view text) {
    static constexpr std::string_view kClose = "</think>";
    std::string out(text);
    auto pos = out.rfind(kClose);
    if (pos != std::string::npos) out = out.substr(pos + kClose.size());
    return normalize_whitespace(out);
}

inline std::size_t transcript_tokens(const std::vector<Message>& messages,
                                     const TokenCounter& counter = word_counter()) {
    std::size_t total = 0;
    for (const auto& m : messages) total += counter.count(m.content);
    return total;
}

/// Executes one tool call and renders the wire JSON (or the error text) that
/// becomes the tool message.
inline std::string execute_tool_call(const ToolCall& call, ToolTransport& tools) {
    if (call.name == "search") {
        if (!call.arguments.contains("query") || !call.arguments["query"].is_string())
            return R"({"error": "search arguments must include a string \"query\""})";
        std::optional<std::string> region;
        if (call.arguments.contains("region_lang") && call.arguments["region_lang"].is_string())
            region = call.arguments["region_lang"].get<std::string>();
        auto res = tools.search(call.arguments["query"].get<std::string>(), region);
        if (!res.ok())
            return nlohmann::json{{"error", to_string(res.error())}}.dump();
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& r : res.value()) arr.push_back(wire::snippet_result_to_json(r));
        return arr.dump();
    }
    if (call.name == "browse") {
        if (!call.arguments.contains("url") || !call.arguments["url"].is_string())
            return R"({"error": "browse arguments must include a string \"url\""})";
        auto res = tools.browse(call.arguments["url"].get<std::string>());
        if (!res.ok())
            return nlohmann::json{{"error", to_string(res.error())}}.dump();
        return wire::browse_result_to_json(res.value()).dump();
    }
    return nlohmann::json{{"error", "unknown tool: " + call.name}}.dump();
}

/// Runs one ReAct episode: the policy emits turns, tool calls are executed
/// into tool messages, and the loop ends on a no-tool answer or, once the
/// context budget trips, on a single forcing turn whose reply is taken as the
/// final answer.
inline Trajectory run_episode(const std::string& question, PolicyClient& policy,
                              ToolTransport& tools, const AgentConfig& cfg = {}) {
    if (cfg.max_context_tokens < 1024)
        throw std::invalid_argument("AgentConfig: max_context_tokens must be >= 1024");

    Trajectory t;
    t.question = question;
    if (!cfg.system_prompt.empty()) t.messages.push_back({Role::system, cfg.system_prompt});
    t.messages.push_back({Role::user, question});

    try {
        while (true) {
            if (transcript_tokens(t.messages) > cfg.max_context_tokens) {
                t.messages.push_back({Role::user, cfg.forcing_text});
                std::string final_turn = policy.next_message(t.messages);
                t.messages.push_back({Role::assistant, final_turn});
                t.final_answer = strip_reasoning(final_turn);
                t.finish = Finish::forced_answer;
                break;
            }

            std::string turn = policy.next_message(t.messages);
            t.messages.push_back({Role::assistant, turn});

            auto parsed = parse_tool_calls(turn);
            if (parsed.calls.empty() && parsed.issues.empty()) {
                t.final_answer = strip_reasoning(turn);
                t.finish = Finish::answered;
                break;
            }
            for (const auto& call : parsed.calls) {
                t.messages.push_back({Role::tool, execute_tool_call(call, tools)});
                ++t.tool_call_count;
            }
            for (const auto& issue : parsed.issues) {
                t.messages.push_back(
                    {Role::tool,
                     nlohmann::json{{"error", "malformed tool call: " + issue.reason},
                                    {"block", issue.block}}
                         .dump()});
            }
        }
    } catch (const std::exception& e) {
        t.messages.push_back({Role::tool, std::string("episode aborted: ") + e.what()});
        t.finish = Finish::error;
        t.final_answer.clear();
    }

    t.token_count = transcript_tokens(t.messages);
    return t;
}

/// Search and browse calls summed, recomputed from the transcript so it works
/// on trajectories loaded from disk as well as freshly recorded ones.
inline std::size_t count_tool_calls(const Trajectory& t) {
    std::size_t n = 0;
    for (const auto& m : t.messages) {
        if (m.role == Role::assistant) n += parse_tool_calls(m.content).calls.size();
    }
    return n;
}

inline nlohmann::json trajectory_to_json(const Trajectory& t) {
    nlohmann::json msgs = nlohmann::json::array();
    for (const auto& m : t.messages)
        msgs.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    return {{"question", t.question},
            {"messages", msgs},
            {"tool_call_count", t.tool_call_count},
            {"token_count", t.token_count},
            {"finish", to_string(t.finish)},
            {"final_answer", t.final_answer}};
}

inline Trajectory trajectory_from_json(const nlohmann::json& j) {
    Trajectory t;
    t.question = j.at("question").get<std::string>();
    for (const auto& m : j.at("messages")) {
        t.messages.push_back({role_from_string(m.at("role").get<std::string>()),
                              m.at("content").get<std::string>()});
    }
    t.tool_call_count = j.at("tool_call_count").get<std::size_t>();
    t.token_count = j.at("token_count").get<std::size_t>();
    t.finish = finish_from_string(j.at("finish").get<std::string>());
    t.final_answer = j.at("final_answer").get<std::string>();
    return t;
}

inline void write_trajectories(const std::string& path, const std::vector<Trajectory>& ts) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    for (const auto& t : ts) out << trajectory_to_json(t).dump() << "\n";
}

inline std::vector<Trajectory> read_trajectories(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<Trajectory> out;
    std::string line;
    while (std::getline(in, line)) {
        if (normalize_whitespace(line).empty()) continue;
        out.push_back(trajectory_from_json(nlohmann::json::parse(line)));
    }
    return out;
}

}  // namespace forge
