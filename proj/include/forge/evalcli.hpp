#pragma once

#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/agentloop.hpp"
#include "forge/rlmath.hpp"
#include "forge/synth.hpp"

namespace forge {

struct BenchmarkItem {
    std::string id;
    std::string question;
    std::string ground_truth;  // may contain " OR "-separated alternatives
};

inline BenchmarkItem benchmark_item_from_json(const nlohmann::json& j) {
    BenchmarkItem item{j.at("id").get<std::string>(), j.at("question").get<std::string>(),
                       j.at("ground_truth").get<std::string>()};
    if (item.question.empty() || item.ground_truth.empty())
        throw std::invalid_argument("benchmark item " + item.id +
                                    ": question and ground_truth must be non-empty");
    return item;
}

inline std::vector<BenchmarkItem> read_benchmark(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<BenchmarkItem> items;
    std::string line;
    while (std::getline(in, line)) {
        if (normalize_whitespace(line).empty()) continue;
        items.push_back(benchmark_item_from_json(nlohmann::json::parse(line)));
    }
    return items;
}

struct EpisodeRecord {
    std::string item_id;
    int attempt = 0;
    bool correct = false;
    bool judge_failed = false;
    Finish finish = Finish::answered;
    std::size_t tool_calls = 0;
    std::string final_answer;
};

struct RunMetrics {
    double accuracy = 0.0;
    double avg_at_k = 0.0;
    double avg_tool_calls = 0.0;
    double oc_rate = 0.0;
    std::size_t episodes = 0;
    int attempts_per_item = 0;
    std::vector<EpisodeRecord> records;
};

/// Builds a fresh policy for (item, attempt). Implementations derive their
/// rng stream from a run seed plus these two coordinates so attempts are
/// independent but reproducible.
using PolicyFactory =
    std::function<std::unique_ptr<PolicyClient>(const BenchmarkItem&, int attempt)>;

/// Runs k judged episodes per item. Episode or judge failures mark the
/// episode incorrect and the run continues; nothing aborts a benchmark.
inline RunMetrics run_benchmark(const std::vector<BenchmarkItem>& items,
                                const PolicyFactory& make_policy, ToolTransport& tools,
                                JudgeClient& judge, int k, const AgentConfig& cfg = {}) {
    if (k < 1) throw std::invalid_argument("run_benchmark: k must be >= 1");
    RunMetrics m;
    m.attempts_per_item = k;

    double pass_rate_sum = 0.0;
    std::size_t correct_total = 0;
    std::size_t forced_total = 0;
    std::size_t tool_call_total = 0;

    for (const auto& item : items) {
        int successes = 0;
        for (int attempt = 1; attempt <= k; ++attempt) {
            EpisodeRecord rec;
            rec.item_id = item.id;
            rec.attempt = attempt;
            try {
                auto policy = make_policy(item, attempt);
                Trajectory t = run_episode(item.question, *policy, tools, cfg);
                rec.finish = t.finish;
                rec.tool_calls = t.tool_call_count;
                rec.final_answer = t.final_answer;
                auto graded =
                    correctness_reward(item.question, t.final_answer, item.ground_truth, judge);
                rec.correct = graded.reward == 1;
                rec.judge_failed = graded.judge_failed;
            } catch (const std::exception&) {
                rec.finish = Finish::error;
                rec.correct = false;
            }
            if (rec.correct) {
                ++successes;
                ++correct_total;
            }
            if (rec.finish == Finish::forced_answer) ++forced_total;
            tool_call_total += rec.tool_calls;
            m.records.push_back(std::move(rec));
        }
        pass_rate_sum += static_cast<double>(successes) / static_cast<double>(k);
    }

    m.episodes = m.records.size();
    if (m.episodes > 0) {
        m.accuracy = static_cast<double>(correct_total) / static_cast<double>(m.episodes);
        m.oc_rate = static_cast<double>(forced_total) / static_cast<double>(m.episodes);
        m.avg_tool_calls =
            static_cast<double>(tool_call_total) / static_cast<double>(m.episodes);
    }
    if (!items.empty()) m.avg_at_k = pass_rate_sum / static_cast<double>(items.size());
    return m;
}

inline nlohmann::json run_metrics_to_json(const RunMetrics& m) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : m.records) {
        records.push_back({{"item_id", r.item_id},
                           {"attempt", r.attempt},
                           {"correct", r.correct},
                           {"judge_failed", r.judge_failed},
                           {"finish", to_string(r.finish)},
                           {"tool_calls", r.tool_calls},
                           {"final_answer", r.final_answer}});
    }
    return {{"accuracy", m.accuracy},
            {"avg_at_k", m.avg_at_k},
            {"avg_tool_calls", m.avg_tool_calls},
            {"oc_rate", m.oc_rate},
            {"episodes", m.episodes},
            {"attempts_per_item", m.attempts_per_item},
            {"records", records}};
}

inline RunMetrics run_metrics_from_json(const nlohmann::json& j) {
    RunMetrics m;
    m.accuracy = j.at("accuracy").get<double>();
    m.avg_at_k = j.at("avg_at_k").get<double>();
    m.avg_tool_calls = j.at("avg_tool_calls").get<double>();
    m.oc_rate = j.at("oc_rate").get<double>();
    m.episodes = j.at("episodes").get<std::size_t>();
    m.attempts_per_item = j.at("attempts_per_item").get<int>();
    for (const auto& r : j.at("records")) {
        EpisodeRecord rec;
        rec.item_id = r.at("item_id").get<std::string>();
        rec.attempt = r.at("attempt").get<int>();
        rec.correct = r.at("correct").get<bool>();
        rec.judge_failed = r.at("judge_failed").get<bool>();
        rec.finish = finish_from_string(r.at("finish").get<std::string>());
        rec.tool_calls = r.at("tool_calls").get<std::size_t>();
        rec.final_answer = r.at("final_answer").get<std::string>();
        m.records.push_back(std::move(rec));
    }
    return m;
}

enum class ReportFormat { table, json, plotdata };

inline ReportFormat report_format_from_string(std::string_view s) {
    if (s == "table") return ReportFormat::table;
    if (s == "json") return ReportFormat::json;
    if (s == "plotdata") return ReportFormat::plotdata;
    throw std::invalid_argument("unknown report format: " + std::string(s));
}

/// Renders metrics as an aligned text table, the JSON schema above, or
/// histogram rows of the tool-call distribution (bucket width 5).
inline std::string emit_report(const RunMetrics& m, ReportFormat format) {
    if (format == ReportFormat::json) return run_metrics_to_json(m).dump(2) + "\n";

    if (format == ReportFormat::plotdata) {
        std::ostringstream out;
        out << "# tool_calls_bucket count\n";
        if (!m.records.empty()) {
            std::vector<int> counts;
            counts.reserve(m.records.size());
            for (const auto& r : m.records) counts.push_back(static_cast<int>(r.tool_calls));
            auto stats = toolcall_stats(counts);
            for (const auto& [bucket, count] : stats.histogram)
                out << bucket << " " << count << "\n";
        }
        return out.str();
    }

    std::map<std::string, std::pair<int, int>> per_item;  // id -> (successes, attempts)
    for (const auto& r : m.records) {
        auto& [succ, total] = per_item[r.item_id];
        if (r.correct) ++succ;
        ++total;
    }
    std::size_t id_width = 4;
    for (const auto& [id, counts] : per_item) id_width = std::max(id_width, id.size());

    std::ostringstream out;
    out << std::fixed << std::setprecision(4);
    out << "episodes: " << m.episodes << "  attempts/item: " << m.attempts_per_item << "\n"
        << "accuracy: " << m.accuracy << "  avg@" << m.attempts_per_item << ": " << m.avg_at_k
        << "  avg_tool_calls: " << m.avg_tool_calls << "  oc_rate: " << m.oc_rate << "\n\n";
    out << std::left << std::setw(static_cast<int>(id_width + 2)) << "item"
        << std::right << std::setw(10) << "passed" << std::setw(10) << "attempts"
        << std::setw(12) << "pass_rate" << "\n";
    for (const auto& [id, counts] : per_item) {
        double rate = counts.second == 0
                          ? 0.0
                          : static_cast<double>(counts.first) / static_cast<double>(counts.second);
        out << std::left << std::setw(static_cast<int>(id_width + 2)) << id << std::right
            << std::setw(10) << counts.first << std::setw(10) << counts.second << std::setw(12)
            << rate << "\n";
    }
    return out.str();
}

}  // namespace forge
