// forge: one binary for the offline deep-search stack.
//
//   serve   host the search/browse tool server over HTTP
//   synth   grow entity trees from seed pages and emit fuzzed QA items
//   run     play one scripted episode against the tool server
//   stats   summarize tool-call counts over a trajectory file
//   reward  score trajectories and compute group-normalized advantages
//   eval    run a benchmark end to end and report accuracy metrics
//
// Every subcommand works offline against the built-in fixture corpus. Set
// FORGE_ENGINE_URL, FORGE_EMBED_URL, FORGE_RERANK_URL, FORGE_LLM_URL,
// FORGE_JUDGE_URL, or FORGE_CACHE_URL to swap individual backends for live
// HTTP services.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "forge/config.hpp"
#include "forge/evalcli.hpp"
#include "forge/fakes.hpp"
#include "forge/forge.hpp"
#include "forge/http_clients.hpp"
#include "forge/http_server.hpp"

namespace {

using nlohmann::json;

struct ServiceBundle {
    forge::FakeStack fakes;
    forge::ToolService::Clients clients;
    std::shared_ptr<forge::JudgeClient> judge;
    std::shared_ptr<forge::RerankClient> reranker;
    std::shared_ptr<forge::CacheStore> cache;
};

// Fakes by default, HTTP clients wherever a FORGE_*_URL variable points at a
// live service. The fake stack is kept alive either way so synth can use the
// fixture corpus for entity resolution.
ServiceBundle make_bundle() {
    ServiceBundle b;
    b.fakes = forge::make_fake_stack();

    if (auto url = forge::env_service_url("FORGE_ENGINE_URL")) {
        b.clients.engines = {std::make_shared<forge::HttpSearchEngine>(*url, "primary")};
        b.clients.crawler = std::make_shared<forge::HttpCrawler>();
    } else {
        b.clients.engines = {b.fakes.engine, b.fakes.backup_engine};
        b.clients.crawler = b.fakes.crawler;
    }

    if (auto url = forge::env_service_url("FORGE_EMBED_URL"))
        b.clients.embedder = std::make_shared<forge::HttpEmbedder>(*url);
    else
        b.clients.embedder = b.fakes.embedder;

    if (auto url = forge::env_service_url("FORGE_RERANK_URL"))
        b.reranker = std::make_shared<forge::HttpReranker>(*url);
    else
        b.reranker = b.fakes.reranker;
    b.clients.reranker = b.reranker;

    if (auto url = forge::env_service_url("FORGE_LLM_URL"))
        b.clients.snippet_writer = std::make_shared<forge::HttpSnippetWriter>(*url);
    else
        b.clients.snippet_writer = b.fakes.snippet_writer;

    if (auto url = forge::env_service_url("FORGE_JUDGE_URL"))
        b.judge = std::make_shared<forge::HttpJudge>(*url);
    else
        b.judge = b.fakes.judge;

    if (auto url = forge::env_service_url("FORGE_CACHE_URL"))
        b.cache = std::make_shared<forge::CacheStore>(
            std::make_shared<forge::HttpKvBackend>(*url));
    else
        b.cache = std::make_shared<forge::CacheStore>();

    return b;
}

std::shared_ptr<forge::ToolService> make_service(ServiceBundle& b,
                                                 forge::ToolServerConfig cfg) {
    return std::make_shared<forge::ToolService>(std::move(cfg), b.clients, b.cache);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// "builtin" replays the bundled demo episode; "scripted:<path>" loads a JSON
// file holding either {"turns": [...]} or a bare array of assistant turns.
std::vector<std::string> load_policy_turns(const std::string& policy) {
    if (policy == "builtin") return forge::demo_episode_turns();
    const std::string prefix = "scripted:";
    if (policy.rfind(prefix, 0) != 0)
        throw std::runtime_error("unknown policy '" + policy +
                                 "' (expected 'builtin' or 'scripted:<file>')");
    json spec = json::parse(read_text_file(policy.substr(prefix.size())));
    const json& turns = spec.is_object() ? spec.at("turns") : spec;
    if (!turns.is_array()) throw std::runtime_error("policy file must hold an array of turns");
    std::vector<std::string> out;
    for (const auto& t : turns) out.push_back(t.get<std::string>());
    return out;
}

void write_or_print(const std::string& out_path, const std::string& text) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << text;
}

int cmd_serve(const std::string& config_path, const std::string& host, int port) {
    forge::ToolServerConfig cfg;
    if (!config_path.empty()) cfg = forge::tool_server_config_from_file(config_path);
    auto bundle = make_bundle();
    auto service = make_service(bundle, cfg);
    forge::ToolHttpServer server(service, host);
    std::cerr << "forge serve: listening on " << host << ":" << port
              << " (POST /search, POST /browse, GET /healthz, GET /stats)\n";
    if (!server.serve_forever(port)) {
        std::cerr << "forge serve: failed to listen on " << host << ":" << port << "\n";
        return 1;
    }
    return 0;
}

int cmd_run(const std::string& question_path, const std::string& policy,
            std::size_t context, const std::string& region, const std::string& out_path) {
    std::string question = forge::normalize_whitespace(read_text_file(question_path));
    if (question.empty()) throw std::runtime_error("question file is empty");

    auto bundle = make_bundle();
    forge::ToolServerConfig cfg;
    cfg.region_lang = region;
    auto service = make_service(bundle, cfg);
    forge::LocalToolTransport transport(service);

    forge::ScriptedPolicy policy_client(load_policy_turns(policy));
    forge::AgentConfig agent_cfg;
    agent_cfg.max_context_tokens = context;
    auto trajectory = forge::run_episode(question, policy_client, transport, agent_cfg);

    write_or_print(out_path, forge::trajectory_to_json(trajectory).dump() + "\n");
    std::cerr << "forge run: finish=" << forge::to_string(trajectory.finish)
              << " tool_calls=" << trajectory.tool_call_count
              << " tokens=" << trajectory.token_count << "\n";
    return 0;
}

int cmd_stats(const std::string& trajectories_path) {
    auto trajectories = forge::read_trajectories(trajectories_path);
    if (trajectories.empty()) throw std::runtime_error("no trajectories in " + trajectories_path);
    std::vector<int> counts;
    counts.reserve(trajectories.size());
    for (const auto& t : trajectories) counts.push_back(static_cast<int>(t.tool_call_count));
    auto stats = forge::toolcall_stats(counts);

    std::printf("episodes            %zu\n", trajectories.size());
    std::printf("mean_tool_calls     %.2f\n", stats.mean);
    std::printf("median_tool_calls   %.0f\n", stats.median);
    std::printf("histogram\n");
    for (const auto& [bucket, n] : stats.histogram)
        std::printf("  [%d,%d)  %zu\n", bucket, bucket + 5, n);
    return 0;
}

int cmd_reward(const std::string& trajectories_path, const std::string& qa_path,
               double lambda, const std::string& method_name, const std::string& out_path) {
    auto method = forge::recall_method_from_string(method_name);
    auto trajectories = forge::read_trajectories(trajectories_path);
    auto qa_items = forge::read_qa_items(qa_path);
    auto bundle = make_bundle();

    std::map<std::string, std::size_t> qa_by_question;
    for (std::size_t i = 0; i < qa_items.size(); ++i)
        qa_by_question.emplace(qa_items[i].question, i);

    // Group rollouts of the same question, preserving first-seen order.
    std::vector<std::string> order;
    std::map<std::string, std::vector<const forge::Trajectory*>> groups;
    for (const auto& t : trajectories) {
        auto [it, inserted] = groups.try_emplace(t.question);
        if (inserted) order.push_back(t.question);
        it->second.push_back(&t);
    }

    std::ostringstream out;
    std::size_t skipped = 0;
    std::size_t judge_failures = 0;
    for (const auto& question : order) {
        auto qa_it = qa_by_question.find(question);
        if (qa_it == qa_by_question.end()) {
            std::cerr << "forge reward: no QA item for question, skipping: "
                      << forge::truncate_words(question, 12) << "\n";
            ++skipped;
            continue;
        }
        const auto& qa = qa_items[qa_it->second];

        std::vector<double> rewards;
        for (const forge::Trajectory* t : groups[question]) {
            auto corr = forge::correctness_reward(question, t->final_answer, qa.answer,
                                                  *bundle.judge);
            if (corr.judge_failed) ++judge_failures;
            double recall = lambda > 0.0
                                ? forge::recall_rate(*t, qa.entities, method,
                                                     bundle.reranker.get())
                                : 0.0;
            rewards.push_back(forge::combined_reward(corr.reward, recall, lambda));
        }
        std::vector<double> advantages =
            rewards.size() >= 2 ? forge::group_advantages(rewards) : std::vector<double>{0.0};

        char id[16];
        std::snprintf(id, sizeof id, "q%04zu", qa_it->second);
        json line = {{"question_id", id}, {"rewards", rewards}, {"advantages", advantages}};
        out << line.dump() << "\n";
    }

    write_or_print(out_path, out.str());
    std::cerr << "forge reward: groups=" << order.size() - skipped << " skipped=" << skipped
              << " judge_failures=" << judge_failures << "\n";
    return 0;
}

// ---- synth ----------------------------------------------------------------

// Counts fixture entities whose page keeps non-trivial term overlap with
// every constraint. Adding a constraint can only shrink the count, which is
// what the greedy selection needs.
std::size_t fixture_gt_space(const forge::FixtureCorpus& corpus,
                             const std::vector<std::string>& constraints) {
    std::size_t n = 0;
    for (const auto& entity : corpus.entities) {
        const auto* page = corpus.page(entity.url);
        if (!page) continue;
        auto page_terms = forge::detail::term_set(forge::extract_main_text(page->html).text);
        bool all_match = true;
        for (const auto& c : constraints) {
            if (forge::detail::jaccard(forge::detail::term_set(c), page_terms) < 0.02) {
                all_match = false;
                break;
            }
        }
        if (all_match) ++n;
    }
    return n;
}

// A shallow agent defeats the constraints when at least half of them surface
// the target page in the engine's top results.
bool fixture_shallow_agent(forge::FakeSearchEngine& engine, const forge::FixtureCorpus& corpus,
                           const std::string& region, const std::vector<std::string>& constraints,
                           const std::string& target_name) {
    const auto* entity = corpus.entity(target_name);
    if (!entity || constraints.empty()) return false;
    std::size_t hits = 0;
    for (const auto& c : constraints) {
        auto results = engine.search(c, region);
        if (!results.ok()) continue;
        for (const auto& r : results.value()) {
            if (r.url == entity->url) {
                ++hits;
                break;
            }
        }
    }
    return hits * 2 >= constraints.size();
}

// Accepts a question when the engine still surfaces the source page for it;
// questions that cannot be traced back to their page are unanswerable noise.
class LookupSolver : public forge::SolverClient {
  public:
    LookupSolver(std::shared_ptr<forge::FakeSearchEngine> engine, std::string region)
        : engine_(std::move(engine)), region_(std::move(region)) {}

    void expect(const std::string& question, std::string url, std::string answer) {
        expected_[question] = {std::move(url), std::move(answer)};
    }

    forge::Result<forge::SolveOutcome> solve(std::string_view question, int) override {
        auto it = expected_.find(std::string(question));
        if (it == expected_.end()) return forge::SolveOutcome{false, ""};
        auto results = engine_->search(question, region_);
        if (!results.ok()) return results.error();
        for (const auto& r : results.value())
            if (r.url == it->second.first) return forge::SolveOutcome{true, it->second.second};
        return forge::SolveOutcome{false, ""};
    }

  private:
    std::shared_ptr<forge::FakeSearchEngine> engine_;
    std::string region_;
    std::map<std::string, std::pair<std::string, std::string>> expected_;
};

struct Seed {
    std::string name;
    std::string url;
};

std::vector<Seed> read_seeds(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::vector<Seed> seeds;
    std::string line;
    while (std::getline(in, line)) {
        if (forge::normalize_whitespace(line).empty()) continue;
        json j = json::parse(line);
        seeds.push_back({j.at("name").get<std::string>(), j.at("url").get<std::string>()});
    }
    return seeds;
}

int cmd_synth(const std::string& seeds_path, const std::string& config_path,
              const std::string& out_path) {
    forge::SynthJobConfig cfg;
    if (!config_path.empty()) cfg = forge::synth_config_from_file(config_path);
    auto seeds = read_seeds(seeds_path);
    if (seeds.empty()) throw std::runtime_error("no seeds in " + seeds_path);

    auto bundle = make_bundle();
    const auto& corpus = *bundle.fakes.corpus;
    const std::string region = "us-en";

    forge::UrlResolver resolve = [&corpus](const std::string& name) -> std::optional<std::string> {
        if (const auto* e = corpus.entity(name)) return e->url;
        return std::nullopt;
    };
    std::map<std::string, std::string> descriptors;
    for (const auto& e : corpus.entities) descriptors[e.name] = e.descriptor;

    forge::AttributeLookup attr_value =
        [&corpus](const std::string& entity, const std::string& attribute)
        -> std::optional<std::string> {
        const auto* e = corpus.entity(entity);
        if (!e) return std::nullopt;
        auto it = e->attributes.find(attribute);
        if (it == e->attributes.end()) return std::nullopt;
        return it->second;
    };

    forge::GtSpaceEstimator gt_space = [&corpus](const std::vector<std::string>& constraints) {
        return fixture_gt_space(corpus, constraints);
    };

    forge::TemplateQuestionGen question_gen;
    LookupSolver solver(bundle.fakes.engine, region);
    std::vector<forge::QaItem> items;
    std::size_t trees_built = 0;

    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const auto& seed = seeds[i];
        forge::TreeConfig tree_cfg = cfg.tree;
        tree_cfg.rng_seed = cfg.tree.rng_seed + i;

        forge::EntityTree tree;
        try {
            tree = forge::build_tree(seed.name, seed.url, tree_cfg, *bundle.clients.crawler,
                                     *bundle.fakes.ner, resolve);
        } catch (const std::exception& e) {
            std::cerr << "forge synth: skipping seed '" << seed.name << "': " << e.what() << "\n";
            continue;
        }
        ++trees_built;

        for (forge::EntityNode* node : tree.nodes()) {
            if (node->barren) continue;
            node->fuzzed_facts =
                forge::fuzzify(node->facts, *bundle.fakes.ner, *bundle.fakes.rephraser,
                               descriptors);
            forge::ShallowAgent agent = [&](const std::vector<std::string>& constraints,
                                            const std::string& target) {
                return fixture_shallow_agent(*bundle.fakes.engine, corpus, region, constraints,
                                             target);
            };
            auto sel = forge::select_constraints(*node, gt_space, agent, cfg.oracle_budget);
            node->constraints = sel.constraints;
            if (!sel.feasible) node->unusable = true;
        }

        std::string attribute = cfg.attribute;
        if (!attr_value(seed.name, attribute)) {
            const auto* e = corpus.entity(seed.name);
            if (!e || e->attributes.empty()) {
                std::cerr << "forge synth: no attributes known for '" << seed.name
                          << "', skipping\n";
                continue;
            }
            attribute = e->attributes.begin()->first;
            std::cerr << "forge synth: '" << seed.name << "' lacks attribute '" << cfg.attribute
                      << "', using '" << attribute << "'\n";
        }

        std::mt19937_64 rng(tree_cfg.rng_seed);
        auto subtree = forge::extract_subtree(tree, cfg.subtree_budget, rng);
        auto item = forge::generate_question(subtree, attribute, question_gen, attr_value);
        solver.expect(item.question, seed.url, item.answer);
        items.push_back(std::move(item));
    }

    auto kept = forge::difficulty_filter(items, solver, cfg.solver_rounds);
    forge::write_qa_items(out_path, kept);
    std::cerr << "forge synth: seeds=" << seeds.size() << " trees=" << trees_built
              << " generated=" << items.size() << " kept=" << kept.size() << "\n";
    return 0;
}

// ---- eval -----------------------------------------------------------------

// "builtin" answers the bundled demo question with the bundled episode;
// "scripted:<path>" maps item ids to turn arrays: {"<id>": ["...", ...]}.
std::map<std::string, std::vector<std::string>> load_policy_book(const std::string& policy) {
    std::map<std::string, std::vector<std::string>> book;
    if (policy == "builtin") return book;
    const std::string prefix = "scripted:";
    if (policy.rfind(prefix, 0) != 0)
        throw std::runtime_error("unknown policy '" + policy +
                                 "' (expected 'builtin' or 'scripted:<file>')");
    json spec = json::parse(read_text_file(policy.substr(prefix.size())));
    if (!spec.is_object()) throw std::runtime_error("policy book must map item ids to turns");
    for (const auto& [id, turns] : spec.items()) {
        std::vector<std::string> list;
        for (const auto& t : turns) list.push_back(t.get<std::string>());
        book.emplace(id, std::move(list));
    }
    return book;
}

int cmd_eval(const std::string& dataset_path, int avg_k, std::size_t context,
             const std::string& region, const std::string& policy,
             const std::string& format_name, const std::string& out_path) {
    auto items = forge::read_benchmark(dataset_path);
    auto book = load_policy_book(policy);

    auto bundle = make_bundle();
    forge::ToolServerConfig cfg;
    cfg.region_lang = region;
    auto service = make_service(bundle, cfg);
    forge::LocalToolTransport transport(service);

    forge::PolicyFactory make_policy = [&](const forge::BenchmarkItem& item, int) {
        auto it = book.find(item.id);
        if (it != book.end())
            return std::make_unique<forge::ScriptedPolicy>(it->second);
        if (item.question == forge::demo_question())
            return std::make_unique<forge::ScriptedPolicy>(forge::demo_episode_turns());
        // No script for this item: search the question once, then give up.
        json call = {{"name", "search"}, {"arguments", {{"query", item.question}}}};
        std::vector<std::string> turns = {"<tool_call>\n" + call.dump() + "\n</tool_call>"};
        return std::make_unique<forge::ScriptedPolicy>(std::move(turns));
    };

    forge::AgentConfig agent_cfg;
    agent_cfg.max_context_tokens = context;
    auto metrics = forge::run_benchmark(items, make_policy, transport, *bundle.judge, avg_k,
                                        agent_cfg);

    if (!out_path.empty())
        write_or_print(out_path, forge::emit_report(metrics, forge::ReportFormat::json));
    auto format = forge::report_format_from_string(format_name);
    std::cout << forge::emit_report(metrics, format);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deep-search tool server, data synthesis, and scoring"};
    app.require_subcommand(1);

    auto* serve = app.add_subcommand("serve", "host the search/browse tool server");
    std::string serve_config;
    std::string serve_host = "127.0.0.1";
    int serve_port = 8080;
    serve->add_option("--config", serve_config, "tool server config file");
    serve->add_option("--host", serve_host, "bind address");
    serve->add_option("--port", serve_port, "bind port")->required();

    auto* synth = app.add_subcommand("synth", "synthesize QA items from seed entities");
    std::string synth_seeds, synth_config, synth_out;
    synth->add_option("--seeds", synth_seeds, "seed JSONL with name and url per line")
        ->required();
    synth->add_option("--config", synth_config, "synthesis config file");
    synth->add_option("--out", synth_out, "output QA JSONL path")->required();

    auto* run = app.add_subcommand("run", "play one scripted episode");
    std::string run_question, run_policy = "builtin", run_region = "us-en", run_out = "-";
    std::size_t run_context = 16384;
    run->add_option("--question", run_question, "file holding the question text")->required();
    run->add_option("--policy", run_policy, "'builtin' or 'scripted:<file>'");
    run->add_option("--context", run_context, "context budget in tokens");
    run->add_option("--region", run_region, "search region-language tag");
    run->add_option("--out", run_out, "trajectory JSONL output ('-' for stdout)");

    auto* stats = app.add_subcommand("stats", "summarize tool-call counts");
    std::string stats_trajectories;
    stats->add_option("--trajectories", stats_trajectories, "trajectory JSONL path")
        ->required();

    auto* reward = app.add_subcommand("reward", "score trajectories into rewards.jsonl");
    std::string reward_trajectories, reward_qa, reward_method = "judge_score", reward_out = "-";
    double reward_lambda = 0.5;
    reward->add_option("--trajectories", reward_trajectories, "trajectory JSONL path")
        ->required();
    reward->add_option("--qa", reward_qa, "QA JSONL path from synth")->required();
    reward->add_option("--lambda", reward_lambda, "recall bonus weight in [0,1]");
    reward->add_option("--method", reward_method, "name_em, url_em, or judge_score");
    reward->add_option("--out", reward_out, "rewards JSONL output ('-' for stdout)");

    auto* eval = app.add_subcommand("eval", "run a benchmark and report metrics");
    std::string eval_dataset, eval_region = "us-en", eval_policy = "builtin";
    std::string eval_format = "table", eval_out;
    int eval_avg_k = 4;
    std::size_t eval_context = 65536;
    eval->add_option("--dataset", eval_dataset, "benchmark JSONL path")->required();
    eval->add_option("--avg-k", eval_avg_k, "attempts per item for avg@k");
    eval->add_option("--context", eval_context, "context budget in tokens");
    eval->add_option("--region", eval_region, "search region-language tag");
    eval->add_option("--policy", eval_policy, "'builtin' or 'scripted:<file>'");
    eval->add_option("--format", eval_format, "stdout format: table, json, or plotdata");
    eval->add_option("--out", eval_out, "also write a JSON report here");

    try {
        app.parse(argc, argv);
        if (serve->parsed()) return cmd_serve(serve_config, serve_host, serve_port);
        if (synth->parsed()) return cmd_synth(synth_seeds, synth_config, synth_out);
        if (run->parsed())
            return cmd_run(run_question, run_policy, run_context, run_region, run_out);
        if (stats->parsed()) return cmd_stats(stats_trajectories);
        if (reward->parsed())
            return cmd_reward(reward_trajectories, reward_qa, reward_lambda, reward_method,
                              reward_out);
        if (eval->parsed())
            return cmd_eval(eval_dataset, eval_avg_k, eval_context, eval_region, eval_policy,
                            eval_format, eval_out);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "forge: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
