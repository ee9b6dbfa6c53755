#pragma once
// Command-line front end. Subcommands map onto the pipeline stages: `search`,
// `select`, and `adapt` run one slice each (`adapt` also emits the corpus so
// its output is the finished tasks.jsonl), `run` drives all four stages, and
// `stats` summarizes an existing corpus and audits repository licenses.
// Exit codes are scriptable: 0 success, 2 configuration problem, 3 provider
// failure (including replay-cache misses), 4 partial progress after an
// interrupt. SIGINT requests a graceful stop: in-flight items drain, the
// checkpoint flushes, and a later invocation resumes where this one stopped.

#include "config.hpp"
#include "dataset.hpp"
#include "pipeline.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <initializer_list>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace autosdt {

namespace cli_detail {

// SIGINT flips this flag; the pipeline polls it between item commits, drains
// work already in flight, and defers the stage with reason "interrupted".
inline volatile std::sig_atomic_t g_interrupted = 0;
inline void on_interrupt(int) { g_interrupted = 1; }

inline void warn_to_stderr(const std::string& message) {
    std::fprintf(stderr, "warning: %s\n", message.c_str());
}

inline PipelineConfig resolve_config(const std::string& config_path, const CliOverrides& o) {
    PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config_file(config_path);
    apply_overrides(cfg, o);
    return cfg;
}

// Live and record modes talk to a real chat-completions endpoint; replay mode
// serves everything from the response cache and needs no provider at all.
inline std::unique_ptr<ChatProvider> make_provider(const PipelineConfig& cfg) {
    if (cfg.mode == GatewayMode::replay) return nullptr;
    auto key = llm_api_key();
    if (!key || key->empty())
        throw ConfigError("AUTOSDT_LLM_API_KEY must be set for " + to_string(cfg.mode) +
                          " mode");
    std::string base_url = cfg.llm_base_url;
    if (base_url.empty())
        if (const char* env = std::getenv("AUTOSDT_LLM_BASE_URL"); env && *env) base_url = env;
    if (base_url.empty())
        throw ConfigError("set llm.base_url in the config (or AUTOSDT_LLM_BASE_URL) for " +
                          to_string(cfg.mode) + " mode");
    return std::make_unique<HttpChatProvider>(base_url, *key);
}

inline void print_report(const StageReport& r) {
    std::printf("[%s] processed %zu item(s), skipped %zu already done\n", r.stage.c_str(),
                r.processed, r.skipped);
    for (const auto& note : r.notes) std::printf("  %s\n", note.c_str());
    if (!r.completed) std::printf("  deferred: %s\n", r.defer_reason.c_str());
}

inline int exit_code_for(const std::vector<StageReport>& reports) {
    for (const auto& r : reports)
        if (!r.completed) return r.defer_reason == "interrupted" ? 4 : 3;
    return 0;
}

enum class Stage { search, select, adapt, emit };

struct StageRun {
    std::vector<StageReport> reports;
    int exit_code = 0;
};

inline StageRun run_stages(PipelineRunner& runner, std::initializer_list<Stage> stages) {
    StageRun out;
    for (Stage s : stages) {
        StageReport rep;
        switch (s) {
        case Stage::search: rep = runner.run_search(); break;
        case Stage::select: rep = runner.run_select(); break;
        case Stage::adapt: rep = runner.run_adapt(); break;
        case Stage::emit: rep = runner.run_emit(); break;
        }
        print_report(rep);
        bool completed = rep.completed;
        out.reports.push_back(std::move(rep));
        if (!completed) break;
    }
    out.exit_code = exit_code_for(out.reports);
    return out;
}

inline void print_search_summary(const PipelineConfig& cfg) {
    auto text = read_file(cfg.out_dir / "repos.jsonl");
    if (!text) return;
    std::map<std::string, std::int64_t> research_by_discipline;
    std::int64_t total = 0;
    std::int64_t research = 0;
    for (const auto& line : split_lines(*text)) {
        if (trim(line).empty()) continue;
        RepoRef repo = decode_repo(json::parse(line));
        ++total;
        if (repo.research_verdict != ResearchVerdict::research) continue;
        ++research;
        for (const auto& d : repo.discipline_ids) ++research_by_discipline[d];
    }
    std::printf("research repositories by discipline (%lld of %lld crawled):\n",
                static_cast<long long>(research), static_cast<long long>(total));
    for (const auto& [discipline, n] : research_by_discipline)
        std::printf("  %-28s %lld\n", discipline.c_str(), static_cast<long long>(n));
}

inline void print_adapt_summary(const PipelineConfig& cfg) {
    auto text = read_file(cfg.out_dir / "adapted.jsonl");
    if (!text) return;
    std::map<int, std::int64_t> iterations;
    std::int64_t adapted = 0;
    std::int64_t discarded = 0;
    for (const auto& line : split_lines(*text)) {
        if (trim(line).empty()) continue;
        json row = json::parse(line);
        const auto& state = row.at("state");
        const std::string status = state.at("status").get<std::string>();
        if (status == "adapted") {
            ++adapted;
            ++iterations[state.at("iteration").get<int>()];
        } else if (status == "discarded") {
            ++discarded;
        }
    }
    std::printf("adapted %lld candidate(s), discarded %lld\n", static_cast<long long>(adapted),
                static_cast<long long>(discarded));
    std::printf("debug iterations per adapted task:\n");
    for (const auto& [n, count] : iterations)
        std::printf("  %d iteration(s): %lld\n", n, static_cast<long long>(count));
}

inline void print_cost_summary(PipelineRunner& runner, const PipelineConfig& cfg) {
    Usd total = runner.gateway().ledger().total();
    auto tasks = load_corpus(cfg.out_dir / "tasks.jsonl");
    std::printf("model spend: $%s total", total.to_string_cents().c_str());
    if (!tasks.empty())
        std::printf(" ($%s per task across %zu task(s))",
                    total.divided_by(static_cast<std::int64_t>(tasks.size()))
                        .to_string_cents()
                        .c_str(),
                    tasks.size());
    std::printf("\n");
}

inline int cmd_stats(const PipelineConfig& cfg) {
    auto corpus_file = cfg.out_dir / "tasks.jsonl";
    auto tasks = load_corpus(corpus_file);

    // The ledger lives in the run's checkpoint state; without it the stats
    // still render, just with zero cost.
    CostLedger ledger;
    const CostLedger* ledger_ptr = nullptr;
    if (auto text = read_file(run_state_path(cfg.state_dir, run_id_for(cfg)))) {
        json doc = json::parse(*text);
        if (doc.contains("ledger")) {
            ledger = CostLedger::decode(doc.at("ledger"));
            ledger_ptr = &ledger;
        }
    }

    CorpusStats stats = compute_stats(tasks, ledger_ptr);
    json stats_doc = encode_stats(stats);
    stats_doc["package_histogram"] = package_histogram(tasks);
    write_file(cfg.out_dir / "stats.json", stats_doc.dump(2) + "\n");

    // License audit over the repositories the corpus actually draws from.
    // Prefer the crawl records; fall back to the license ids embedded in the
    // tasks themselves when repos.jsonl is not around.
    std::set<std::string> task_repos;
    for (const auto& t : tasks) task_repos.insert(t.repo_key);
    std::vector<RepoRef> repos;
    if (auto text = read_file(cfg.out_dir / "repos.jsonl")) {
        for (const auto& line : split_lines(*text)) {
            if (trim(line).empty()) continue;
            RepoRef repo = decode_repo(json::parse(line));
            if (task_repos.count(repo.key())) repos.push_back(std::move(repo));
        }
    } else {
        std::map<std::string, RepoRef> by_key;
        for (const auto& t : tasks) {
            RepoRef repo;
            auto slash = t.repo_key.find('/');
            repo.owner = t.repo_key.substr(0, slash);
            repo.name = t.repo_key.substr(slash + 1);
            repo.url = t.repo_url;
            repo.license_id = t.license_id;
            by_key.emplace(t.repo_key, std::move(repo));
        }
        for (auto& [key, repo] : by_key) repos.push_back(std::move(repo));
    }
    auto records = audit_licenses(repos, warn_to_stderr);
    write_file(cfg.out_dir / "licenses.csv", render_licenses_csv(records));

    std::fputs(render_stats_table(stats).c_str(), stdout);
    auto counts = license_counts(records);
    if (!counts.empty()) {
        std::printf("licenses:\n");
        for (const auto& [id, n] : counts)
            std::printf("  %-24s %lld\n", id.c_str(), static_cast<long long>(n));
    }
    auto review = review_list(records);
    if (!review.empty()) {
        std::printf("needs license review before redistribution:\n");
        for (const auto& rec : review)
            std::printf("  %s (%s)\n", rec.repo_key.c_str(), rec.license_id.c_str());
    }
    std::printf("wrote %s and %s\n", (cfg.out_dir / "stats.json").string().c_str(),
                (cfg.out_dir / "licenses.csv").string().c_str());
    return 0;
}

} // namespace cli_detail

inline int cli_main(int argc, char** argv) {
    using namespace cli_detail;

    CLI::App app{"mine code hosts for runnable data-driven science tasks"};
    app.name("autosdt");
    app.require_subcommand(1);

    std::string config_path;
    std::string mode_str;
    std::string out_dir;
    std::string state_dir;
    std::string exclude_file;
    bool allow_net = false;
    int workers = 0;

    app.add_option("--config", config_path, "pipeline configuration file")->type_name("FILE");
    app.add_option("--mode", mode_str, "gateway mode: live, record, or replay")
        ->check(CLI::IsMember({"live", "record", "replay"}));
    app.add_option("--out-dir", out_dir, "artifact output directory")->type_name("DIR");
    app.add_option("--state-dir", state_dir, "checkpoint and cache state directory")
        ->type_name("DIR");
    app.add_option("--exclude-file", exclude_file,
                   "file listing owner/name repositories to skip")
        ->type_name("FILE");
    app.add_flag("--allow-net", allow_net,
                 "let candidate programs reach the network while executing");
    app.add_option("--workers", workers, "parallel worker threads")
        ->check(CLI::PositiveNumber);

    auto* c_search = app.add_subcommand(
        "search", "expand keywords, crawl hosts, classify research repositories");
    auto* c_select = app.add_subcommand(
        "select", "snapshot research repositories and pick scientific candidate programs");
    auto* c_adapt = app.add_subcommand(
        "adapt", "adapt candidates into standalone tasks and emit the corpus");
    auto* c_run = app.add_subcommand("run", "run the full pipeline end to end");
    auto* c_stats = app.add_subcommand("stats", "summarize the corpus and audit licenses");
    for (auto* sub : {c_search, c_select, c_adapt, c_run, c_stats}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    CliOverrides overrides;
    if (app.count("--mode")) overrides.mode = mode_str;
    if (app.count("--out-dir")) overrides.out_dir = out_dir;
    if (app.count("--state-dir")) overrides.state_dir = state_dir;
    if (app.count("--exclude-file")) overrides.exclude_file = exclude_file;
    if (app.count("--allow-net")) overrides.allow_net = allow_net;
    if (app.count("--workers")) overrides.workers = workers;

    try {
        PipelineConfig cfg = resolve_config(config_path, overrides);
        if (c_stats->parsed()) return cmd_stats(cfg);

        g_interrupted = 0;
        std::signal(SIGINT, on_interrupt);
        PipelineRunner runner(cfg, make_provider(cfg), warn_to_stderr,
                              [] { return g_interrupted != 0; });

        if (c_search->parsed()) {
            StageRun run = run_stages(runner, {Stage::search});
            if (run.exit_code == 0) print_search_summary(cfg);
            return run.exit_code;
        }
        if (c_select->parsed()) return run_stages(runner, {Stage::select}).exit_code;
        if (c_adapt->parsed()) {
            StageRun run = run_stages(runner, {Stage::adapt, Stage::emit});
            if (run.exit_code == 0) print_adapt_summary(cfg);
            return run.exit_code;
        }
        StageRun run =
            run_stages(runner, {Stage::search, Stage::select, Stage::adapt, Stage::emit});
        print_cost_summary(runner, cfg);
        return run.exit_code;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const ProviderUnavailable& e) {
        std::fprintf(stderr, "provider error: %s\n", e.what());
        return 3;
    } catch (const AuthError& e) {
        std::fprintf(stderr, "provider error: %s\n", e.what());
        return 3;
    } catch (const RateLimited& e) {
        std::fprintf(stderr, "provider error: %s\n", e.what());
        return 3;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}

} // namespace autosdt
