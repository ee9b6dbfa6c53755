#pragma once
// Orchestrates the four stages — search, select, adapt, emit — over one
// persistent, resumable run. Every item gets a lexicographically ordered key;
// results are appended to per-stage logs before the checkpoint advances, so a
// crash at any point resumes without reprocessing and without losing work.
// Items within a stage phase run on a bounded worker pool, but commits happen
// strictly in key order from the calling thread.

#include "adapt.hpp"
#include "config.hpp"
#include "dataset.hpp"
#include "hosts.hpp"
#include "search.hpp"
#include "select.hpp"

#include <algorithm>
#include <cstdio>
#include <deque>
#include <future>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace autosdt {

// What one stage invocation did. `completed == false` means the stage stopped
// early — provider outage or a cooperative interrupt — and a later invocation
// will pick up where this one left off.
struct StageReport {
    std::string stage;
    bool completed = true;
    std::string defer_reason;       // set when completed == false
    std::size_t processed = 0;      // items handled by this invocation
    std::size_t skipped = 0;        // items an earlier invocation already did
    std::vector<std::string> notes; // funnel summary for operators
};

namespace detail {

// "<phase>:<zero-padded seq>:<label>" — sorts by phase, then sequence. The
// label is informational; uniqueness comes from the numeric prefix.
inline std::string item_key(int phase, std::size_t seq, const std::string& label) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%06zu", seq);
    return std::to_string(phase) + ":" + buf + ":" + label;
}

inline std::string path_slug(const std::string& key) {
    std::string out;
    for (char ch : key) {
        if (ch == '/')
            out += "__";
        else
            out += ch;
    }
    return out;
}

// Append-only JSONL log of {"key":..., "data":...} envelopes. The append
// happens before the checkpoint advances, so a crash between the two leaves a
// log row without a checkpoint; the re-run recomputes and re-appends, and the
// reload keeps the last row per key.
class ArtifactLog {
public:
    explicit ArtifactLog(std::filesystem::path file) : m_file(std::move(file)) {
        auto text = read_file(m_file);
        if (!text) return;
        std::istringstream in(*text);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (trim(line).empty()) continue;
            try {
                auto j = json::parse(line);
                m_rows[j.at("key").get<std::string>()] = j.at("data");
            } catch (const json::exception& e) {
                throw SchemaError(m_file.filename().string() + " line " +
                                  std::to_string(line_no) + ": " + e.what());
            }
        }
    }

    bool has(const std::string& key) const { return m_rows.count(key) > 0; }

    const json& at(const std::string& key) const {
        auto it = m_rows.find(key);
        if (it == m_rows.end())
            throw Error(m_file.filename().string() + " lacks row '" + key +
                        "' though the checkpoint says it was processed; the state "
                        "directory is damaged");
        return it->second;
    }

    void append(const std::string& key, const json& data) {
        json env;
        env["key"] = key;
        env["data"] = data;
        append_line(m_file, env.dump());
        m_rows[key] = data;
    }

    // Sorted by key — identical to processing order.
    const std::map<std::string, json>& rows() const { return m_rows; }

private:
    std::filesystem::path m_file;
    std::map<std::string, json> m_rows;
};

// Runs compute(i) for each index in `pending` on up to `workers` threads and
// invokes commit(i, result) strictly in list order from the calling thread.
// Stops launching new work once should_stop() turns true, drains what is in
// flight (results are discarded, not committed), and returns false for an
// early stop. The first compute exception is rethrown after the drain.
inline bool ordered_parallel_for(const std::vector<std::size_t>& pending, int workers,
                                 const std::function<bool()>& should_stop,
                                 const std::function<json(std::size_t)>& compute,
                                 const std::function<void(std::size_t, json)>& commit) {
    std::deque<std::pair<std::size_t, std::future<json>>> inflight;
    std::size_t next = 0;
    std::exception_ptr failure;
    bool stopped = false;
    std::size_t window = static_cast<std::size_t>(std::max(1, workers));

    while (true) {
        while (!stopped && !failure && next < pending.size() && inflight.size() < window) {
            if (should_stop && should_stop()) {
                stopped = true;
                break;
            }
            std::size_t idx = pending[next++];
            inflight.emplace_back(idx, std::async(std::launch::async, compute, idx));
        }
        if (inflight.empty()) break;
        auto [idx, fut] = std::move(inflight.front());
        inflight.pop_front();
        if (failure || stopped) {
            fut.wait(); // drain; result (and any exception) is abandoned
            continue;
        }
        try {
            json result = fut.get();
            commit(idx, std::move(result));
            if (should_stop && should_stop()) stopped = true;
        } catch (...) {
            failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return !stopped;
}

} // namespace detail

// Directory layout for one run's private state.
struct RunPaths {
    std::filesystem::path state_file;   // checkpoints + cost ledger
    std::filesystem::path log_dir;      // per-stage artifact logs
    std::filesystem::path snapshot_dir; // repository snapshots (shared across runs)
    std::filesystem::path env_dir;      // virtualenv cache (shared across runs)
};

inline RunPaths run_paths_for(const PipelineConfig& cfg, const std::string& run_id) {
    RunPaths p;
    p.state_file = run_state_path(cfg.state_dir, run_id);
    p.log_dir = cfg.state_dir / run_id;
    p.snapshot_dir = cfg.state_dir / "snapshots";
    p.env_dir = cfg.state_dir / "envs";
    return p;
}

class PipelineRunner {
public:
    // `provider` may be null only in replay mode. `warn` may be invoked from
    // worker threads concurrently. `abort_requested` is polled between item
    // commits; returning true stops the current stage gracefully.
    PipelineRunner(PipelineConfig cfg, std::unique_ptr<ChatProvider> provider,
                   WarnFn warn = ignore_warnings, std::function<bool()> abort_requested = {})
        : m_cfg(std::move(cfg)), m_warn(std::move(warn)), m_abort(std::move(abort_requested)) {
        if (m_cfg.disciplines.empty())
            throw ConfigError("no disciplines configured; define [disciplines] ids and "
                              "seed_keywords in the config file");
        normalize_paths(m_cfg);
        m_config_hash = config_hash(m_cfg);
        std::string run_id = run_id_for(m_cfg);
        m_paths = run_paths_for(m_cfg, run_id);
        m_gateway = std::make_unique<Gateway>(gateway_config_for(m_cfg), std::move(provider));
        load_or_init_state(run_id);
        init_host_clients();
        m_deny = m_cfg.deny_list();
        m_provisioner = std::make_unique<VenvProvisioner>(m_paths.env_dir, m_cfg.env_python);
    }

    const PipelineConfig& config() const { return m_cfg; }
    const PipelineRun& run_doc() const { return m_run; }
    const RunPaths& paths() const { return m_paths; }
    Gateway& gateway() { return *m_gateway; }

    StageReport run_search() { return run_stage("search", [this](StageReport& r) { search_impl(r); }); }
    StageReport run_select() { return run_stage("select", [this](StageReport& r) { select_impl(r); }); }
    StageReport run_adapt() { return run_stage("adapt", [this](StageReport& r) { adapt_impl(r); }); }
    StageReport run_emit() { return run_stage("emit", [this](StageReport& r) { emit_impl(r); }); }

    // All four stages in order, stopping at the first that defers.
    std::vector<StageReport> run_all() {
        std::vector<StageReport> reports;
        reports.push_back(run_search());
        if (!reports.back().completed) return reports;
        reports.push_back(run_select());
        if (!reports.back().completed) return reports;
        reports.push_back(run_adapt());
        if (!reports.back().completed) return reports;
        reports.push_back(run_emit());
        return reports;
    }

private:
    // ---- state handling ----

    void load_or_init_state(const std::string& run_id) {
        auto text = read_file(m_paths.state_file);
        if (!text) {
            m_run.run_id = run_id;
            m_run.config_hash = m_config_hash;
            return;
        }
        try {
            auto doc = json::parse(*text);
            m_run = decode_run(doc.at("run"));
            m_gateway->ledger() = CostLedger::decode(doc.at("ledger"));
        } catch (const json::exception& e) {
            throw SchemaError("corrupt run state " + m_paths.state_file.string() + ": " +
                              e.what());
        }
        if (m_run.run_id != run_id || m_run.config_hash != m_config_hash)
            throw ConfigError("run state " + m_paths.state_file.string() +
                              " was produced by a different configuration");
    }

    void save_state() {
        json doc;
        doc["run"] = encode_run(m_run);
        doc["ledger"] = m_gateway->ledger().encode();
        auto tmp = m_paths.state_file;
        tmp += ".tmp";
        write_file(tmp, doc.dump(2) + "\n");
        std::filesystem::rename(tmp, m_paths.state_file);
    }

    void commit_item(const std::string& stage, const std::string& key, StageReport& rep) {
        advance_stage(m_run, stage, key);
        save_state();
        ++rep.processed;
    }

    bool abort_now() const { return m_abort && m_abort(); }

    static void defer(StageReport& rep, const std::string& reason) {
        rep.completed = false;
        rep.defer_reason = reason;
    }

    StageReport run_stage(const std::string& name, const std::function<void(StageReport&)>& impl) {
        StageReport rep;
        rep.stage = name;
        try {
            impl(rep);
        } catch (const ProviderUnavailable& e) {
            defer(rep, e.what());
        }
        save_state();
        return rep;
    }

    // ---- host clients ----

    void init_host_clients() {
        for (Host h : m_cfg.hosts) {
            std::filesystem::path fixture =
                h == Host::github ? m_cfg.github_fixture : m_cfg.pwc_fixture;
            std::unique_ptr<HostClient> client;
            if (!fixture.empty()) {
                auto fix = std::make_unique<FixtureHostClient>(fixture);
                if (fix->host() != h)
                    throw ConfigError("fixture " + fixture.string() + " declares host '" +
                                      to_string(fix->host()) + "' but is configured for '" +
                                      to_string(h) + "'");
                if (h == Host::github)
                    m_github_fixture = fix.get();
                else
                    m_pwc_fixture = fix.get();
                client = std::move(fix);
            } else if (m_cfg.mode == GatewayMode::replay) {
                throw ConfigError("replay mode runs offline; configure search." +
                                  std::string(h == Host::github ? "github_fixture"
                                                                : "pwc_fixture") +
                                  " or drop '" + to_string(h) + "' from search.hosts");
            } else if (h == Host::github) {
                auto token = github_token();
                if (!token)
                    throw ConfigError("AUTOSDT_GITHUB_TOKEN is required for live github search");
                client = std::make_unique<GithubGraphqlClient>(m_cfg.github_base_url, *token, 10,
                                                               m_cfg.host_rps);
            } else {
                client = std::make_unique<PapersWithCodeClient>(
                    m_cfg.pwc_base_url, m_cfg.pwc_readme_base_url, 10, m_cfg.host_rps);
            }
            m_clients.push_back(std::move(client));
        }
    }

    HostClient& client_for(Host h) {
        for (auto& c : m_clients)
            if (c->host() == h) return *c;
        throw ConfigError("repository host '" + to_string(h) + "' is not in search.hosts");
    }

    // Fixture repositories are "cloned" by copying a local directory.
    std::optional<std::filesystem::path> local_source_for(const RepoRef& repo) const {
        const FixtureHostClient* fix =
            repo.host == Host::github ? m_github_fixture : m_pwc_fixture;
        if (!fix) return std::nullopt;
        auto p = fix->clone_path(repo.owner, repo.name);
        if (p.empty()) return std::nullopt;
        return p;
    }

    // ---- search ----

    void search_impl(StageReport& rep) {
        const std::string stage = "search";
        detail::ArtifactLog keyword_log(m_paths.log_dir / "search.keywords.jsonl");
        detail::ArtifactLog hit_log(m_paths.log_dir / "search.hits.jsonl");
        detail::ArtifactLog classified_log(m_paths.log_dir / "search.classified.jsonl");

        // Phase 1: keyword expansion, one model call per discipline.
        std::map<std::string, std::vector<std::string>> keywords_by_discipline;
        for (std::size_t i = 0; i < m_cfg.disciplines.size(); ++i) {
            const auto& disc = m_cfg.disciplines[i];
            std::string key = detail::item_key(1, i, disc.id);
            if (stage_has_processed(m_run, stage, key)) {
                ++rep.skipped;
            } else {
                if (abort_now()) return defer(rep, "interrupted");
                auto kws = expand_keywords(*m_gateway, disc, m_warn);
                keyword_log.append(key, {{"discipline", disc.id}, {"keywords", kws}});
                commit_item(stage, key, rep);
            }
            keywords_by_discipline[disc.id] =
                keyword_log.at(key).at("keywords").get<std::vector<std::string>>();
        }

        // Phase 2: one host query per (discipline, host, keyword) triple.
        struct QueryItem {
            std::string key;
            SearchQuery query;
        };
        std::vector<QueryItem> queries;
        for (const auto& disc : m_cfg.disciplines)
            for (Host h : m_cfg.hosts)
                for (const auto& kw : keywords_by_discipline[disc.id]) {
                    std::string label = disc.id + "/" + to_string(h) + "/" + kw;
                    queries.push_back({detail::item_key(2, queries.size(), label),
                                       SearchQuery{disc.id, kw, h}});
                }
        std::vector<std::size_t> pending;
        for (std::size_t i = 0; i < queries.size(); ++i) {
            if (stage_has_processed(m_run, stage, queries[i].key))
                ++rep.skipped;
            else
                pending.push_back(i);
        }
        bool finished = detail::ordered_parallel_for(
            pending, m_cfg.workers, m_abort,
            [&](std::size_t i) {
                const auto& q = queries[i];
                auto repos = search_host(client_for(q.query.host), q.query, m_cfg.min_stars,
                                         m_cfg.language_filter);
                json arr = json::array();
                for (const auto& r : repos) arr.push_back(encode_repo(r));
                return json{{"discipline", q.query.discipline_id},
                                      {"host", to_string(q.query.host)},
                                      {"keyword", q.query.keyword},
                                      {"repos", std::move(arr)}};
            },
            [&](std::size_t i, json data) {
                hit_log.append(queries[i].key, data);
                commit_item(stage, queries[i].key, rep);
            });
        if (!finished) return defer(rep, "interrupted");

        // Dedupe + exclusion is pure and cheap, so it is recomputed from the
        // hit log on every invocation rather than checkpointed. Running it
        // before classification means duplicates cost one model call, not
        // many.
        std::vector<RepoRef> all_hits;
        for (const auto& q : queries)
            for (const auto& jr : hit_log.at(q.key).at("repos")) all_hits.push_back(decode_repo(jr));
        ExclusionList exclusions;
        if (!m_cfg.exclude_file.empty()) exclusions = ExclusionList::from_file(m_cfg.exclude_file);
        auto deduped = dedupe_and_exclude(all_hits, exclusions);

        // Phase 3: README research classification per unique repository.
        std::vector<std::string> classify_keys;
        for (std::size_t i = 0; i < deduped.size(); ++i)
            classify_keys.push_back(detail::item_key(3, i, deduped[i].key()));
        pending.clear();
        for (std::size_t i = 0; i < deduped.size(); ++i) {
            if (stage_has_processed(m_run, stage, classify_keys[i]))
                ++rep.skipped;
            else
                pending.push_back(i);
        }
        finished = detail::ordered_parallel_for(
            pending, m_cfg.workers, m_abort,
            [&](std::size_t i) {
                RepoRef repo = deduped[i];
                auto readme = client_for(repo.host).fetch_readme(repo.owner, repo.name);
                std::string keyword = repo.found_by_queries.empty()
                                          ? (repo.discipline_ids.empty() ? "scientific computing"
                                                                         : repo.discipline_ids[0])
                                          : repo.found_by_queries[0];
                classify_repository(*m_gateway, repo, readme, keyword, m_warn);
                return json{{"repo", encode_repo(repo)}};
            },
            [&](std::size_t i, json data) {
                classified_log.append(classify_keys[i], data);
                commit_item(stage, classify_keys[i], rep);
            });
        if (!finished) return defer(rep, "interrupted");

        // Phase 4: write the stage artifact — every unique repository with its
        // verdict; downstream stages pick the research subset.
        std::string lines;
        std::size_t research = 0;
        for (const auto& key : classify_keys) {
            const auto& jr = classified_log.at(key).at("repo");
            if (jr.at("research_verdict").get<std::string>() == "research") ++research;
            lines += jr.dump();
            lines += "\n";
        }
        if (abort_now()) return defer(rep, "interrupted");
        write_file(m_cfg.out_dir / "repos.jsonl", lines);
        std::string final_key = detail::item_key(4, 0, "finalize");
        if (stage_has_processed(m_run, stage, final_key))
            ++rep.skipped;
        else
            commit_item(stage, final_key, rep);

        rep.notes.push_back(std::to_string(queries.size()) + " queries across " +
                            std::to_string(m_cfg.disciplines.size()) + " discipline(s)");
        rep.notes.push_back(std::to_string(all_hits.size()) + " hits, " +
                            std::to_string(deduped.size()) +
                            " unique after dedupe and exclusion");
        rep.notes.push_back(std::to_string(research) + " of " + std::to_string(deduped.size()) +
                            " classified as research");
    }

    // ---- select ----

    std::vector<RepoRef> load_research_repos() const {
        auto text = read_file(m_cfg.out_dir / "repos.jsonl");
        if (!text)
            throw ConfigError("no repos.jsonl under " + m_cfg.out_dir.string() +
                              "; run the search stage first");
        std::vector<RepoRef> research;
        for (const auto& line : split_lines(*text)) {
            if (trim(line).empty()) continue;
            auto repo = decode_repo(json::parse(line));
            if (repo.research_verdict == ResearchVerdict::research) research.push_back(repo);
        }
        return research;
    }

    json select_one(const RepoRef& repo) {
        json row;
        row["repo_key"] = repo.key();
        row["repo_name"] = repo.name;
        row["candidates"] = json::array();
        row["workspaces"] = json::array();

        RepoSnapshot snap;
        try {
            snap = snapshot_repo(repo, m_paths.snapshot_dir / detail::path_slug(repo.key()),
                                 local_source_for(repo));
        } catch (const CloneFailed& e) { // includes repositories that vanished
            m_warn(repo.key() + ": snapshot failed, skipping (" + std::string(e.what()) + ")");
            row["error"] = e.what();
            return row;
        }
        row["repo_name"] = snap.repo_name;

        auto candidates = rule_filter_files(snap, m_deny, m_cfg.max_lines, m_warn);
        for (auto& c : candidates) {
            if (c.rule_verdict == RuleVerdict::kept) {
                auto code = read_file(snap.local_root / c.rel_path);
                if (!code) {
                    c.dropped_reason = "file vanished between filtering and judging";
                } else if (judge_scientific(*m_gateway, c, *code, m_warn) ==
                               ScienceVerdict::science_yes &&
                           locate_dependencies(*m_gateway, c, *code, snap, m_warn)) {
                    auto ws_root = m_cfg.out_dir / "workspaces" /
                                   task_id_for(c.repo_key, c.rel_path);
                    std::error_code ec;
                    std::filesystem::remove_all(ws_root, ec); // rebuild from scratch
                    row["workspaces"].push_back(
                        encode_workspace(build_workspace(snap, c, ws_root)));
                }
            }
            row["candidates"].push_back(encode_candidate(c));
        }
        return row;
    }

    void select_impl(StageReport& rep) {
        const std::string stage = "select";
        auto repos = load_research_repos();
        detail::ArtifactLog log(m_paths.log_dir / "select.repos.jsonl");

        std::vector<std::string> keys;
        for (std::size_t i = 0; i < repos.size(); ++i)
            keys.push_back(detail::item_key(1, i, repos[i].key()));
        std::vector<std::size_t> pending;
        for (std::size_t i = 0; i < repos.size(); ++i) {
            if (stage_has_processed(m_run, stage, keys[i]))
                ++rep.skipped;
            else
                pending.push_back(i);
        }
        bool finished = detail::ordered_parallel_for(
            pending, m_cfg.workers, m_abort,
            [&](std::size_t i) { return select_one(repos[i]); },
            [&](std::size_t i, json data) {
                log.append(keys[i], data);
                commit_item(stage, keys[i], rep);
            });
        if (!finished) return defer(rep, "interrupted");

        std::string lines;
        std::size_t files = 0, kept = 0, science = 0, workspaces = 0, errors = 0;
        for (const auto& key : keys) {
            const auto& row = log.at(key);
            if (row.contains("error")) ++errors;
            for (const auto& jc : row.at("candidates")) {
                ++files;
                if (jc.at("rule_verdict").get<std::string>() == "kept") ++kept;
                if (jc.at("science_verdict").get<std::string>() == "science_yes") ++science;
                lines += jc.dump();
                lines += "\n";
            }
            workspaces += row.at("workspaces").size();
        }
        if (abort_now()) return defer(rep, "interrupted");
        write_file(m_cfg.out_dir / "candidates.jsonl", lines);
        std::string final_key = detail::item_key(2, 0, "finalize");
        if (stage_has_processed(m_run, stage, final_key))
            ++rep.skipped;
        else
            commit_item(stage, final_key, rep);

        rep.notes.push_back(std::to_string(repos.size()) + " research repo(s), " +
                            std::to_string(errors) + " unavailable");
        rep.notes.push_back(std::to_string(files) + " .py files, " + std::to_string(kept) +
                            " past the rule filter, " + std::to_string(science) +
                            " judged scientific");
        rep.notes.push_back(std::to_string(workspaces) + " workspace(s) built");
    }

    // ---- adapt ----

    std::map<std::string, RepoRef> load_repo_map() const {
        auto text = read_file(m_cfg.out_dir / "repos.jsonl");
        if (!text)
            throw ConfigError("no repos.jsonl under " + m_cfg.out_dir.string() +
                              "; run the search stage first");
        std::map<std::string, RepoRef> by_key;
        for (const auto& line : split_lines(*text)) {
            if (trim(line).empty()) continue;
            auto repo = decode_repo(json::parse(line));
            by_key[repo.key()] = repo;
        }
        return by_key;
    }

    json adapt_one(const Workspace& ws, const std::string& repo_name,
                             const std::map<std::string, RepoRef>& repo_meta) {
        AdaptInputs in;
        in.candidate = ws.candidate;
        in.workspace_root = ws.root;
        in.repo_name = repo_name;
        in.workspace_files = ws.copied_paths;
        in.max_iterations = m_cfg.max_iterations;
        in.exec_timeout_s = m_cfg.exec_timeout_s;
        in.allow_net = m_cfg.allow_net;
        auto code_path = std::filesystem::path(ws.root) / workspace_dataset_root(repo_name) /
                         ws.candidate.rel_path;
        auto code = read_file(code_path);
        if (!code)
            throw Error(ws.candidate.id() + ": workspace lost its source file (" +
                        code_path.string() + "); re-run the select stage");
        in.original_code = *code;

        auto state = self_debug_loop(*m_gateway, *m_provisioner, in, m_warn);
        json out;
        out["state"] = encode_adaptation(state);
        out["draft"] = nullptr;
        if (state.status != AdaptStatus::adapted) return out;

        auto instruction = generate_instruction(*m_gateway, state, in, m_warn);
        auto it = repo_meta.find(ws.candidate.repo_key);
        if (it == repo_meta.end())
            throw Error("repos.jsonl lacks " + ws.candidate.repo_key +
                        "; search and select outputs disagree");
        const RepoRef& repo = it->second;

        TaskInstance t;
        t.task_id = task_id_for(ws.candidate.repo_key, ws.candidate.rel_path);
        t.discipline_id =
            repo.discipline_ids.empty() ? "unspecified" : repo.discipline_ids.front();
        t.repo_key = repo.key();
        t.repo_url = repo.url;
        t.source_path = ws.candidate.rel_path;
        t.instruction = instruction.text;
        t.adapted_code = state.current_code;
        t.requirements = state.requirements;
        t.output_files = state.produced_files;
        t.iterations_used = state.iteration;
        t.license_id = repo.license_id;
        json prov;
        prov["run_id"] = m_run.run_id;
        prov["config_hash"] = m_run.config_hash;
        prov["models"] = {{"general", m_cfg.general_model}, {"coder", m_cfg.coder_model}};
        prov["instruction_prompt_hash"] = prompt_hash_for(
            m_cfg.general_model,
            render(TemplateId::instruct_gen, {{"code", state.current_code}}));
        if (instruction.weak) prov["weak_instruction"] = true;
        t.provenance = std::move(prov);
        out["draft"] = encode_task(t);
        return out;
    }

    void adapt_impl(StageReport& rep) {
        const std::string stage = "adapt";
        if (!std::filesystem::exists(m_cfg.out_dir / "candidates.jsonl"))
            throw ConfigError("no candidates.jsonl under " + m_cfg.out_dir.string() +
                              "; run the select stage first");
        auto repo_meta = load_repo_map();
        detail::ArtifactLog select_log(m_paths.log_dir / "select.repos.jsonl");

        struct Item {
            std::string key;
            Workspace ws;
            std::string repo_name;
        };
        std::vector<Item> items;
        for (const auto& [key, row] : select_log.rows()) {
            std::string repo_name = row.at("repo_name").get<std::string>();
            for (const auto& jw : row.at("workspaces")) {
                auto ws = decode_workspace(jw);
                std::string item_label = ws.candidate.id();
                items.push_back(
                    {detail::item_key(1, items.size(), item_label), std::move(ws), repo_name});
            }
        }
        detail::ArtifactLog adapt_log(m_paths.log_dir / "adapt.results.jsonl");
        std::vector<std::size_t> pending;
        for (std::size_t i = 0; i < items.size(); ++i) {
            if (stage_has_processed(m_run, stage, items[i].key))
                ++rep.skipped;
            else
                pending.push_back(i);
        }
        bool finished = detail::ordered_parallel_for(
            pending, m_cfg.workers, m_abort,
            [&](std::size_t i) { return adapt_one(items[i].ws, items[i].repo_name, repo_meta); },
            [&](std::size_t i, json data) {
                adapt_log.append(items[i].key, data);
                commit_item(stage, items[i].key, rep);
            });
        if (!finished) return defer(rep, "interrupted");

        std::string lines;
        std::size_t adapted = 0;
        for (const auto& item : items) {
            const auto& row = adapt_log.at(item.key);
            if (!row.at("draft").is_null()) ++adapted;
            lines += row.dump();
            lines += "\n";
        }
        if (abort_now()) return defer(rep, "interrupted");
        write_file(m_cfg.out_dir / "adapted.jsonl", lines);
        std::string final_key = detail::item_key(2, 0, "finalize");
        if (stage_has_processed(m_run, stage, final_key))
            ++rep.skipped;
        else
            commit_item(stage, final_key, rep);

        rep.notes.push_back(std::to_string(adapted) + " of " + std::to_string(items.size()) +
                            " candidate(s) adapted; " + std::to_string(items.size() - adapted) +
                            " discarded");
    }

    // ---- emit ----

    void emit_impl(StageReport& rep) {
        const std::string stage = "emit";
        if (!std::filesystem::exists(m_cfg.out_dir / "adapted.jsonl"))
            throw ConfigError("no adapted.jsonl under " + m_cfg.out_dir.string() +
                              "; run the adapt stage first");
        detail::ArtifactLog adapt_log(m_paths.log_dir / "adapt.results.jsonl");
        CorpusWriter writer(m_cfg.out_dir / "tasks.jsonl");

        std::size_t seq = 0;
        for (const auto& [log_key, row] : adapt_log.rows()) {
            if (row.at("draft").is_null()) continue;
            auto draft = decode_task(row.at("draft"));
            std::string key = detail::item_key(1, seq++, draft.task_id);
            if (stage_has_processed(m_run, stage, key)) {
                ++rep.skipped;
                continue;
            }
            if (abort_now()) return defer(rep, "interrupted");
            try {
                writer.emit(draft);
            } catch (const DuplicateTask&) {
                // A crash between the corpus append and the checkpoint save
                // left the line in place; the item is done.
            }
            commit_item(stage, key, rep);
        }
        rep.notes.push_back(std::to_string(rep.processed) + " task(s) emitted; corpus holds " +
                            std::to_string(writer.emitted()));
    }

    PipelineConfig m_cfg;
    WarnFn m_warn;
    std::function<bool()> m_abort;
    std::string m_config_hash;
    RunPaths m_paths;
    PipelineRun m_run;
    std::unique_ptr<Gateway> m_gateway;
    std::vector<std::unique_ptr<HostClient>> m_clients;
    const FixtureHostClient* m_github_fixture = nullptr;
    const FixtureHostClient* m_pwc_fixture = nullptr;
    DirectoryDenyList m_deny;
    std::unique_ptr<VenvProvisioner> m_provisioner;
};

} // namespace autosdt
