#pragma once

#include <autosdt/errors.hpp>
#include <autosdt/fsio.hpp>
#include <autosdt/hash.hpp>
#include <autosdt/strings.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace autosdt {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Identity

// Canonical repository key: lowercase "owner/name", both parts trimmed.
inline std::string canonical_repo_key(std::string_view owner, std::string_view name) {
    std::string o = to_lower(trim(owner));
    std::string n = to_lower(trim(name));
    if (o.empty() || n.empty())
        throw InvalidIdentifier("repository owner and name must be non-empty");
    return o + "/" + n;
}

// Stable task identifier: first 16 hex chars of SHA-256 over the repo key and
// the repo-relative source path, newline-separated.
inline std::string task_id_for(std::string_view repo_key, std::string_view rel_path) {
    return sha256_hex16(std::string(repo_key) + "\n" + std::string(rel_path));
}

// ---------------------------------------------------------------------------
// Enums

enum class Host { github, paperswithcode };
enum class ResearchVerdict { unjudged, research, not_research };
enum class RuleVerdict { kept, dropped_lines, dropped_dir };
enum class ScienceVerdict { unjudged, science_yes, science_no };
enum class DatasetLabel { none, builtin_loader, local_files };

inline std::string to_string(Host h) {
    return h == Host::github ? "github" : "paperswithcode";
}
inline Host host_from_string(const std::string& s) {
    if (s == "github") return Host::github;
    if (s == "paperswithcode") return Host::paperswithcode;
    throw SchemaError("unknown host: " + s);
}

inline std::string to_string(ResearchVerdict v) {
    switch (v) {
        case ResearchVerdict::unjudged: return "unjudged";
        case ResearchVerdict::research: return "research";
        case ResearchVerdict::not_research: return "not_research";
    }
    throw SchemaError("bad research verdict");
}
inline ResearchVerdict research_verdict_from_string(const std::string& s) {
    if (s == "unjudged") return ResearchVerdict::unjudged;
    if (s == "research") return ResearchVerdict::research;
    if (s == "not_research") return ResearchVerdict::not_research;
    throw SchemaError("unknown research verdict: " + s);
}

inline std::string to_string(RuleVerdict v) {
    switch (v) {
        case RuleVerdict::kept: return "kept";
        case RuleVerdict::dropped_lines: return "dropped_lines";
        case RuleVerdict::dropped_dir: return "dropped_dir";
    }
    throw SchemaError("bad rule verdict");
}
inline RuleVerdict rule_verdict_from_string(const std::string& s) {
    if (s == "kept") return RuleVerdict::kept;
    if (s == "dropped_lines") return RuleVerdict::dropped_lines;
    if (s == "dropped_dir") return RuleVerdict::dropped_dir;
    throw SchemaError("unknown rule verdict: " + s);
}

inline std::string to_string(ScienceVerdict v) {
    switch (v) {
        case ScienceVerdict::unjudged: return "unjudged";
        case ScienceVerdict::science_yes: return "science_yes";
        case ScienceVerdict::science_no: return "science_no";
    }
    throw SchemaError("bad science verdict");
}
inline ScienceVerdict science_verdict_from_string(const std::string& s) {
    if (s == "unjudged") return ScienceVerdict::unjudged;
    if (s == "science_yes") return ScienceVerdict::science_yes;
    if (s == "science_no") return ScienceVerdict::science_no;
    throw SchemaError("unknown science verdict: " + s);
}

inline std::string to_string(DatasetLabel l) {
    switch (l) {
        case DatasetLabel::none: return "none";
        case DatasetLabel::builtin_loader: return "builtin";
        case DatasetLabel::local_files: return "local";
    }
    throw SchemaError("bad dataset label");
}
inline DatasetLabel dataset_label_from_string(const std::string& s) {
    if (s == "none") return DatasetLabel::none;
    if (s == "builtin") return DatasetLabel::builtin_loader;
    if (s == "local") return DatasetLabel::local_files;
    throw SchemaError("unknown dataset label: " + s);
}

// ---------------------------------------------------------------------------
// Core records

struct Discipline {
    std::string id;           // lowercase kebab-case
    std::vector<std::string> seed_keywords;
};

inline void validate_discipline(const Discipline& d) {
    if (d.id.empty()) throw InvalidIdentifier("discipline id is empty");
    for (char c : d.id) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-';
        if (!ok) throw InvalidIdentifier("discipline id must be lowercase kebab-case: " + d.id);
    }
    if (d.seed_keywords.empty()) throw EmptySeeds(d.id);
}

struct RepoRef {
    Host host = Host::github;
    std::string owner;
    std::string name;
    std::string url;
    std::int64_t stars = 0;
    std::string primary_language;
    std::vector<std::string> discipline_ids;
    std::vector<std::string> found_by_queries;
    ResearchVerdict research_verdict = ResearchVerdict::unjudged;
    std::vector<std::string> paper_links;
    std::string license_id; // empty when the host reported none

    std::string key() const { return canonical_repo_key(owner, name); }
};

inline json encode_repo(const RepoRef& r) {
    json j;
    j["host"] = to_string(r.host);
    j["owner"] = r.owner;
    j["name"] = r.name;
    j["url"] = r.url;
    j["stars"] = r.stars;
    j["primary_language"] = r.primary_language;
    j["discipline_ids"] = r.discipline_ids;
    j["found_by_queries"] = r.found_by_queries;
    j["research_verdict"] = to_string(r.research_verdict);
    j["paper_links"] = r.paper_links;
    j["license"] = r.license_id.empty() ? "none" : r.license_id;
    return j;
}

inline RepoRef decode_repo(const json& j) {
    RepoRef r;
    r.host = host_from_string(j.at("host").get<std::string>());
    r.owner = j.at("owner").get<std::string>();
    r.name = j.at("name").get<std::string>();
    r.url = j.at("url").get<std::string>();
    r.stars = j.at("stars").get<std::int64_t>();
    r.primary_language = j.at("primary_language").get<std::string>();
    r.discipline_ids = j.at("discipline_ids").get<std::vector<std::string>>();
    r.found_by_queries = j.at("found_by_queries").get<std::vector<std::string>>();
    r.research_verdict = research_verdict_from_string(j.at("research_verdict").get<std::string>());
    r.paper_links = j.at("paper_links").get<std::vector<std::string>>();
    std::string lic = j.at("license").get<std::string>();
    r.license_id = lic == "none" ? "" : lic;
    return r;
}

struct CandidateFile {
    std::string repo_key;
    std::string rel_path;   // repo-relative, generic separators
    std::size_t line_count = 0;
    RuleVerdict rule_verdict = RuleVerdict::kept;
    ScienceVerdict science_verdict = ScienceVerdict::unjudged;
    DatasetLabel dataset_label = DatasetLabel::none;
    std::vector<std::string> dataset_paths;
    std::vector<std::string> module_paths;
    std::string dropped_reason; // non-empty when a later stage abandoned it

    std::string id() const { return repo_key + ":" + rel_path; }
};

inline json encode_candidate(const CandidateFile& c) {
    json j;
    j["repo_key"] = c.repo_key;
    j["rel_path"] = c.rel_path;
    j["line_count"] = c.line_count;
    j["rule_verdict"] = to_string(c.rule_verdict);
    j["science_verdict"] = to_string(c.science_verdict);
    j["dataset_label"] = to_string(c.dataset_label);
    j["dataset_paths"] = c.dataset_paths;
    j["module_paths"] = c.module_paths;
    if (!c.dropped_reason.empty()) j["dropped_reason"] = c.dropped_reason;
    return j;
}

inline CandidateFile decode_candidate(const json& j) {
    CandidateFile c;
    c.repo_key = j.at("repo_key").get<std::string>();
    c.rel_path = j.at("rel_path").get<std::string>();
    c.line_count = j.at("line_count").get<std::size_t>();
    c.rule_verdict = rule_verdict_from_string(j.at("rule_verdict").get<std::string>());
    c.science_verdict = science_verdict_from_string(j.at("science_verdict").get<std::string>());
    c.dataset_label = dataset_label_from_string(j.at("dataset_label").get<std::string>());
    c.dataset_paths = j.at("dataset_paths").get<std::vector<std::string>>();
    c.module_paths = j.at("module_paths").get<std::vector<std::string>>();
    if (j.contains("dropped_reason")) c.dropped_reason = j.at("dropped_reason").get<std::string>();
    return c;
}

struct Workspace {
    std::string root;       // absolute directory holding benchmark/ and pred_results/
    CandidateFile candidate;
    std::vector<std::string> copied_paths; // repo-relative, sorted
    std::uint64_t byte_size = 0;
};

inline json encode_workspace(const Workspace& w) {
    json j;
    j["root"] = w.root;
    j["candidate"] = encode_candidate(w.candidate);
    j["copied_paths"] = w.copied_paths;
    j["byte_size"] = w.byte_size;
    return j;
}

inline Workspace decode_workspace(const json& j) {
    Workspace w;
    w.root = j.at("root").get<std::string>();
    w.candidate = decode_candidate(j.at("candidate"));
    w.copied_paths = j.at("copied_paths").get<std::vector<std::string>>();
    w.byte_size = j.at("byte_size").get<std::uint64_t>();
    return w;
}

// ---------------------------------------------------------------------------
// Task instances (one corpus line each)

struct TaskInstance {
    std::string task_id;
    std::string discipline_id;
    std::string repo_key;
    std::string repo_url;
    std::string source_path;
    std::string instruction;
    std::string adapted_code;
    std::vector<std::string> requirements;
    std::vector<std::string> output_files; // all under pred_results/
    int iterations_used = 0;               // 1..3
    json provenance = json::object();      // models, prompt hashes, timestamps per step
    std::string license_id;                // empty when unknown
    std::optional<double> difficulty;      // written only by external annotation
    std::optional<json> expert_flags;      // written only by external annotation
};

inline void validate_task(const TaskInstance& t) {
    if (t.task_id.size() != 16)
        throw SchemaError("task_id must be 16 hex chars: " + t.task_id);
    for (char c : t.task_id) {
        bool ok = (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
        if (!ok) throw SchemaError("task_id must be lowercase hex: " + t.task_id);
    }
    if (t.repo_key.empty()) throw SchemaError("task has no repo key");
    if (t.source_path.empty()) throw SchemaError("task has no source path");
    if (t.task_id != task_id_for(t.repo_key, t.source_path))
        throw SchemaError("task_id does not match its repo key and source path");
    if (t.discipline_id.empty()) throw SchemaError("task has no discipline");
    if (t.instruction.empty()) throw SchemaError("task has no instruction");
    if (t.adapted_code.empty()) throw SchemaError("task has no code");
    if (t.iterations_used < 1 || t.iterations_used > 3)
        throw SchemaError("iterations_used out of range: " + std::to_string(t.iterations_used));
    if (t.output_files.empty()) throw SchemaError("task produced no output files");
    for (const auto& f : t.output_files) {
        if (!starts_with(f, "pred_results/"))
            throw SchemaError("output file outside pred_results/: " + f);
    }
}

inline json encode_task(const TaskInstance& t) {
    json prov = t.provenance.is_object() ? t.provenance : json::object();
    prov["repo_key"] = t.repo_key;
    json j;
    j["task_id"] = t.task_id;
    j["discipline"] = t.discipline_id;
    j["repo_url"] = t.repo_url;
    j["source_path"] = t.source_path;
    j["instruction"] = t.instruction;
    j["adapted_code"] = t.adapted_code;
    j["requirements"] = t.requirements;
    j["output_files"] = t.output_files;
    j["iterations_used"] = t.iterations_used;
    j["license"] = t.license_id.empty() ? "none" : t.license_id;
    j["provenance"] = prov;
    if (t.difficulty) j["difficulty"] = *t.difficulty;
    if (t.expert_flags) j["expert_flags"] = *t.expert_flags;
    return j;
}

inline TaskInstance decode_task(const json& j) {
    TaskInstance t;
    t.task_id = j.at("task_id").get<std::string>();
    t.discipline_id = j.at("discipline").get<std::string>();
    t.repo_url = j.at("repo_url").get<std::string>();
    t.source_path = j.at("source_path").get<std::string>();
    t.instruction = j.at("instruction").get<std::string>();
    t.adapted_code = j.at("adapted_code").get<std::string>();
    t.requirements = j.at("requirements").get<std::vector<std::string>>();
    t.output_files = j.at("output_files").get<std::vector<std::string>>();
    t.iterations_used = j.at("iterations_used").get<int>();
    std::string lic = j.at("license").get<std::string>();
    t.license_id = lic == "none" ? "" : lic;
    t.provenance = j.at("provenance");
    if (!t.provenance.is_object() || !t.provenance.contains("repo_key"))
        throw SchemaError("task provenance lacks repo_key: " + t.task_id);
    t.repo_key = t.provenance.at("repo_key").get<std::string>();
    if (j.contains("difficulty")) t.difficulty = j.at("difficulty").get<double>();
    if (j.contains("expert_flags")) t.expert_flags = j.at("expert_flags");
    return t;
}

// ---------------------------------------------------------------------------
// Pipeline runs and per-stage checkpoints

inline const std::vector<std::string>& pipeline_stages() {
    static const std::vector<std::string> kStages = {"search", "select", "adapt", "emit"};
    return kStages;
}

struct StageCheckpoint {
    std::string last_key;
    std::int64_t count = 0;
};

struct PipelineRun {
    std::string run_id;
    std::map<std::string, StageCheckpoint> stage_checkpoints;
    std::string config_hash;
};

inline bool is_pipeline_stage(const std::string& stage) {
    for (const auto& s : pipeline_stages())
        if (s == stage) return true;
    return false;
}

// Item keys within a stage are committed in lexicographic order, so a key at
// or below the recorded high-water mark means the item was already processed.
inline bool stage_has_processed(const PipelineRun& run, const std::string& stage,
                                const std::string& item_key) {
    if (!is_pipeline_stage(stage)) throw UnknownStage(stage);
    auto it = run.stage_checkpoints.find(stage);
    if (it == run.stage_checkpoints.end()) return false;
    return !it->second.last_key.empty() && item_key <= it->second.last_key;
}

// Advances the stage checkpoint past `item_key`. Idempotent per key: a key at
// or below the high-water mark leaves the checkpoint untouched.
inline void advance_stage(PipelineRun& run, const std::string& stage,
                          const std::string& item_key) {
    if (!is_pipeline_stage(stage)) throw UnknownStage(stage);
    if (stage_has_processed(run, stage, item_key)) return;
    auto& cp = run.stage_checkpoints[stage];
    cp.last_key = item_key;
    cp.count += 1;
}

inline json encode_run(const PipelineRun& run) {
    json stages = json::object();
    for (const auto& [stage, cp] : run.stage_checkpoints) {
        stages[stage] = json{{"last_key", cp.last_key}, {"count", cp.count}};
    }
    json j;
    j["run_id"] = run.run_id;
    j["config_hash"] = run.config_hash;
    j["stages"] = stages;
    return j;
}

inline PipelineRun decode_run(const json& j) {
    PipelineRun run;
    run.run_id = j.at("run_id").get<std::string>();
    run.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& [stage, cp] : j.at("stages").items()) {
        StageCheckpoint c;
        c.last_key = cp.at("last_key").get<std::string>();
        c.count = cp.at("count").get<std::int64_t>();
        run.stage_checkpoints[stage] = c;
    }
    return run;
}

inline fs::path run_state_path(const fs::path& state_dir, const std::string& run_id) {
    return state_dir / (run_id + ".json");
}

} // namespace autosdt
