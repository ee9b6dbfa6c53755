#pragma once

#include <autosdt/errors.hpp>
#include <autosdt/fsio.hpp>
#include <autosdt/llm_gateway.hpp>
#include <autosdt/model.hpp>
#include <autosdt/reply_parsing.hpp>
#include <autosdt/search.hpp>
#include <autosdt/strings.hpp>
#include <autosdt/subprocess.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace autosdt {

struct TreeEntry {
    std::string path; // repo-relative, generic separators
    std::uint64_t bytes = 0;
};

struct RepoSnapshot {
    std::string repo_key;
    std::string repo_name; // original-case directory name, reused in workspaces
    std::filesystem::path local_root;
    std::vector<TreeEntry> file_tree; // sorted by path, regular files only
    std::uint64_t total_bytes = 0;

    std::vector<std::string> paths() const {
        std::vector<std::string> out;
        out.reserve(file_tree.size());
        for (const auto& e : file_tree) out.push_back(e.path);
        return out;
    }
    bool has_file(const std::string& rel) const {
        for (const auto& e : file_tree)
            if (e.path == rel) return true;
        return false;
    }
    bool has_dir(const std::string& rel) const {
        std::string prefix = rel;
        while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
        prefix += '/';
        for (const auto& e : file_tree)
            if (starts_with(e.path, prefix)) return true;
        return false;
    }
};

// Directory names whose files are helper/config material, not analysis entry
// points. Matching is exact per path segment after case-folding — a substring
// rule would eat directories like "contest/".
struct DirectoryDenyList {
    std::set<std::string> names;

    static DirectoryDenyList defaults() {
        return {{"tests", "test", "config", "configs", "utils", "docs", "examples_ci",
                 ".github"}};
    }

    bool blocks(const std::string& rel_path) const {
        for (const auto& segment : split(rel_path, '/'))
            if (names.count(to_lower(segment)) > 0) return true;
        return false;
    }
};

namespace detail {

inline void collect_tree(const std::filesystem::path& root, RepoSnapshot& snap) {
    for (const auto& rel : list_files(root)) {
        TreeEntry entry;
        entry.path = rel;
        std::error_code ec;
        auto size = std::filesystem::file_size(root / rel, ec);
        entry.bytes = ec ? 0 : static_cast<std::uint64_t>(size);
        snap.total_bytes += entry.bytes;
        snap.file_tree.push_back(std::move(entry));
    }
}

inline void copy_tree(const std::filesystem::path& from, const std::filesystem::path& to) {
    namespace fs = std::filesystem;
    fs::create_directories(to);
    for (auto it = fs::recursive_directory_iterator(from); it != fs::recursive_directory_iterator();
         ++it) {
        const auto& entry = *it;
        if (entry.is_symlink()) {
            if (entry.is_directory()) it.disable_recursion_pending();
            continue;
        }
        if (entry.is_directory()) {
            if (entry.path().filename() == ".git") {
                it.disable_recursion_pending();
                continue;
            }
            fs::create_directories(to / fs::relative(entry.path(), from));
        } else if (entry.is_regular_file()) {
            auto dest = to / fs::relative(entry.path(), from);
            fs::create_directories(dest.parent_path());
            fs::copy_file(entry.path(), dest, fs::copy_options::overwrite_existing);
        }
    }
}

inline bool looks_gone(const std::string& stderr_tail) {
    return contains_ci(stderr_tail, "not found") || contains_ci(stderr_tail, "404") ||
           contains_ci(stderr_tail, "does not exist") || contains_ci(stderr_tail, "gone");
}

} // namespace detail

// Materializes the repository working tree at `dest` (shallow, no history) and
// indexes every regular file. `local_source` short-circuits cloning for
// offline fixture roots; `file://` URLs behave the same way.
inline RepoSnapshot snapshot_repo(const RepoRef& repo, const std::filesystem::path& dest,
                                  const std::optional<std::filesystem::path>& local_source =
                                      std::nullopt,
                                  int clone_timeout_s = 600) {
    namespace fs = std::filesystem;
    RepoSnapshot snap;
    snap.repo_key = repo.key();
    snap.repo_name = repo.name;
    snap.local_root = dest;

    std::optional<fs::path> source = local_source;
    if (!source && starts_with(repo.url, "file://"))
        source = fs::path(repo.url.substr(std::string("file://").size()));

    std::error_code ec;
    fs::remove_all(dest, ec);
    fs::create_directories(dest.parent_path().empty() ? fs::path(".") : dest.parent_path());

    if (source) {
        if (!fs::is_directory(*source))
            throw Gone("repository source vanished: " + source->string());
        detail::copy_tree(*source, dest);
    } else {
        RunSpec spec;
        spec.argv = {"git", "clone", "--depth", "1", "--quiet", repo.url, dest.string()};
        spec.timeout_s = clone_timeout_s;
        auto result = run_process(spec);
        if (result.timed_out)
            throw CloneFailed(repo.key() + ": clone timed out after " +
                              std::to_string(clone_timeout_s) + "s");
        if (!result.ok()) {
            std::string detail = trim(result.stderr_tail);
            if (detail::looks_gone(detail)) throw Gone(repo.key() + ": " + detail);
            throw CloneFailed(repo.key() + ": git clone exited " +
                              std::to_string(result.exit_code) + ": " + detail);
        }
        fs::remove_all(dest / ".git", ec);
    }

    detail::collect_tree(dest, snap);
    return snap;
}

// One CandidateFile per .py file in the snapshot, in tree (lexicographic)
// order. Files under deny-listed directories are tagged dropped_dir; readable
// files longer than max_lines — and unreadable ones — are tagged dropped_lines.
inline std::vector<CandidateFile> rule_filter_files(const RepoSnapshot& snapshot,
                                                    const DirectoryDenyList& deny,
                                                    std::size_t max_lines = 1000,
                                                    const WarnFn& warn = ignore_warnings) {
    std::vector<CandidateFile> out;
    for (const auto& entry : snapshot.file_tree) {
        if (!ends_with(entry.path, ".py")) continue;
        CandidateFile c;
        c.repo_key = snapshot.repo_key;
        c.rel_path = entry.path;
        auto content = read_file(snapshot.local_root / entry.path);
        c.line_count = content ? count_lines(*content) : 0;
        if (deny.blocks(entry.path)) {
            c.rule_verdict = RuleVerdict::dropped_dir;
        } else if (!content) {
            c.rule_verdict = RuleVerdict::dropped_lines;
            warn(snapshot.repo_key + ":" + entry.path + ": unreadable, dropped");
        } else {
            c.rule_verdict =
                c.line_count > max_lines ? RuleVerdict::dropped_lines : RuleVerdict::kept;
        }
        out.push_back(std::move(c));
    }
    return out;
}

// Model judgment: does this file run a data-driven scientific analysis (vs
// pure utility/class definitions)? Conservative on unparseable replies.
inline ScienceVerdict judge_scientific(Gateway& gw, CandidateFile& candidate,
                                       const std::string& code,
                                       const WarnFn& warn = ignore_warnings) {
    if (candidate.rule_verdict != RuleVerdict::kept)
        throw Error("judge_scientific requires a rule-kept candidate: " + candidate.id());
    std::string file_name = candidate.rel_path;
    if (auto slash = file_name.rfind('/'); slash != std::string::npos)
        file_name = file_name.substr(slash + 1);

    std::string prompt = render(TemplateId::sci_verify, {{"file_name", file_name},
                                                         {"code", code}});
    auto parsed = complete_parsed<bool>(
        gw, "select", to_string(TemplateId::sci_verify), prompt, ModelRole::general,
        gw.temperature_for(TemplateId::sci_verify),
        [](const std::string& reply) { return parse_yes_no(reply, "VERDICT"); },
        "answer with a single line 'VERDICT: YES' or 'VERDICT: NO'");
    if (!parsed.value) {
        warn(candidate.id() + ": unparseable science verdict twice; dropped");
        candidate.science_verdict = ScienceVerdict::science_no;
    } else {
        candidate.science_verdict =
            *parsed.value ? ScienceVerdict::science_yes : ScienceVerdict::science_no;
    }
    return candidate.science_verdict;
}

inline constexpr std::size_t kTreePromptEntryCap = 4000;

// The project directory as shown to the model: paths only, capped.
inline std::string render_tree_listing(const std::vector<std::string>& tree_paths,
                                       std::size_t entry_cap = kTreePromptEntryCap) {
    std::vector<std::string> shown;
    shown.reserve(std::min(tree_paths.size(), entry_cap));
    for (std::size_t i = 0; i < tree_paths.size() && i < entry_cap; ++i)
        shown.push_back(tree_paths[i]);
    std::string out = join(shown, "\n");
    if (tree_paths.size() > entry_cap) out += "\n[... truncated ...]";
    return out;
}

namespace detail {

// "./data/x.csv" and "data/x.csv/" both normalize to "data/x.csv".
inline std::string normalize_dep_path(std::string path) {
    path = trim(path);
    while (starts_with(path, "./")) path = path.substr(2);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return path;
}

inline std::vector<std::string> validate_dep_paths(const std::vector<std::string>& raw,
                                                   const RepoSnapshot& snapshot,
                                                   const CandidateFile& candidate,
                                                   const char* kind, const WarnFn& warn) {
    std::vector<std::string> kept;
    std::set<std::string> seen;
    for (const auto& r : raw) {
        std::string path = normalize_dep_path(r);
        if (path.empty()) continue;
        if (!is_safe_relative_path(path)) {
            warn(candidate.id() + ": " + kind + " path rejected (unsafe): " + path);
            continue;
        }
        if (!snapshot.has_file(path) && !snapshot.has_dir(path)) {
            warn(candidate.id() + ": " + kind + " path not in tree, dropped: " + path);
            continue;
        }
        if (seen.insert(path).second) kept.push_back(path);
    }
    return kept;
}

} // namespace detail

// Asks the model which in-repo files the candidate needs (datasets and local
// modules), then keeps only paths that actually exist in the snapshot tree.
// Directories are legitimate answers and are expanded at copy time.
// Returns false when the reply was unparseable twice; the candidate is then
// dropped with a recorded reason.
inline bool locate_dependencies(Gateway& gw, CandidateFile& candidate, const std::string& code,
                                const RepoSnapshot& snapshot,
                                const WarnFn& warn = ignore_warnings) {
    if (candidate.science_verdict != ScienceVerdict::science_yes)
        throw Error("locate_dependencies requires a science-yes candidate: " + candidate.id());

    std::string prompt = render(TemplateId::dep_locate,
                                {{"code", code},
                                 {"directory", render_tree_listing(snapshot.paths())}});

    struct Located {
        bool dataset = false;
        bool modules = false;
        std::vector<std::string> dataset_paths;
        std::vector<std::string> module_paths;
    };
    auto parse = [](const std::string& reply) {
        Located l;
        l.dataset = parse_yes_no(reply, "DATASET_LABEL");
        l.dataset_paths = parse_path_list(reply, "DATASET_PATHS");
        l.modules = parse_yes_no(reply, "MODULE_LABEL");
        l.module_paths = parse_path_list(reply, "MODULE_PATHS");
        return l;
    };
    auto parsed = complete_parsed<Located>(
        gw, "select", to_string(TemplateId::dep_locate), prompt, ModelRole::general,
        gw.temperature_for(TemplateId::dep_locate), parse,
        "reply with four lines: 'DATASET_LABEL: Yes|No', 'DATASET_PATHS: [..]', "
        "'MODULE_LABEL: Yes|No', 'MODULE_PATHS: [..]' (empty brackets when none)");
    if (!parsed.value) {
        candidate.dropped_reason = "dependency location unparseable twice";
        warn(candidate.id() + ": " + candidate.dropped_reason);
        return false;
    }

    if (parsed.value->dataset) {
        candidate.dataset_paths = detail::validate_dep_paths(parsed.value->dataset_paths,
                                                             snapshot, candidate, "dataset", warn);
        candidate.dataset_label = candidate.dataset_paths.empty() ? DatasetLabel::builtin_loader
                                                                  : DatasetLabel::local_files;
    } else {
        candidate.dataset_label = DatasetLabel::none;
        candidate.dataset_paths.clear();
    }
    if (parsed.value->modules) {
        candidate.module_paths = detail::validate_dep_paths(parsed.value->module_paths, snapshot,
                                                            candidate, "module", warn);
    } else {
        candidate.module_paths.clear();
    }
    return true;
}

// Repo-relative data root inside a workspace.
inline std::string workspace_dataset_root(const std::string& repo_name) {
    return "benchmark/datasets/" + repo_name;
}

// Copies the candidate plus its declared dependency closure into
// `out_root/benchmark/datasets/<repo_name>/...`, preserving repo-relative
// structure, and creates the empty `pred_results/` the adapted program will
// write into. Every declared path must resolve inside the snapshot.
inline Workspace build_workspace(const RepoSnapshot& snapshot, const CandidateFile& candidate,
                                 const std::filesystem::path& out_root) {
    namespace fs = std::filesystem;
    std::vector<std::string> declared = {candidate.rel_path};
    declared.insert(declared.end(), candidate.dataset_paths.begin(),
                    candidate.dataset_paths.end());
    declared.insert(declared.end(), candidate.module_paths.begin(), candidate.module_paths.end());

    // Resolve declarations to concrete files before touching the disk.
    std::set<std::string> to_copy;
    for (const auto& raw : declared) {
        std::string path = detail::normalize_dep_path(raw);
        if (path.empty() || !is_safe_relative_path(path))
            throw WorkspaceError("unsafe dependency path: '" + raw + "'");
        if (snapshot.has_file(path)) {
            to_copy.insert(path);
            continue;
        }
        if (snapshot.has_dir(path)) {
            std::string prefix = path + "/";
            for (const auto& entry : snapshot.file_tree)
                if (starts_with(entry.path, prefix)) to_copy.insert(entry.path);
            continue;
        }
        throw WorkspaceError(candidate.id() + ": declared path not in snapshot: " + path);
    }

    Workspace ws;
    ws.root = out_root.string();
    ws.candidate = candidate;
    fs::path data_root = out_root / "benchmark" / "datasets" / snapshot.repo_name;
    try {
        fs::create_directories(data_root);
        fs::create_directories(out_root / "pred_results");
        for (const auto& rel : to_copy) {
            copy_file_preserving(snapshot.local_root / rel, data_root / rel);
            ws.copied_paths.push_back(rel);
        }
    } catch (const WorkspaceError&) {
        throw;
    } catch (const std::exception& e) {
        throw WorkspaceError(std::string("workspace copy failed: ") + e.what());
    }
    for (const auto& rel : ws.copied_paths) {
        for (const auto& entry : snapshot.file_tree)
            if (entry.path == rel) ws.byte_size += entry.bytes;
    }
    return ws;
}

} // namespace autosdt
