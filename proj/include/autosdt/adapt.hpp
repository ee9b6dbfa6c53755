#pragma once

#include <autosdt/errors.hpp>
#include <autosdt/fsio.hpp>
#include <autosdt/hash.hpp>
#include <autosdt/llm_gateway.hpp>
#include <autosdt/model.hpp>
#include <autosdt/package_naming.hpp>
#include <autosdt/reply_parsing.hpp>
#include <autosdt/search.hpp>
#include <autosdt/select.hpp>
#include <autosdt/strings.hpp>
#include <autosdt/subprocess.hpp>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace autosdt {

// ---------------------------------------------------------------------------
// Environment specification

struct EnvSpec {
    std::vector<std::string> requirements; // sorted, unique distribution names
    std::string env_id;                    // deterministic in requirements

    static EnvSpec from_requirements(std::vector<std::string> reqs) {
        std::sort(reqs.begin(), reqs.end());
        reqs.erase(std::unique(reqs.begin(), reqs.end()), reqs.end());
        EnvSpec spec;
        spec.env_id = sha256_hex16(join(reqs, "\n"));
        spec.requirements = std::move(reqs);
        return spec;
    }
};

namespace detail {

// First module segment of a dotted import target; empty for relative imports.
inline std::string import_root(const std::string& target) {
    std::string t = trim(target);
    if (t.empty() || t[0] == '.') return "";
    auto dot = t.find('.');
    return dot == std::string::npos ? t : t.substr(0, dot);
}

// Names the workspace itself provides: package directories and module stems.
inline std::set<std::string> local_module_names(const std::vector<std::string>& workspace_files) {
    std::set<std::string> names;
    for (const auto& rel : workspace_files) {
        auto segments = split(rel, '/');
        for (std::size_t i = 0; i + 1 < segments.size(); ++i) names.insert(segments[i]);
        const std::string& leaf = segments.back();
        if (ends_with(leaf, ".py")) names.insert(leaf.substr(0, leaf.size() - 3));
    }
    return names;
}

inline bool is_identifier(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s) {
        bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                  c == '_';
        if (!ok) return false;
    }
    return !(s[0] >= '0' && s[0] <= '9');
}

// Interpreters report the running script by absolute path, which would bake
// machine-specific directories into debug feedback (and so into prompts).
// Rewriting the known roots keeps captured streams location-independent.
inline std::string strip_roots(std::string text, const std::vector<std::string>& roots) {
    for (const auto& root : roots) {
        if (root.empty() || root == "/") continue;
        text = replace_all(std::move(text), root + "/", "");
        text = replace_all(std::move(text), root, ".");
    }
    return text;
}

} // namespace detail

// Static import scan: every `import a.b` / `from a import b` line contributes
// its root module, minus relative imports, minus modules the workspace itself
// ships, minus interpreter-bundled modules; survivors map through the bundled
// import->distribution table. Pure in (code, workspace file list).
inline EnvSpec infer_requirements(const std::string& code,
                                  const std::vector<std::string>& workspace_files = {}) {
    std::set<std::string> local = detail::local_module_names(workspace_files);
    std::vector<std::string> found;
    for (const auto& raw_line : split_lines(code)) {
        std::string line = trim(raw_line);
        std::vector<std::string> roots;
        if (starts_with(line, "import ")) {
            // "import a.b as ab, c  # note" — commas separate targets.
            std::string rest = line.substr(7);
            if (auto hash = rest.find('#'); hash != std::string::npos) rest = rest.substr(0, hash);
            for (const auto& part : split(rest, ',')) {
                std::string target = trim(part);
                if (auto space = target.find(' '); space != std::string::npos)
                    target = target.substr(0, space); // strips "as alias"
                roots.push_back(detail::import_root(target));
            }
        } else if (starts_with(line, "from ")) {
            std::string rest = trim(line.substr(5));
            if (auto space = rest.find(' '); space != std::string::npos)
                rest = rest.substr(0, space);
            roots.push_back(detail::import_root(rest));
        } else {
            continue;
        }
        for (const auto& root : roots) {
            if (root.empty() || !detail::is_identifier(root)) continue; // relative or garbled
            if (is_stdlib_module(root)) continue;
            if (local.count(root)) continue;
            found.push_back(distribution_for_import(root));
        }
    }
    return EnvSpec::from_requirements(std::move(found));
}

// ---------------------------------------------------------------------------
// Environment provisioning

struct EnvHandle {
    std::string env_id;
    std::filesystem::path interpreter; // what to exec
    bool setup_ok = true;
    std::string setup_error; // installer tail when setup_ok is false
};

class EnvProvisioner {
public:
    virtual ~EnvProvisioner() = default;
    virtual EnvHandle provision(const EnvSpec& spec) = 0;
};

// Default backend: the interpreter's built-in venv module plus pip, cached on
// disk by env_id. A `.ready` marker gates reuse; a directory without the
// marker is a dead partial and gets rebuilt.
class VenvProvisioner : public EnvProvisioner {
public:
    explicit VenvProvisioner(std::filesystem::path cache_dir, std::string base_python = "python3",
                             int setup_timeout_s = 900)
        : m_cache_dir(std::move(cache_dir)),
          m_base_python(std::move(base_python)),
          m_setup_timeout_s(setup_timeout_s) {}

    EnvHandle provision(const EnvSpec& spec) override {
        std::lock_guard<std::mutex> lock(m_mutex); // single-flight creation
        namespace fs = std::filesystem;
        EnvHandle handle;
        handle.env_id = spec.env_id;
        fs::path env_dir = m_cache_dir / spec.env_id;
        handle.interpreter = env_dir / "bin" / "python";

        if (fs::exists(env_dir / ".ready")) return handle; // cache hit

        std::error_code ec;
        fs::remove_all(env_dir, ec);
        fs::create_directories(m_cache_dir);

        // Environments with nothing to install don't need pip at all, which
        // keeps the common fixture path fast and offline.
        std::vector<std::string> create_argv = {m_base_python, "-m", "venv"};
        if (spec.requirements.empty()) create_argv.push_back("--without-pip");
        create_argv.push_back(env_dir.string());
        RunSpec create;
        create.argv = create_argv;
        create.timeout_s = m_setup_timeout_s;
        auto created = run_process(create);
        if (!created.ok()) {
            handle.setup_ok = false;
            handle.setup_error = "venv creation failed: " + scrub(trim(created.stderr_tail));
            return handle;
        }

        if (!spec.requirements.empty()) {
            fs::path req_file = env_dir / "requirements.txt";
            write_file(req_file, join(spec.requirements, "\n") + "\n");
            RunSpec install;
            install.argv = {handle.interpreter.string(), "-m", "pip", "install", "--quiet",
                            "-r", req_file.string()};
            install.timeout_s = m_setup_timeout_s;
            auto installed = run_process(install);
            if (!installed.ok()) {
                handle.setup_ok = false;
                handle.setup_error =
                    installed.timed_out
                        ? "package install timed out"
                        : "package install failed: " + scrub(trim(installed.stderr_tail));
                return handle;
            }
        }
        write_file(env_dir / ".ready", spec.env_id + "\n");
        return handle;
    }

private:
    // Installer noise quotes env paths; drop the cache root so error texts
    // stay machine-independent.
    std::string scrub(const std::string& text) const {
        return detail::strip_roots(
            text, {std::filesystem::absolute(m_cache_dir).lexically_normal().string()});
    }

    std::filesystem::path m_cache_dir;
    std::string m_base_python;
    int m_setup_timeout_s;
    std::mutex m_mutex;
};

// ---------------------------------------------------------------------------
// Sandboxed execution

enum class ExecOutcome { success, nonzero_exit, timeout, setup_failure };

inline std::string to_string(ExecOutcome o) {
    switch (o) {
        case ExecOutcome::success: return "success";
        case ExecOutcome::nonzero_exit: return "nonzero_exit";
        case ExecOutcome::timeout: return "timeout";
        case ExecOutcome::setup_failure: return "setup_failure";
    }
    throw SchemaError("bad exec outcome");
}

struct ExecutionResult {
    int exit_code = -1;
    std::string stdout_tail;
    std::string stderr_tail;
    std::vector<std::string> produced_files; // sorted, "pred_results/..."-relative
    double wall_time_s = 0.0;
    ExecOutcome outcome = ExecOutcome::nonzero_exit;
};

struct ExecOptions {
    int timeout_s = 300;
    bool allow_net = false;
    std::size_t capture_bytes = 8192;
};

inline constexpr const char* kCandidateProgramName = "candidate_program.py";

namespace detail {

inline std::vector<std::string> scrubbed_env(bool allow_net) {
    static const char* kAllow[] = {"PATH", "HOME", "LANG", "LC_ALL", "LC_CTYPE"};
    std::vector<std::string> env;
    for (const char* name : kAllow)
        if (const char* value = std::getenv(name)) env.push_back(std::string(name) + "=" + value);
    env.push_back("PYTHONDONTWRITEBYTECODE=1");
    if (!allow_net) {
        // Black-hole proxies: common HTTP stacks honor these, so accidental
        // downloads fail fast instead of hanging the iteration.
        for (const char* proxy : {"http_proxy", "https_proxy", "HTTP_PROXY", "HTTPS_PROXY",
                                  "ALL_PROXY", "all_proxy"})
            env.push_back(std::string(proxy) + "=http://127.0.0.1:9");
        env.push_back("no_proxy=");
        env.push_back("AUTOSDT_NO_NET=1");
    }
    return env;
}

inline std::vector<std::string> scan_pred_results(const std::filesystem::path& workspace_root) {
    std::vector<std::string> produced;
    for (const auto& rel : list_files(workspace_root / "pred_results"))
        produced.push_back("pred_results/" + rel);
    return produced;
}

inline std::vector<std::string> scrub_roots_for(const EnvHandle& handle,
                                                const std::filesystem::path& workspace_root) {
    namespace fs = std::filesystem;
    std::vector<std::string> roots;
    std::error_code ec;
    fs::path abs_ws = fs::absolute(workspace_root).lexically_normal();
    roots.push_back(abs_ws.string());
    fs::path canon_ws = fs::weakly_canonical(workspace_root, ec);
    if (!ec && canon_ws != abs_ws) roots.push_back(canon_ws.string());
    if (handle.interpreter.has_parent_path()) {
        fs::path env_root = handle.interpreter.parent_path().parent_path();
        if (!env_root.empty() && env_root.has_relative_path())
            roots.push_back(fs::absolute(env_root).lexically_normal().string());
    }
    return roots;
}

} // namespace detail

// Runs the adapted program in its workspace: fresh pred_results/, scrubbed
// environment, hard wall-clock kill. Failures come back as outcomes, never
// exceptions — a broken program is data here, not an error.
inline ExecutionResult execute_candidate(const EnvHandle& handle, const std::string& code,
                                         const std::filesystem::path& workspace_root,
                                         const ExecOptions& opts = {}) {
    namespace fs = std::filesystem;
    ExecutionResult result;
    if (!handle.setup_ok) {
        result.outcome = ExecOutcome::setup_failure;
        result.stderr_tail = handle.setup_error;
        return result;
    }

    try {
        std::error_code ec;
        fs::remove_all(workspace_root / "pred_results", ec);
        fs::create_directories(workspace_root / "pred_results");
        write_file(workspace_root / kCandidateProgramName, code);
    } catch (const std::exception& e) {
        result.outcome = ExecOutcome::setup_failure;
        result.stderr_tail = std::string("workspace not writable: ") + e.what();
        return result;
    }

    RunSpec spec;
    // Relative program path + cwd keeps interpreter tracebacks free of
    // machine-specific absolute paths, which keeps debug prompts replayable.
    spec.argv = {handle.interpreter.string(), kCandidateProgramName};
    spec.cwd = workspace_root.string();
    spec.env = detail::scrubbed_env(opts.allow_net);
    spec.timeout_s = opts.timeout_s;
    spec.capture_bytes = opts.capture_bytes;
    auto run = run_process(spec);

    auto scrub_roots = detail::scrub_roots_for(handle, workspace_root);
    result.exit_code = run.exit_code;
    result.stdout_tail = detail::strip_roots(run.stdout_tail, scrub_roots);
    result.stderr_tail = detail::strip_roots(run.stderr_tail, scrub_roots);
    result.wall_time_s = run.wall_ms / 1000.0;
    result.produced_files = detail::scan_pred_results(workspace_root);
    if (run.timed_out)
        result.outcome = ExecOutcome::timeout;
    else if (run.exit_code == 0 && !result.produced_files.empty())
        result.outcome = ExecOutcome::success;
    else
        result.outcome = ExecOutcome::nonzero_exit;
    return result;
}

// ---------------------------------------------------------------------------
// Adaptation state machine

enum class AdaptStatus { pending, running, adapted, discarded };

inline std::string to_string(AdaptStatus s) {
    switch (s) {
        case AdaptStatus::pending: return "pending";
        case AdaptStatus::running: return "running";
        case AdaptStatus::adapted: return "adapted";
        case AdaptStatus::discarded: return "discarded";
    }
    throw SchemaError("bad adaptation status");
}

inline AdaptStatus adapt_status_from_string(const std::string& s) {
    if (s == "pending") return AdaptStatus::pending;
    if (s == "running") return AdaptStatus::running;
    if (s == "adapted") return AdaptStatus::adapted;
    if (s == "discarded") return AdaptStatus::discarded;
    throw SchemaError("unknown adaptation status: " + s);
}

struct AdaptationState {
    std::string candidate_key; // CandidateFile::id()
    int iteration = 0;         // executions consumed, 0..3
    std::string current_code;
    std::optional<std::string> last_error;
    AdaptStatus status = AdaptStatus::pending;
    std::vector<std::string> requirements;   // env of the last iteration
    std::vector<std::string> produced_files; // non-empty iff adapted
};

inline nlohmann::json encode_adaptation(const AdaptationState& s) {
    nlohmann::json j;
    j["candidate_key"] = s.candidate_key;
    j["iteration"] = s.iteration;
    j["current_code"] = s.current_code;
    j["last_error"] = s.last_error ? nlohmann::json(*s.last_error) : nlohmann::json();
    j["status"] = to_string(s.status);
    j["requirements"] = s.requirements;
    j["produced_files"] = s.produced_files;
    return j;
}

inline AdaptationState decode_adaptation(const nlohmann::json& j) {
    AdaptationState s;
    s.candidate_key = j.at("candidate_key").get<std::string>();
    s.iteration = j.at("iteration").get<int>();
    s.current_code = j.at("current_code").get<std::string>();
    if (!j.at("last_error").is_null()) s.last_error = j.at("last_error").get<std::string>();
    s.status = adapt_status_from_string(j.at("status").get<std::string>());
    s.requirements = j.at("requirements").get<std::vector<std::string>>();
    s.produced_files = j.at("produced_files").get<std::vector<std::string>>();
    return s;
}

// Everything the loop needs to know about one candidate, pre-gathered so the
// loop itself stays pure orchestration.
struct AdaptInputs {
    CandidateFile candidate;
    std::filesystem::path workspace_root;
    std::string repo_name;                    // original case, names the data root
    std::string original_code;                // candidate source as found in the repo
    std::vector<std::string> workspace_files; // repo-relative copied paths
    int max_iterations = 3;
    int exec_timeout_s = 300;
    bool allow_net = false;
};

namespace detail {

inline std::string file_basename(const std::string& rel_path) {
    auto slash = rel_path.rfind('/');
    return slash == std::string::npos ? rel_path : rel_path.substr(slash + 1);
}

// The adapt prompt body, shared by the first attempt and the debug rounds
// (which append execution feedback).
inline std::string adaptation_prompt(const AdaptInputs& in, const std::string& code) {
    return render(TemplateId::adapt,
                  {{"dataset_path", workspace_dataset_root(in.repo_name)},
                   {"dataset_structure", render_tree_listing(in.workspace_files)},
                   {"code_file_name", file_basename(in.candidate.rel_path)},
                   {"code", code}});
}

inline std::string execution_feedback(int iteration, const ExecutionResult& result) {
    std::string error_text;
    switch (result.outcome) {
        case ExecOutcome::timeout:
            error_text = "execution timed out (wall clock limit reached)";
            break;
        case ExecOutcome::setup_failure:
            error_text = result.stderr_tail;
            break;
        default:
            if (result.exit_code == 0 && result.produced_files.empty())
                error_text = "program exited 0 but wrote no files under pred_results/";
            else
                error_text = result.stderr_tail;
    }
    return "\n\nIteration " + std::to_string(iteration) + " execution feedback:\n" +
           "exit code: " + std::to_string(result.exit_code) + "\n" +
           "stderr (last 8 KiB):\n" + error_text;
}

} // namespace detail

// One model round: adapt (or repair) the program. nullopt after the single
// format reminder fails — the candidate is then discarded by the caller.
inline std::optional<std::string> adapt_program(Gateway& gw, const AdaptInputs& in,
                                                const std::string& code,
                                                const std::string& feedback_suffix = "") {
    std::string prompt = detail::adaptation_prompt(in, code) + feedback_suffix;
    auto parsed = complete_parsed<std::string>(
        gw, "adapt", to_string(TemplateId::adapt), prompt, ModelRole::coder,
        gw.temperature_for(TemplateId::adapt),
        [](const std::string& reply) {
            std::string adapted = extract_code_block(reply);
            // The whole point of adaptation is the output convention; code
            // that never mentions it cannot satisfy it.
            if (!contains(adapted, "pred_results"))
                throw MalformedReply("adapted code never references pred_results/");
            return adapted;
        },
        "respond with one fenced ```python code block containing the complete program, "
        "and save all outputs under pred_results/");
    return parsed.value;
}

// Adapt -> infer env -> provision -> execute, repaired on failure, bounded at
// max_iterations executions. Provider outages propagate so the stage runner
// can park the candidate as pending and resume later.
inline AdaptationState self_debug_loop(Gateway& gw, EnvProvisioner& provisioner,
                                       const AdaptInputs& in,
                                       const WarnFn& warn = ignore_warnings) {
    AdaptationState state;
    state.candidate_key = in.candidate.id();
    state.status = AdaptStatus::running;

    std::string feedback;
    std::string code = in.original_code;
    for (int iteration = 1; iteration <= in.max_iterations; ++iteration) {
        auto adapted = adapt_program(gw, in, code, feedback);
        if (!adapted) {
            state.status = AdaptStatus::discarded;
            state.last_error = "adaptation reply unusable twice (no code block or no "
                               "pred_results reference)";
            warn(state.candidate_key + ": " + *state.last_error);
            return state;
        }
        state.current_code = *adapted;

        EnvSpec spec = infer_requirements(*adapted, in.workspace_files);
        state.requirements = spec.requirements;
        EnvHandle handle = provisioner.provision(spec);

        ExecOptions opts;
        opts.timeout_s = in.exec_timeout_s;
        opts.allow_net = in.allow_net;
        ExecutionResult result = execute_candidate(handle, *adapted, in.workspace_root, opts);
        state.iteration = iteration;

        if (result.outcome == ExecOutcome::success) {
            state.status = AdaptStatus::adapted;
            state.last_error = std::nullopt;
            state.produced_files = result.produced_files;
            return state;
        }
        state.last_error = to_string(result.outcome) + ": " + tail_bytes(result.stderr_tail, 8192);
        feedback = detail::execution_feedback(iteration, result);
        code = *adapted; // repair rounds start from the latest attempt
    }
    state.status = AdaptStatus::discarded;
    return state;
}

// ---------------------------------------------------------------------------
// Instruction back-translation

struct InstructionResult {
    std::string text;
    bool weak = false; // kept despite failing the mention checks twice
};

namespace detail {

// Mentioning "RWR.csv" satisfies the check for the produced "pred_RWR.csv":
// both the literal name and its "pred_"-stripped form count.
inline bool mentions_any_output(const std::string& instruction,
                                const std::vector<std::string>& produced_files) {
    for (const auto& produced : produced_files) {
        std::string base = file_basename(produced);
        if (contains(instruction, base)) return true;
        if (starts_with(base, "pred_") && contains(instruction, base.substr(5))) return true;
    }
    return false;
}

inline bool mentions_any_input(const std::string& instruction, const AdaptInputs& in) {
    bool has_data_files = false;
    for (const auto& rel : in.workspace_files) {
        if (rel == in.candidate.rel_path) continue;
        has_data_files = true;
        if (contains(instruction, file_basename(rel))) return true;
    }
    // A candidate-only workspace has no data file anyone could mention.
    return !has_data_files;
}

} // namespace detail

// Back-translates the finished program into a task instruction, checked to
// actually name the data it reads and the files it writes. One retry; a still
// vague instruction is kept but flagged.
inline InstructionResult generate_instruction(Gateway& gw, const AdaptationState& state,
                                              const AdaptInputs& in,
                                              const WarnFn& warn = ignore_warnings) {
    if (state.status != AdaptStatus::adapted)
        throw Error("generate_instruction requires an adapted candidate: " + state.candidate_key);

    std::string prompt = render(TemplateId::instruct_gen, {{"code", state.current_code}});
    auto acceptable = [&](const std::string& instruction) {
        return detail::mentions_any_input(instruction, in) &&
               detail::mentions_any_output(instruction, state.produced_files);
    };

    LLMExchange first = gw.complete_text("adapt", to_string(TemplateId::instruct_gen), prompt,
                                         ModelRole::general,
                                         gw.temperature_for(TemplateId::instruct_gen));
    std::string instruction = trim(first.reply);
    if (acceptable(instruction)) return {instruction, false};

    LLMExchange second = gw.complete_text(
        "adapt", to_string(TemplateId::instruct_gen),
        prompt + "\n\nReminder: explicitly mention the required input file names and the "
                 "output file names the program writes under pred_results/.",
        ModelRole::general, gw.temperature_for(TemplateId::instruct_gen));
    std::string regenerated = trim(second.reply);
    if (acceptable(regenerated)) return {regenerated, false};

    warn(state.candidate_key + ": instruction never named the inputs/outputs; kept with "
                               "weak_instruction flag");
    return {regenerated, true};
}

} // namespace autosdt
