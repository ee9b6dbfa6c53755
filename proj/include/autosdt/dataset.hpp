#pragma once

#include <autosdt/errors.hpp>
#include <autosdt/fsio.hpp>
#include <autosdt/llm_gateway.hpp>
#include <autosdt/model.hpp>
#include <autosdt/money.hpp>
#include <autosdt/strings.hpp>

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace autosdt {

// ---------------------------------------------------------------------------
// Corpus emission

// Append-only sink over the corpus file. Re-opening an existing corpus
// reloads its (repo, source file) pairs so duplicate rejection survives
// process restarts.
class CorpusWriter {
public:
    explicit CorpusWriter(std::filesystem::path corpus_file) : m_file(std::move(corpus_file)) {
        auto existing = read_file(m_file);
        if (!existing) return;
        std::size_t line_no = 0;
        for (const auto& line : split_lines(*existing)) {
            ++line_no;
            if (trim(line).empty()) continue;
            TaskInstance task = decode_corpus_line(line, line_no, m_file);
            m_seen.insert({task.repo_key, task.source_path});
            ++m_count;
        }
    }

    // Validates, rejects duplicates by (repo key, source path), appends one
    // JSON line. Nothing is written when validation fails.
    void emit(const TaskInstance& draft) {
        validate_task(draft);
        std::pair<std::string, std::string> key{draft.repo_key, draft.source_path};
        if (m_seen.count(key))
            throw DuplicateTask(draft.repo_key + ":" + draft.source_path);

        std::filesystem::create_directories(m_file.parent_path().empty()
                                                ? std::filesystem::path(".")
                                                : m_file.parent_path());
        std::ofstream out(m_file, std::ios::app | std::ios::binary);
        if (!out) throw Error("cannot open corpus file for append: " + m_file.string());
        out << encode_task(draft).dump() << "\n";
        if (!out) throw Error("corpus append failed: " + m_file.string());
        m_seen.insert(std::move(key));
        ++m_count;
    }

    std::size_t emitted() const { return m_count; }

    static TaskInstance decode_corpus_line(const std::string& line, std::size_t line_no,
                                           const std::filesystem::path& file) {
        try {
            return decode_task(nlohmann::json::parse(line));
        } catch (const std::exception& e) {
            throw SchemaError(file.filename().string() + " line " + std::to_string(line_no) +
                              ": " + e.what());
        }
    }

private:
    std::filesystem::path m_file;
    std::set<std::pair<std::string, std::string>> m_seen;
    std::size_t m_count = 0;
};

// Whole-corpus load with line-numbered failures. A missing file is an empty
// corpus; a corrupt line is a hard error.
inline std::vector<TaskInstance> load_corpus(const std::filesystem::path& corpus_file) {
    std::vector<TaskInstance> tasks;
    auto body = read_file(corpus_file);
    if (!body) return tasks;
    std::size_t line_no = 0;
    for (const auto& line : split_lines(*body)) {
        ++line_no;
        if (trim(line).empty()) continue;
        tasks.push_back(CorpusWriter::decode_corpus_line(line, line_no, corpus_file));
    }
    return tasks;
}

// ---------------------------------------------------------------------------
// Corpus statistics

struct DisciplineStats {
    std::int64_t tasks = 0;
    std::int64_t repos = 0;
};

struct CorpusStats {
    std::int64_t n_tasks = 0;
    std::int64_t n_repos = 0;
    std::int64_t n_packages = 0; // distinct requirement names
    Usd cost_usd;
    std::map<std::string, DisciplineStats> per_discipline;
    std::optional<double> avg_tasks_per_repo; // plain ratio tasks/repos
    std::optional<double> avg_lines;
    std::optional<double> avg_subtasks; // populated only by the optional label pass
};

inline CorpusStats compute_stats(const std::vector<TaskInstance>& tasks,
                                 const CostLedger* ledger = nullptr) {
    CorpusStats stats;
    stats.n_tasks = static_cast<std::int64_t>(tasks.size());
    if (ledger) stats.cost_usd = ledger->total();

    std::set<std::string> repos;
    std::set<std::string> packages;
    std::map<std::string, std::set<std::string>> repos_by_discipline;
    std::size_t total_lines = 0;
    for (const auto& task : tasks) {
        repos.insert(task.repo_key);
        for (const auto& req : task.requirements) packages.insert(req);
        auto& disc = stats.per_discipline[task.discipline_id];
        ++disc.tasks;
        repos_by_discipline[task.discipline_id].insert(task.repo_key);
        total_lines += count_lines(task.adapted_code);
    }
    for (auto& [id, disc] : stats.per_discipline)
        disc.repos = static_cast<std::int64_t>(repos_by_discipline[id].size());

    stats.n_repos = static_cast<std::int64_t>(repos.size());
    stats.n_packages = static_cast<std::int64_t>(packages.size());
    if (stats.n_repos > 0)
        stats.avg_tasks_per_repo = static_cast<double>(stats.n_tasks) / stats.n_repos;
    if (stats.n_tasks > 0)
        stats.avg_lines = static_cast<double>(total_lines) / stats.n_tasks;
    return stats;
}

inline CorpusStats compute_stats_file(const std::filesystem::path& corpus_file,
                                      const CostLedger* ledger = nullptr) {
    return compute_stats(load_corpus(corpus_file), ledger);
}

// Tasks-per-package counts. A package counts once per task that requires it.
inline std::map<std::string, std::int64_t>
package_histogram(const std::vector<TaskInstance>& tasks) {
    std::map<std::string, std::int64_t> hist;
    for (const auto& task : tasks) {
        std::set<std::string> unique(task.requirements.begin(), task.requirements.end());
        for (const auto& req : unique) ++hist[req];
    }
    return hist;
}

namespace detail {

inline std::string two_places(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

} // namespace detail

inline nlohmann::ordered_json encode_stats(const CorpusStats& stats) {
    nlohmann::ordered_json j;
    j["n_tasks"] = stats.n_tasks;
    j["n_repos"] = stats.n_repos;
    j["n_packages"] = stats.n_packages;
    j["cost_usd"] = stats.cost_usd.to_string();
    j["cost_per_task_usd"] = stats.n_tasks > 0
                                 ? nlohmann::ordered_json(
                                       stats.cost_usd.divided_by(stats.n_tasks).to_string_cents())
                                 : nlohmann::ordered_json();
    nlohmann::ordered_json disc = nlohmann::ordered_json::object();
    for (const auto& [id, d] : stats.per_discipline)
        disc[id] = {{"tasks", d.tasks}, {"repos", d.repos}};
    j["per_discipline"] = disc;
    j["avg_tasks_per_repo"] = stats.avg_tasks_per_repo
                                  ? nlohmann::ordered_json(*stats.avg_tasks_per_repo)
                                  : nlohmann::ordered_json();
    j["avg_lines"] = stats.avg_lines ? nlohmann::ordered_json(*stats.avg_lines)
                                     : nlohmann::ordered_json();
    j["avg_subtasks"] = stats.avg_subtasks ? nlohmann::ordered_json(*stats.avg_subtasks)
                                           : nlohmann::ordered_json();
    return j;
}

inline std::string render_stats_table(const CorpusStats& stats) {
    std::string out;
    auto row = [&](const std::string& label, const std::string& value) {
        out += label;
        out.append(label.size() < 22 ? 22 - label.size() : 1, ' ');
        out += value + "\n";
    };
    row("tasks", std::to_string(stats.n_tasks));
    row("repos", std::to_string(stats.n_repos));
    row("packages", std::to_string(stats.n_packages));
    row("total cost (USD)", stats.cost_usd.to_string_cents());
    row("cost per task (USD)", stats.n_tasks > 0
                                   ? stats.cost_usd.divided_by(stats.n_tasks).to_string_cents()
                                   : "-");
    row("avg tasks per repo",
        stats.avg_tasks_per_repo ? detail::two_places(*stats.avg_tasks_per_repo) : "-");
    row("avg code lines", stats.avg_lines ? detail::two_places(*stats.avg_lines) : "-");
    if (!stats.per_discipline.empty()) {
        out += "per discipline:\n";
        for (const auto& [id, d] : stats.per_discipline)
            row("  " + id, std::to_string(d.tasks) + " tasks, " + std::to_string(d.repos) +
                               " repos");
    }
    return out;
}

// ---------------------------------------------------------------------------
// License audit

enum class LicenseClass { permissive, copyleft, custom_review, unknown };

inline std::string to_string(LicenseClass c) {
    switch (c) {
        case LicenseClass::permissive: return "permissive";
        case LicenseClass::copyleft: return "copyleft";
        case LicenseClass::custom_review: return "custom_review";
        case LicenseClass::unknown: return "unknown";
    }
    throw SchemaError("bad license class");
}

struct LicenseRecord {
    std::string repo_key;
    std::string license_id; // "none" when the host reported nothing
    LicenseClass classification = LicenseClass::unknown;
};

// Classification by identifier family, case-insensitive. Every named license
// outside the recognized permissive/copyleft families lands in custom_review;
// unknown is reserved for repositories with no license information at all.
inline LicenseClass classify_license(const std::string& license_id) {
    if (license_id.empty() || license_id == "none") return LicenseClass::unknown;
    std::string id = to_lower(license_id);
    auto any_prefix = [&](std::initializer_list<const char*> prefixes) {
        for (const char* p : prefixes)
            if (starts_with(id, p)) return true;
        return false;
    };
    if (any_prefix({"mit", "bsd-", "0bsd", "apache-", "isc", "bsl-", "boost", "cc0-",
                    "unlicense"}))
        return LicenseClass::permissive;
    if (any_prefix({"gpl-", "lgpl-", "agpl-", "gfdl-", "gnu", "mulan", "epl-", "eclipse",
                    "cc-"}))
        return LicenseClass::copyleft;
    return LicenseClass::custom_review;
}

inline std::vector<LicenseRecord> audit_licenses(const std::vector<RepoRef>& repos,
                                                 const WarnFn& warn = ignore_warnings) {
    std::vector<LicenseRecord> records;
    records.reserve(repos.size());
    for (const auto& repo : repos) {
        LicenseRecord rec;
        rec.repo_key = repo.key();
        rec.license_id = repo.license_id.empty() ? "none" : repo.license_id;
        rec.classification = classify_license(repo.license_id);
        if (rec.classification == LicenseClass::unknown)
            warn(rec.repo_key + ": no license information; assume permissive for academic "
                                "use only");
        records.push_back(std::move(rec));
    }
    return records;
}

// Repositories that need a human look before redistribution.
inline std::vector<LicenseRecord> review_list(const std::vector<LicenseRecord>& records) {
    std::vector<LicenseRecord> out;
    for (const auto& rec : records)
        if (rec.classification == LicenseClass::custom_review) out.push_back(rec);
    return out;
}

// Count per license identifier, for the summary table.
inline std::map<std::string, std::int64_t>
license_counts(const std::vector<LicenseRecord>& records) {
    std::map<std::string, std::int64_t> counts;
    for (const auto& rec : records) ++counts[rec.license_id];
    return counts;
}

namespace detail {

inline std::string csv_field(const std::string& value) {
    if (value.find_first_of(",\"\n") == std::string::npos) return value;
    std::string quoted = "\"";
    for (char c : value) {
        if (c == '"') quoted += '"';
        quoted += c;
    }
    return quoted + "\"";
}

} // namespace detail

inline std::string render_licenses_csv(const std::vector<LicenseRecord>& records) {
    std::string out = "repo,license,classification\n";
    for (const auto& rec : records)
        out += detail::csv_field(rec.repo_key) + "," + detail::csv_field(rec.license_id) + "," +
               to_string(rec.classification) + "\n";
    return out;
}

} // namespace autosdt
