#pragma once

#include <autosdt/errors.hpp>
#include <autosdt/fsio.hpp>
#include <autosdt/hosts.hpp>
#include <autosdt/llm_gateway.hpp>
#include <autosdt/model.hpp>
#include <autosdt/reply_parsing.hpp>
#include <autosdt/strings.hpp>

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace autosdt {

struct SearchQuery {
    std::string discipline_id;
    std::string keyword;
    Host host = Host::github;
};

// Benchmark-overlap exclusions: canonical repo keys, each tagged with where
// the exclusion came from (a benchmark name, usually).
struct ExclusionList {
    std::set<std::string> entries;
    std::map<std::string, std::string> source_labels;

    bool contains(const std::string& key) const { return entries.count(key) > 0; }

    void add(const std::string& owner_slash_name, const std::string& label = "") {
        auto slash = owner_slash_name.find('/');
        if (slash == std::string::npos || slash == 0 || slash + 1 == owner_slash_name.size())
            throw InvalidIdentifier("exclusion entry must be owner/name: " + owner_slash_name);
        std::string key = canonical_repo_key(owner_slash_name.substr(0, slash),
                                             owner_slash_name.substr(slash + 1));
        entries.insert(key);
        if (!label.empty()) source_labels[key] = label;
    }

    // Newline-delimited "owner/name" entries; '#' comments and blanks skipped.
    static ExclusionList from_file(const std::filesystem::path& path) {
        ExclusionList list;
        auto text = read_file(path);
        if (!text) throw ConfigError("exclusion file missing: " + path.string());
        for (const auto& raw : split_lines(*text)) {
            std::string line = trim(raw);
            if (line.empty() || line[0] == '#') continue;
            list.add(line, path.filename().string());
        }
        return list;
    }
};

namespace detail {

inline std::string keyword_expansion_prompt(const Discipline& discipline) {
    std::string seeds = join(discipline.seed_keywords, ", ");
    return "You are compiling search keywords to find open-source repositories containing "
           "data-driven scientific analysis code.\n\n"
           "Discipline: " + discipline.id + "\n"
           "Seed keywords: " + seeds + "\n\n"
           "Propose additional related keywords and subfield terms a researcher in this "
           "discipline would use to tag or describe such repositories. Include established "
           "subfields and method families; avoid overly generic software terms.\n\n"
           "Reply in the following format:\n"
           "KEYWORDS: [first keyword, second keyword, ...]";
}

// Case-insensitive ordered merge used for keywords and query provenance.
inline void merge_unique_ci(std::vector<std::string>& into, const std::vector<std::string>& from,
                            std::set<std::string>& seen) {
    for (const auto& raw : from) {
        std::string value = trim(raw);
        if (value.empty()) continue;
        std::string folded = to_lower(value);
        if (!seen.insert(folded).second) continue;
        into.push_back(value);
    }
}

} // namespace detail

// Seed keywords plus model-proposed related terms, seeds first, deduplicated
// case-insensitively. A model that can't produce a usable list after the one
// format reminder costs us the expansion, not the discipline.
inline std::vector<std::string> expand_keywords(Gateway& gw, const Discipline& discipline,
                                                const WarnFn& warn = ignore_warnings) {
    validate_discipline(discipline);
    std::vector<std::string> keywords;
    std::set<std::string> seen;
    detail::merge_unique_ci(keywords, discipline.seed_keywords, seen);

    auto parsed = complete_parsed<std::vector<std::string>>(
        gw, "search", "keyword_expand", detail::keyword_expansion_prompt(discipline),
        ModelRole::general, gw.config().temperature_classification,
        [](const std::string& reply) { return parse_path_list(reply, "KEYWORDS"); },
        "reply with exactly one line of the form 'KEYWORDS: [kw1, kw2, ...]'");
    if (parsed.value) {
        detail::merge_unique_ci(keywords, *parsed.value, seen);
    } else {
        warn("keyword expansion for '" + discipline.id +
             "' returned no parseable list twice; using seeds only");
    }
    return keywords;
}

// Runs one query against a host and lifts the hits into RepoRefs tagged with
// the query that found them.
inline std::vector<RepoRef> search_host(HostClient& client, const SearchQuery& query,
                                        long long min_stars, const std::string& language_filter) {
    if (trim(query.keyword).empty()) throw InvalidIdentifier("search keyword is empty");
    if (min_stars < 0) throw ConfigError("min_stars must be non-negative");
    std::vector<RepoRef> repos;
    for (auto& hit : client.search(query.keyword, language_filter, min_stars)) {
        RepoRef repo;
        repo.host = hit.host;
        repo.owner = hit.owner;
        repo.name = hit.name;
        repo.url = hit.url;
        repo.stars = hit.stars;
        repo.primary_language = hit.primary_language;
        repo.license_id = hit.license_id;
        repo.discipline_ids = {query.discipline_id};
        repo.found_by_queries = {query.keyword};
        repo.research_verdict = ResearchVerdict::unjudged;
        repo.paper_links = hit.paper_links;
        repos.push_back(std::move(repo));
    }
    return repos;
}

inline constexpr std::size_t kReadmePromptBudget = 24000; // bytes of README kept in the prompt

// README-based research/not-research judgment. Mutates the repo's verdict and
// paper links in place. Repos that arrived with paper links attached by their
// host skip link extraction — the host already knows the paper.
inline void classify_repository(Gateway& gw, RepoRef& repo,
                                const std::optional<std::string>& readme,
                                const std::string& discipline_keyword,
                                const WarnFn& warn = ignore_warnings,
                                std::size_t readme_budget = kReadmePromptBudget) {
    if (!readme || trim(*readme).empty()) {
        repo.research_verdict = ResearchVerdict::not_research;
        return;
    }
    bool links_from_host = !repo.paper_links.empty();
    std::map<std::string, std::string> bindings = {
        {"keyword", discipline_keyword},
        {"readme", truncate_tail(*readme, readme_budget)},
    };
    std::string prompt = render(TemplateId::crawl_filter, bindings);

    struct Verdict {
        bool research;
        std::vector<std::string> links;
    };
    auto parse = [links_from_host](const std::string& reply) {
        Verdict v;
        v.research = parse_yes_no(reply, "RESEARCH");
        if (!links_from_host) v.links = parse_path_list(reply, "LINKS");
        return v;
    };
    auto parsed = complete_parsed<Verdict>(
        gw, "search", to_string(TemplateId::crawl_filter), prompt, ModelRole::general,
        gw.temperature_for(TemplateId::crawl_filter), parse,
        "answer with a line 'RESEARCH: YES' or 'RESEARCH: NO' followed by a line "
        "'LINKS: [url1, url2, ...]' (empty brackets when there are none)");
    if (!parsed.value) {
        warn("repository " + repo.key() + ": unparseable research classification twice; "
             "conservatively marked not_research");
        repo.research_verdict = ResearchVerdict::not_research;
        return;
    }
    repo.research_verdict =
        parsed.value->research ? ResearchVerdict::research : ResearchVerdict::not_research;
    if (!links_from_host) repo.paper_links = parsed.value->links;
}

// Collapses duplicates (one entry per canonical key, first appearance keeps
// its slot) and removes benchmark-overlap exclusions. Duplicate merges union
// the provenance fields; scalar host metadata follows the higher-star record
// since star counts drift between queries.
inline std::vector<RepoRef> dedupe_and_exclude(const std::vector<RepoRef>& repos,
                                               const ExclusionList& exclusions) {
    std::vector<RepoRef> out;
    std::map<std::string, std::size_t> slot_by_key;
    for (const auto& repo : repos) {
        std::string key = repo.key();
        if (exclusions.contains(key)) continue;
        auto it = slot_by_key.find(key);
        if (it == slot_by_key.end()) {
            slot_by_key.emplace(key, out.size());
            out.push_back(repo);
            continue;
        }
        RepoRef& kept = out[it->second];
        std::set<std::string> seen_disc(kept.discipline_ids.begin(), kept.discipline_ids.end());
        for (const auto& d : repo.discipline_ids)
            if (seen_disc.insert(d).second) kept.discipline_ids.push_back(d);
        std::set<std::string> seen_q(kept.found_by_queries.begin(), kept.found_by_queries.end());
        for (const auto& q : repo.found_by_queries)
            if (seen_q.insert(q).second) kept.found_by_queries.push_back(q);
        std::set<std::string> seen_links(kept.paper_links.begin(), kept.paper_links.end());
        for (const auto& l : repo.paper_links)
            if (seen_links.insert(l).second) kept.paper_links.push_back(l);
        if (repo.stars > kept.stars) {
            kept.stars = repo.stars;
            kept.url = repo.url;
            kept.host = repo.host;
            kept.primary_language = repo.primary_language;
            if (!repo.license_id.empty()) kept.license_id = repo.license_id;
        } else if (kept.license_id.empty() && !repo.license_id.empty()) {
            kept.license_id = repo.license_id;
        }
        // A judged verdict beats unjudged; research beats not_research so a
        // duplicate judged positive is never lost.
        if (kept.research_verdict == ResearchVerdict::unjudged ||
            repo.research_verdict == ResearchVerdict::research)
            if (repo.research_verdict != ResearchVerdict::unjudged)
                kept.research_verdict = repo.research_verdict;
    }
    return out;
}

} // namespace autosdt
