#pragma once

#include <autosdt/errors.hpp>
#include <autosdt/fsio.hpp>
#include <autosdt/http_util.hpp>
#include <autosdt/model.hpp>
#include <autosdt/rate_limit.hpp>
#include <autosdt/strings.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace autosdt {

// One raw repository hit as returned by a code host, before it becomes a
// RepoRef with discipline bookkeeping attached.
struct HostHit {
    Host host = Host::github;
    std::string owner;
    std::string name;
    std::string url;
    long long stars = 0;
    std::string primary_language;
    std::string license_id;                // SPDX id or empty when the host has none
    std::vector<std::string> paper_links;  // only populated by hosts that know the paper
};

class HostClient {
public:
    virtual ~HostClient() = default;
    virtual Host host() const = 0;
    // Keyword search restricted to a primary language and a star floor.
    virtual std::vector<HostHit> search(const std::string& keyword, const std::string& language,
                                        long long min_stars) = 0;
    // nullopt when the repository has no README (or the host returns 404).
    virtual std::optional<std::string> fetch_readme(const std::string& owner,
                                                    const std::string& name) = 0;
};

namespace detail {

// Shared status-code policy for host APIs. 401 is always bad credentials;
// 403 is a rate limit when the host says so and an auth problem otherwise.
[[noreturn]] inline void throw_for_host_status(const httplib::Result& res,
                                               const std::string& what) {
    if (!res) throw ProviderUnavailable(what + ": transport error (" + to_string(res.error()) + ")");
    int status = res->status;
    std::string body_head = res->body.substr(0, 200);
    if (status == 401) throw AuthError(what + ": 401 unauthorized");
    if (status == 429 || (status == 403 && (res->has_header("Retry-After") ||
                                            contains_ci(res->body, "rate limit")))) {
        int retry_after = 60;
        if (res->has_header("Retry-After")) {
            try {
                retry_after = std::stoi(res->get_header_value("Retry-After"));
            } catch (...) {
            }
        }
        throw RateLimited(what + ": throttled by host", retry_after);
    }
    if (status == 403) throw AuthError(what + ": 403 forbidden");
    throw ProviderUnavailable(what + ": HTTP " + std::to_string(status) + " " + body_head);
}

inline bool language_matches(const std::string& repo_language, const std::string& filter) {
    if (filter.empty() || repo_language.empty()) return true;
    return to_lower(repo_language) == to_lower(filter);
}

} // namespace detail

// GitHub's graph query endpoint. The search qualifier string couples the
// discipline keyword with research-indicative terms so plain tool repos
// don't flood the results.
class GithubGraphqlClient : public HostClient {
public:
    GithubGraphqlClient(std::string base_url, std::string token, int page_cap = 10,
                        double rps = 0.0, int timeout_s = 60)
        : m_base_url(std::move(base_url)),
          m_token(std::move(token)),
          m_page_cap(page_cap),
          m_limiter(rps),
          m_timeout_s(timeout_s) {}

    Host host() const override { return Host::github; }

    static std::string search_qualifier(const std::string& keyword, const std::string& language,
                                        long long min_stars) {
        std::string q = keyword + " (citation OR doi OR arxiv) in:readme,description";
        if (!language.empty()) q += " language:" + language;
        q += " stars:>=" + std::to_string(min_stars);
        return q;
    }

    std::vector<HostHit> search(const std::string& keyword, const std::string& language,
                                long long min_stars) override {
        static const char* kQuery =
            "query($q: String!, $after: String) {"
            " search(query: $q, type: REPOSITORY, first: 100, after: $after) {"
            " pageInfo { hasNextPage endCursor }"
            " nodes { ... on Repository {"
            " nameWithOwner url stargazerCount"
            " primaryLanguage { name } licenseInfo { spdxId } } } } }";
        std::vector<HostHit> hits;
        std::string cursor;
        for (int page = 0; page < m_page_cap; ++page) {
            nlohmann::json variables = {{"q", search_qualifier(keyword, language, min_stars)}};
            if (cursor.empty())
                variables["after"] = nullptr;
            else
                variables["after"] = cursor;
            nlohmann::json doc = post_graphql({{"query", kQuery}, {"variables", variables}});
            const auto& search = doc.at("data").at("search");
            for (const auto& node : search.at("nodes")) {
                if (!node.contains("nameWithOwner")) continue;  // non-repo node
                HostHit hit;
                hit.host = Host::github;
                std::string name_with_owner = node.at("nameWithOwner").get<std::string>();
                auto slash = name_with_owner.find('/');
                if (slash == std::string::npos) continue;
                hit.owner = name_with_owner.substr(0, slash);
                hit.name = name_with_owner.substr(slash + 1);
                hit.url = node.value("url", "https://github.com/" + name_with_owner);
                hit.stars = node.value("stargazerCount", 0LL);
                if (node.contains("primaryLanguage") && node["primaryLanguage"].is_object())
                    hit.primary_language = node["primaryLanguage"].value("name", "");
                if (node.contains("licenseInfo") && node["licenseInfo"].is_object())
                    hit.license_id = node["licenseInfo"].value("spdxId", "");
                // The query already filters, but hosts index READMEs lazily;
                // re-check the hard constraints client-side.
                if (hit.stars < min_stars) continue;
                if (!detail::language_matches(hit.primary_language, language)) continue;
                hits.push_back(std::move(hit));
            }
            const auto& page_info = search.at("pageInfo");
            if (!page_info.value("hasNextPage", false)) break;
            cursor = page_info.value("endCursor", "");
            if (cursor.empty()) break;
        }
        return hits;
    }

    std::optional<std::string> fetch_readme(const std::string& owner,
                                            const std::string& name) override {
        m_limiter.acquire();
        auto [origin, prefix] = split_base_url(m_base_url);
        auto client = make_http_client(origin, m_timeout_s);
        httplib::Headers headers = {{"Accept", "application/vnd.github.raw"},
                                    {"User-Agent", "autosdt"}};
        if (!m_token.empty()) headers.emplace("Authorization", "Bearer " + m_token);
        auto res = client->Get(prefix + "/repos/" + owner + "/" + name + "/readme", headers);
        if (res && res->status == 404) return std::nullopt;
        if (!res || res->status < 200 || res->status >= 300)
            detail::throw_for_host_status(res, "github readme " + owner + "/" + name);
        return res->body;
    }

private:
    nlohmann::json post_graphql(const nlohmann::json& body) {
        m_limiter.acquire();
        auto [origin, prefix] = split_base_url(m_base_url);
        auto client = make_http_client(origin, m_timeout_s);
        httplib::Headers headers = {{"User-Agent", "autosdt"}};
        if (!m_token.empty()) headers.emplace("Authorization", "Bearer " + m_token);
        auto res = client->Post(prefix + "/graphql", headers, body.dump(), "application/json");
        if (!res || res->status < 200 || res->status >= 300)
            detail::throw_for_host_status(res, "github search");
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw ProviderUnavailable(std::string("github search: bad JSON: ") + e.what());
        }
        if (doc.contains("errors") && doc["errors"].is_array() && !doc["errors"].empty()) {
            const auto& first = doc["errors"][0];
            std::string type = first.value("type", "");
            std::string message = first.value("message", "graphql error");
            if (type == "RATE_LIMITED") throw RateLimited("github search: " + message, 60);
            throw ProviderUnavailable("github search: " + message);
        }
        if (!doc.contains("data"))
            throw ProviderUnavailable("github search: response lacks data");
        return doc;
    }

    std::string m_base_url;
    std::string m_token;
    int m_page_cap;
    RateLimiter m_limiter;
    int m_timeout_s;
};

// Papers-with-code style listing API: GET /api/v1/search/?q=...&page=N returns
// {count, next, results:[{repository:{...}, paper:{...}}]}. Repos arrive with
// their paper attached, so no README link extraction is needed downstream.
class PapersWithCodeClient : public HostClient {
public:
    PapersWithCodeClient(std::string base_url, std::string readme_base_url, int page_cap = 10,
                         double rps = 0.0, int timeout_s = 60)
        : m_base_url(std::move(base_url)),
          m_readme_base_url(std::move(readme_base_url)),
          m_page_cap(page_cap),
          m_limiter(rps),
          m_timeout_s(timeout_s) {}

    Host host() const override { return Host::paperswithcode; }

    std::vector<HostHit> search(const std::string& keyword, const std::string& language,
                                long long min_stars) override {
        std::vector<HostHit> hits;
        for (int page = 1; page <= m_page_cap; ++page) {
            m_limiter.acquire();
            auto [origin, prefix] = split_base_url(m_base_url);
            auto client = make_http_client(origin, m_timeout_s);
            std::string path = prefix + "/api/v1/search/?q=" + url_encode(keyword) +
                               "&items_per_page=100&page=" + std::to_string(page);
            auto res = client->Get(path, {{"User-Agent", "autosdt"}});
            if (!res || res->status < 200 || res->status >= 300)
                detail::throw_for_host_status(res, "paperswithcode search");
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw ProviderUnavailable(std::string("paperswithcode search: bad JSON: ") +
                                          e.what());
            }
            for (const auto& result : doc.value("results", nlohmann::json::array())) {
                if (!result.contains("repository") || !result["repository"].is_object()) continue;
                const auto& repo = result["repository"];
                HostHit hit;
                hit.host = Host::paperswithcode;
                hit.owner = repo.value("owner", "");
                hit.name = repo.value("name", "");
                hit.url = repo.value("url", "");
                hit.stars = repo.value("stars", 0LL);
                hit.primary_language = repo.value("language", "");
                hit.license_id = repo.value("license", "");
                if (result.contains("paper") && result["paper"].is_object()) {
                    std::string link = result["paper"].value("url_abs", "");
                    if (link.empty()) link = result["paper"].value("url", "");
                    if (!link.empty()) hit.paper_links.push_back(link);
                }
                if (hit.owner.empty() || hit.name.empty()) continue;
                if (hit.stars < min_stars) continue;
                if (!detail::language_matches(hit.primary_language, language)) continue;
                hits.push_back(std::move(hit));
            }
            if (doc.value("next", nlohmann::json()).is_null()) break;
        }
        return hits;
    }

    // The listing API carries no README; fall back to the raw-content host the
    // repos actually live on.
    std::optional<std::string> fetch_readme(const std::string& owner,
                                            const std::string& name) override {
        for (const char* filename : {"README.md", "README.rst", "README"}) {
            m_limiter.acquire();
            auto [origin, prefix] = split_base_url(m_readme_base_url);
            auto client = make_http_client(origin, m_timeout_s);
            auto res = client->Get(prefix + "/" + owner + "/" + name + "/HEAD/" + filename,
                                   {{"User-Agent", "autosdt"}});
            if (res && res->status >= 200 && res->status < 300) return res->body;
            if (res && res->status == 404) continue;
            detail::throw_for_host_status(res, "readme " + owner + "/" + name);
        }
        return std::nullopt;
    }

private:
    std::string m_base_url;
    std::string m_readme_base_url;
    int m_page_cap;
    RateLimiter m_limiter;
    int m_timeout_s;
};

// Offline host backed by one JSON document:
//   {"host": "github", "repos": [{"owner", "name", "url", "stars", "language",
//    "license", "keywords": [...], "readme": <path relative to this file> |
//    "readme_text": <inline>, "paper_links": [...], "clone_path": <path>}]}
// Search matching is exact keyword membership (case-insensitive), with the
// same stars/language constraints the live clients apply.
class FixtureHostClient : public HostClient {
public:
    explicit FixtureHostClient(const std::filesystem::path& fixture_file) {
        auto text = read_file(fixture_file);
        if (!text) throw ConfigError("fixture host file missing: " + fixture_file.string());
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(*text);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("fixture host file " + fixture_file.string() + ": " + e.what());
        }
        m_host = host_from_string(doc.value("host", "github"));
        m_dir = fixture_file.parent_path();
        for (const auto& repo : doc.value("repos", nlohmann::json::array())) {
            Entry entry;
            entry.hit.host = m_host;
            entry.hit.owner = repo.value("owner", "");
            entry.hit.name = repo.value("name", "");
            entry.hit.url = repo.value("url", "");
            entry.hit.stars = repo.value("stars", 0LL);
            entry.hit.primary_language = repo.value("language", "");
            entry.hit.license_id = repo.value("license", "");
            for (const auto& link : repo.value("paper_links", nlohmann::json::array()))
                entry.hit.paper_links.push_back(link.get<std::string>());
            for (const auto& kw : repo.value("keywords", nlohmann::json::array()))
                entry.keywords.push_back(to_lower(kw.get<std::string>()));
            entry.readme_path = repo.value("readme", "");
            if (repo.contains("readme_text")) entry.readme_text = repo["readme_text"].get<std::string>();
            entry.clone_path = repo.value("clone_path", "");
            m_entries.push_back(std::move(entry));
        }
    }

    Host host() const override { return m_host; }

    std::vector<HostHit> search(const std::string& keyword, const std::string& language,
                                long long min_stars) override {
        std::string needle = to_lower(trim(keyword));
        std::vector<HostHit> hits;
        for (const auto& entry : m_entries) {
            bool matched = false;
            for (const auto& kw : entry.keywords)
                if (kw == needle) matched = true;
            if (!matched) continue;
            if (entry.hit.stars < min_stars) continue;
            if (!detail::language_matches(entry.hit.primary_language, language)) continue;
            hits.push_back(entry.hit);
        }
        return hits;
    }

    std::optional<std::string> fetch_readme(const std::string& owner,
                                            const std::string& name) override {
        const Entry* entry = find(owner, name);
        if (!entry) return std::nullopt;
        if (entry->readme_text) return entry->readme_text;
        if (entry->readme_path.empty()) return std::nullopt;
        return read_file(m_dir / entry->readme_path);
    }

    // Local directory standing in for the remote clone URL; empty when the
    // fixture defines none.
    std::filesystem::path clone_path(const std::string& owner, const std::string& name) const {
        const Entry* entry = find(owner, name);
        if (!entry || entry->clone_path.empty()) return {};
        return m_dir / entry->clone_path;
    }

private:
    struct Entry {
        HostHit hit;
        std::vector<std::string> keywords;
        std::string readme_path;
        std::optional<std::string> readme_text;
        std::string clone_path;
    };

    const Entry* find(const std::string& owner, const std::string& name) const {
        std::string o = to_lower(trim(owner)), n = to_lower(trim(name));
        for (const auto& entry : m_entries)
            if (to_lower(entry.hit.owner) == o && to_lower(entry.hit.name) == n) return &entry;
        return nullptr;
    }

    Host m_host = Host::github;
    std::filesystem::path m_dir;
    std::vector<Entry> m_entries;
};

} // namespace autosdt
