#pragma once

#include <autosdt/errors.hpp>
#include <autosdt/fsio.hpp>
#include <autosdt/hash.hpp>
#include <autosdt/llm_gateway.hpp>
#include <autosdt/model.hpp>
#include <autosdt/select.hpp>
#include <autosdt/strings.hpp>

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace autosdt {

// ---------------------------------------------------------------------------
// Config document parsing (TOML-style subset)
//
// Supported: [section] headers (become dotted key prefixes), `key = value`
// lines, `#` comments, quoted strings, integers, booleans, and single-line
// arrays of quoted strings. That is the whole grammar; anything fancier is a
// ConfigError with a line number.

namespace detail {

inline std::string strip_config_comment(const std::string& line) {
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (c == '"' && (i == 0 || line[i - 1] != '\\')) in_quotes = !in_quotes;
        if (c == '#' && !in_quotes) return line.substr(0, i);
    }
    return line;
}

inline std::string parse_quoted(const std::string& text, std::size_t line_no) {
    if (text.size() < 2 || text.front() != '"' || text.back() != '"')
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": malformed string literal: " + text);
    std::string out;
    for (std::size_t i = 1; i + 1 < text.size(); ++i) {
        char c = text[i];
        if (c == '\\') {
            if (i + 2 >= text.size())
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": dangling escape in string");
            char e = text[++i];
            if (e == 'n') out += '\n';
            else if (e == 't') out += '\t';
            else if (e == '"') out += '"';
            else if (e == '\\') out += '\\';
            else
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": unsupported escape \\" + std::string(1, e));
        } else if (c == '"') {
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": unescaped quote inside string");
        } else {
            out += c;
        }
    }
    return out;
}

inline nlohmann::json parse_config_value(const std::string& raw, std::size_t line_no) {
    std::string value = trim(raw);
    if (value.empty())
        throw ConfigError("config line " + std::to_string(line_no) + ": missing value");
    if (value.front() == '"') return parse_quoted(value, line_no);
    if (value == "true") return true;
    if (value == "false") return false;
    if (value.front() == '[') {
        if (value.back() != ']')
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": arrays must close on the same line");
        std::vector<std::string> items;
        std::string body = trim(value.substr(1, value.size() - 2));
        std::size_t i = 0;
        while (i < body.size()) {
            while (i < body.size() && (body[i] == ' ' || body[i] == '\t' || body[i] == ','))
                ++i;
            if (i >= body.size()) break;
            if (body[i] != '"')
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": arrays hold quoted strings only");
            std::size_t end = i + 1;
            while (end < body.size() && !(body[end] == '"' && body[end - 1] != '\\')) ++end;
            if (end >= body.size())
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": unterminated string in array");
            items.push_back(parse_quoted(body.substr(i, end - i + 1), line_no));
            i = end + 1;
        }
        return items;
    }
    std::string digits = value;
    bool negative = !digits.empty() && digits[0] == '-';
    if (negative) digits = digits.substr(1);
    if (digits.empty() ||
        digits.find_first_not_of("0123456789") != std::string::npos)
        throw ConfigError("config line " + std::to_string(line_no) +
                          ": unrecognized value: " + value);
    return std::stoll(value);
}

} // namespace detail

// Flat dotted-key document: "[search]\nmin_stars = 10" parses to
// {"search.min_stars": 10}.
inline std::map<std::string, nlohmann::json> parse_config_text(const std::string& text) {
    std::map<std::string, nlohmann::json> doc;
    std::string section;
    std::size_t line_no = 0;
    for (const auto& raw : split_lines(text)) {
        ++line_no;
        std::string line = trim(detail::strip_config_comment(raw));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3)
                throw ConfigError("config line " + std::to_string(line_no) +
                                  ": malformed section header: " + line);
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) +
                              ": expected key = value: " + line);
        std::string key = trim(line.substr(0, eq));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        std::string full = section.empty() ? key : section + "." + key;
        if (doc.count(full))
            throw ConfigError("config line " + std::to_string(line_no) + ": duplicate key " +
                              full);
        doc[full] = detail::parse_config_value(line.substr(eq + 1), line_no);
    }
    return doc;
}

// ---------------------------------------------------------------------------
// Pipeline configuration

struct PipelineConfig {
    GatewayMode mode = GatewayMode::replay;
    std::vector<Discipline> disciplines;

    // search
    long long min_stars = 10;
    std::string language_filter = "Python";
    std::vector<Host> hosts = {Host::github};
    std::string github_base_url = "https://api.github.com";
    std::string pwc_base_url = "https://paperswithcode.com";
    std::string pwc_readme_base_url = "https://raw.githubusercontent.com";
    std::filesystem::path github_fixture; // set: offline fixture replaces the live host
    std::filesystem::path pwc_fixture;
    double host_rps = 0.0;

    // select
    std::vector<std::string> deny_dirs; // empty: the built-in default list
    std::size_t max_lines = 1000;

    // adapt
    int max_iterations = 3; // the pipeline's debugging bound; override explicitly
    int exec_timeout_s = 300;
    bool allow_net = false;
    std::string env_python = "python3";

    // run
    int workers = 4;
    std::filesystem::path state_dir = "state";
    std::filesystem::path cache_dir;  // empty: <state_dir>/llm-cache
    std::filesystem::path out_dir = "out";
    std::filesystem::path exclude_file;

    // llm
    std::string general_model = "general-model";
    std::string coder_model = "coder-model";
    std::string general_input_rate = "0";  // USD per million tokens, exact decimal
    std::string general_output_rate = "0";
    std::string coder_input_rate = "0";
    std::string coder_output_rate = "0";
    std::string llm_base_url;
    double llm_rps = 0.0;

    std::filesystem::path effective_cache_dir() const {
        return cache_dir.empty() ? state_dir / "llm-cache" : cache_dir;
    }

    DirectoryDenyList deny_list() const {
        if (deny_dirs.empty()) return DirectoryDenyList::defaults();
        DirectoryDenyList list;
        for (const auto& name : deny_dirs) list.names.insert(to_lower(name));
        return list;
    }
};

namespace detail {

// Typed extraction with consumption, so leftovers can be reported as unknown
// keys (the usual typo failure mode for config files).
class DocReader {
public:
    explicit DocReader(std::map<std::string, nlohmann::json> doc) : m_doc(std::move(doc)) {}

    std::optional<std::string> take_string(const std::string& key) {
        auto v = take(key);
        if (!v) return std::nullopt;
        if (!v->is_string()) throw ConfigError("config key " + key + " must be a string");
        return v->get<std::string>();
    }

    std::optional<long long> take_int(const std::string& key) {
        auto v = take(key);
        if (!v) return std::nullopt;
        if (!v->is_number_integer()) throw ConfigError("config key " + key + " must be an integer");
        return v->get<long long>();
    }

    std::optional<bool> take_bool(const std::string& key) {
        auto v = take(key);
        if (!v) return std::nullopt;
        if (!v->is_boolean()) throw ConfigError("config key " + key + " must be a boolean");
        return v->get<bool>();
    }

    std::optional<std::vector<std::string>> take_array(const std::string& key) {
        auto v = take(key);
        if (!v) return std::nullopt;
        if (!v->is_array()) throw ConfigError("config key " + key + " must be an array");
        return v->get<std::vector<std::string>>();
    }

    // All remaining keys under `prefix.`, consumed.
    std::map<std::string, nlohmann::json> take_prefixed(const std::string& prefix) {
        std::map<std::string, nlohmann::json> out;
        auto it = m_doc.lower_bound(prefix + ".");
        while (it != m_doc.end() && starts_with(it->first, prefix + ".")) {
            out[it->first.substr(prefix.size() + 1)] = it->second;
            it = m_doc.erase(it);
        }
        return out;
    }

    void expect_empty() const {
        if (m_doc.empty()) return;
        std::string keys;
        for (const auto& [k, v] : m_doc) keys += (keys.empty() ? "" : ", ") + k;
        throw ConfigError("unknown config key(s): " + keys);
    }

private:
    std::optional<nlohmann::json> take(const std::string& key) {
        auto it = m_doc.find(key);
        if (it == m_doc.end()) return std::nullopt;
        nlohmann::json v = it->second;
        m_doc.erase(it);
        return v;
    }

    std::map<std::string, nlohmann::json> m_doc;
};

} // namespace detail

inline PipelineConfig config_from_doc(std::map<std::string, nlohmann::json> doc) {
    detail::DocReader reader(std::move(doc));
    PipelineConfig cfg;

    if (auto v = reader.take_string("mode")) cfg.mode = gateway_mode_from_string(*v);

    if (auto v = reader.take_int("search.min_stars")) cfg.min_stars = *v;
    if (auto v = reader.take_string("search.language")) cfg.language_filter = *v;
    if (auto v = reader.take_array("search.hosts")) {
        cfg.hosts.clear();
        for (const auto& h : *v) {
            try {
                cfg.hosts.push_back(host_from_string(h));
            } catch (const SchemaError& e) {
                throw ConfigError(std::string("search.hosts: ") + e.what());
            }
        }
        if (cfg.hosts.empty()) throw ConfigError("search.hosts must name at least one host");
    }
    if (auto v = reader.take_string("search.github_base_url")) cfg.github_base_url = *v;
    if (auto v = reader.take_string("search.pwc_base_url")) cfg.pwc_base_url = *v;
    if (auto v = reader.take_string("search.pwc_readme_base_url")) cfg.pwc_readme_base_url = *v;
    if (auto v = reader.take_string("search.github_fixture")) cfg.github_fixture = *v;
    if (auto v = reader.take_string("search.pwc_fixture")) cfg.pwc_fixture = *v;
    if (auto v = reader.take_int("search.host_rps")) cfg.host_rps = static_cast<double>(*v);

    if (auto v = reader.take_array("select.deny_dirs")) cfg.deny_dirs = *v;
    if (auto v = reader.take_int("select.max_lines")) {
        if (*v < 1) throw ConfigError("select.max_lines must be positive");
        cfg.max_lines = static_cast<std::size_t>(*v);
    }

    if (auto v = reader.take_int("adapt.max_iterations")) {
        // The corpus schema records iterations_used in 1..3, so the loop bound
        // cannot exceed what an emitted task is allowed to claim.
        if (*v < 1 || *v > 3)
            throw ConfigError("adapt.max_iterations must be between 1 and 3");
        cfg.max_iterations = static_cast<int>(*v);
    }
    if (auto v = reader.take_int("adapt.exec_timeout_s")) {
        if (*v < 1) throw ConfigError("adapt.exec_timeout_s must be positive");
        cfg.exec_timeout_s = static_cast<int>(*v);
    }
    if (auto v = reader.take_bool("adapt.allow_net")) cfg.allow_net = *v;
    if (auto v = reader.take_string("adapt.env_python")) cfg.env_python = *v;

    if (auto v = reader.take_int("run.workers")) {
        if (*v < 1) throw ConfigError("run.workers must be positive");
        cfg.workers = static_cast<int>(*v);
    }
    if (auto v = reader.take_string("run.state_dir")) cfg.state_dir = *v;
    if (auto v = reader.take_string("run.cache_dir")) cfg.cache_dir = *v;
    if (auto v = reader.take_string("run.out_dir")) cfg.out_dir = *v;
    if (auto v = reader.take_string("run.exclude_file")) cfg.exclude_file = *v;

    if (auto v = reader.take_string("llm.general_model")) cfg.general_model = *v;
    if (auto v = reader.take_string("llm.coder_model")) cfg.coder_model = *v;
    if (auto v = reader.take_string("llm.general_input_usd_per_mtok")) cfg.general_input_rate = *v;
    if (auto v = reader.take_string("llm.general_output_usd_per_mtok"))
        cfg.general_output_rate = *v;
    if (auto v = reader.take_string("llm.coder_input_usd_per_mtok")) cfg.coder_input_rate = *v;
    if (auto v = reader.take_string("llm.coder_output_usd_per_mtok")) cfg.coder_output_rate = *v;
    if (auto v = reader.take_string("llm.base_url")) cfg.llm_base_url = *v;
    if (auto v = reader.take_int("llm.rps")) cfg.llm_rps = static_cast<double>(*v);

    auto discipline_ids = reader.take_array("disciplines.ids");
    auto seeds = reader.take_prefixed("seed_keywords");
    if (discipline_ids) {
        for (const auto& id : *discipline_ids) {
            Discipline d;
            d.id = id;
            auto it = seeds.find(id);
            if (it != seeds.end()) {
                if (!it->second.is_array())
                    throw ConfigError("config key seed_keywords." + id + " must be an array");
                d.seed_keywords = it->second.get<std::vector<std::string>>();
                seeds.erase(it);
            }
            validate_discipline(d); // kebab-case ids, non-empty seeds
            cfg.disciplines.push_back(std::move(d));
        }
    }
    for (const auto& [id, v] : seeds)
        throw ConfigError("seed_keywords." + id + " names an unconfigured discipline");

    reader.expect_empty();

    if (cfg.min_stars < 0) throw ConfigError("search.min_stars must be non-negative");
    for (const auto& rate : {cfg.general_input_rate, cfg.general_output_rate,
                             cfg.coder_input_rate, cfg.coder_output_rate})
        TokenRate::from_usd_per_mtok(rate); // validates the literal
    return cfg;
}

inline PipelineConfig load_config_file(const std::filesystem::path& path) {
    auto body = read_file(path);
    if (!body) throw ConfigError("config file not found: " + path.string());
    return config_from_doc(parse_config_text(*body));
}

// ---------------------------------------------------------------------------
// Flag overrides (flags > config file > defaults)

struct CliOverrides {
    std::optional<std::string> mode;
    std::optional<std::string> out_dir;
    std::optional<std::string> state_dir;
    std::optional<std::string> exclude_file;
    std::optional<bool> allow_net;
    std::optional<int> workers;
};

inline void apply_overrides(PipelineConfig& cfg, const CliOverrides& o) {
    if (o.mode) cfg.mode = gateway_mode_from_string(*o.mode);
    if (o.out_dir) cfg.out_dir = *o.out_dir;
    if (o.state_dir) cfg.state_dir = *o.state_dir;
    if (o.exclude_file) cfg.exclude_file = *o.exclude_file;
    if (o.allow_net) cfg.allow_net = *o.allow_net;
    if (o.workers) {
        if (*o.workers < 1) throw ConfigError("--workers must be positive");
        cfg.workers = *o.workers;
    }
}

// Configured paths are taken relative to the invoking directory and pinned
// down up front, before the run id is derived: a run's identity, the paths
// inside its recorded prompts, and the interpreter paths handed to
// subprocesses (which run with their own working directory) must never depend
// on where a resume happens to be launched from.
inline void normalize_paths(PipelineConfig& cfg) {
    auto pin = [](std::filesystem::path& p) {
        if (!p.empty()) p = std::filesystem::absolute(p).lexically_normal();
    };
    pin(cfg.state_dir);
    pin(cfg.cache_dir); // empty stays empty: it derives from state_dir
    pin(cfg.out_dir);
    pin(cfg.exclude_file);
    pin(cfg.github_fixture);
    pin(cfg.pwc_fixture);
}

// ---------------------------------------------------------------------------
// Identity: canonical serialization, hash, run id
//
// Secrets never live in PipelineConfig (environment only), so the hash of the
// effective config is safe to echo into provenance.

inline nlohmann::json encode_config(const PipelineConfig& cfg) {
    nlohmann::json j; // plain json sorts keys: canonical by construction
    j["mode"] = to_string(cfg.mode);
    nlohmann::json discs = nlohmann::json::array();
    for (const auto& d : cfg.disciplines)
        discs.push_back({{"id", d.id}, {"seed_keywords", d.seed_keywords}});
    j["disciplines"] = discs;
    j["search.min_stars"] = cfg.min_stars;
    j["search.language"] = cfg.language_filter;
    nlohmann::json hosts = nlohmann::json::array();
    for (const auto& h : cfg.hosts) hosts.push_back(to_string(h));
    j["search.hosts"] = hosts;
    j["search.github_base_url"] = cfg.github_base_url;
    j["search.pwc_base_url"] = cfg.pwc_base_url;
    j["search.pwc_readme_base_url"] = cfg.pwc_readme_base_url;
    j["search.github_fixture"] = cfg.github_fixture.generic_string();
    j["search.pwc_fixture"] = cfg.pwc_fixture.generic_string();
    j["search.host_rps"] = cfg.host_rps;
    j["select.deny_dirs"] = cfg.deny_dirs;
    j["select.max_lines"] = cfg.max_lines;
    j["adapt.max_iterations"] = cfg.max_iterations;
    j["adapt.exec_timeout_s"] = cfg.exec_timeout_s;
    j["adapt.allow_net"] = cfg.allow_net;
    j["adapt.env_python"] = cfg.env_python;
    j["run.workers"] = cfg.workers;
    j["run.state_dir"] = cfg.state_dir.generic_string();
    j["run.cache_dir"] = cfg.cache_dir.generic_string();
    j["run.out_dir"] = cfg.out_dir.generic_string();
    j["run.exclude_file"] = cfg.exclude_file.generic_string();
    j["llm.general_model"] = cfg.general_model;
    j["llm.coder_model"] = cfg.coder_model;
    j["llm.general_input_usd_per_mtok"] = cfg.general_input_rate;
    j["llm.general_output_usd_per_mtok"] = cfg.general_output_rate;
    j["llm.coder_input_usd_per_mtok"] = cfg.coder_input_rate;
    j["llm.coder_output_usd_per_mtok"] = cfg.coder_output_rate;
    j["llm.base_url"] = cfg.llm_base_url;
    j["llm.rps"] = cfg.llm_rps;
    return j;
}

inline std::string config_hash(const PipelineConfig& cfg) {
    return sha256_hex(encode_config(cfg).dump());
}

inline std::string run_id_for(const PipelineConfig& cfg) {
    return "run-" + config_hash(cfg).substr(0, 12);
}

// ---------------------------------------------------------------------------
// Secrets (environment only, never in files or hashes)

inline std::optional<std::string> llm_api_key() {
    const char* v = std::getenv("AUTOSDT_LLM_API_KEY");
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

inline std::optional<std::string> github_token() {
    const char* v = std::getenv("AUTOSDT_GITHUB_TOKEN");
    if (!v || !*v) return std::nullopt;
    return std::string(v);
}

inline GatewayConfig gateway_config_for(const PipelineConfig& cfg) {
    GatewayConfig gw;
    gw.mode = cfg.mode;
    gw.general_model = cfg.general_model;
    gw.coder_model = cfg.coder_model;
    gw.general_rates.input = TokenRate::from_usd_per_mtok(cfg.general_input_rate);
    gw.general_rates.output = TokenRate::from_usd_per_mtok(cfg.general_output_rate);
    gw.coder_rates.input = TokenRate::from_usd_per_mtok(cfg.coder_input_rate);
    gw.coder_rates.output = TokenRate::from_usd_per_mtok(cfg.coder_output_rate);
    gw.cache_dir = cfg.effective_cache_dir();
    gw.llm_rps = cfg.llm_rps;
    return gw;
}

} // namespace autosdt
