#pragma once

#include <autosdt/errors.hpp>
#include <autosdt/fsio.hpp>
#include <autosdt/hash.hpp>
#include <autosdt/http_util.hpp>
#include <autosdt/money.hpp>
#include <autosdt/prompts.hpp>
#include <autosdt/rate_limit.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <ctime>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace autosdt {

inline std::string now_utc_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Usage {
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
};

// One prompt/reply round trip, as stored in provenance and the record cache.
struct LLMExchange {
    std::string template_tag; // one of the template names, or a pipeline tag
    std::string model;
    std::string prompt;
    std::string prompt_hash; // sha256 over "<model>\n<prompt>"
    std::string reply;
    Usage usage;
    Usd usd_cost;
    std::string timestamp; // recording time when replayed, else call time
    bool from_replay = false;
};

inline std::string prompt_hash_for(std::string_view model, std::string_view prompt) {
    return sha256_hex(std::string(model) + "\n" + std::string(prompt));
}

// ---------------------------------------------------------------------------
// Cost accounting (exact integer arithmetic, see money.hpp)

class CostLedger {
public:
    void add(const std::string& stage, Usd amount) {
        m_per_stage[stage] += amount;
    }

    Usd total() const {
        Usd sum;
        for (const auto& [stage, amount] : m_per_stage) sum += amount;
        return sum;
    }

    const std::map<std::string, Usd>& per_stage() const { return m_per_stage; }

    nlohmann::ordered_json encode() const {
        nlohmann::ordered_json j = nlohmann::ordered_json::object();
        for (const auto& [stage, amount] : m_per_stage) j[stage] = amount.to_string();
        return j;
    }

    static CostLedger decode(const nlohmann::ordered_json& j) {
        CostLedger ledger;
        for (const auto& [stage, amount] : j.items())
            ledger.m_per_stage[stage] = Usd::from_decimal(amount.get<std::string>());
        return ledger;
    }

private:
    std::map<std::string, Usd> m_per_stage;
};

// ---------------------------------------------------------------------------
// Providers

struct ProviderReply {
    std::string reply;
    Usage usage;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    // Throws ProviderUnavailable on transport failure and AuthError on
    // credential rejection; anything else is a usable reply.
    virtual ProviderReply complete(const std::string& model, const std::string& prompt,
                                   double temperature) = 0;
};

// JSON chat-completion client. Endpoint and key come from the environment
// (AUTOSDT_LLM_BASE_URL, AUTOSDT_LLM_API_KEY); the wire format is the widely
// implemented chat/completions shape.
class HttpChatProvider : public ChatProvider {
public:
    HttpChatProvider(std::string base_url, std::string api_key, int timeout_s = 120)
        : m_api_key(std::move(api_key)) {
        auto [origin, prefix] = split_base_url(base_url);
        m_prefix = prefix;
        m_client = make_http_client(origin, timeout_s);
    }

    ProviderReply complete(const std::string& model, const std::string& prompt,
                           double temperature) override {
        nlohmann::json body;
        body["model"] = model;
        body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
        body["temperature"] = temperature;
        httplib::Headers headers;
        if (!m_api_key.empty()) headers.emplace("Authorization", "Bearer " + m_api_key);
        auto res = m_client->Post(m_prefix + "/chat/completions", headers, body.dump(),
                                  "application/json");
        if (!res)
            throw ProviderUnavailable("chat completion transport error: " +
                                      httplib::to_string(res.error()));
        if (res->status == 401 || res->status == 403)
            throw AuthError("chat completion rejected credentials (HTTP " +
                            std::to_string(res->status) + ")");
        if (res->status < 200 || res->status >= 300)
            throw ProviderUnavailable("chat completion HTTP " + std::to_string(res->status));
        try {
            auto j = nlohmann::json::parse(res->body);
            ProviderReply out;
            out.reply = j.at("choices").at(0).at("message").at("content").get<std::string>();
            if (j.contains("usage")) {
                out.usage.prompt_tokens = j["usage"].value("prompt_tokens", std::int64_t{0});
                out.usage.completion_tokens =
                    j["usage"].value("completion_tokens", std::int64_t{0});
            }
            return out;
        } catch (const nlohmann::json::exception& e) {
            throw ProviderUnavailable(std::string("malformed chat completion payload: ") +
                                      e.what());
        }
    }

private:
    std::string m_api_key;
    std::string m_prefix;
    std::unique_ptr<httplib::Client> m_client;
};

// ---------------------------------------------------------------------------
// Record/replay store: one JSON file per exchange, named by prompt hash.

struct Recording {
    std::string model;
    std::string prompt;
    std::string reply;
    Usage usage;
    std::string recorded_at;
};

class RecordStore {
public:
    explicit RecordStore(fs::path dir) : m_dir(std::move(dir)) {}

    const fs::path& dir() const { return m_dir; }

    std::optional<Recording> load(const std::string& prompt_hash) const {
        auto text = read_file(m_dir / (prompt_hash + ".json"));
        if (!text) return std::nullopt;
        try {
            auto j = nlohmann::json::parse(*text);
            Recording rec;
            rec.model = j.value("model", "");
            rec.prompt = j.at("prompt").get<std::string>();
            rec.reply = j.at("reply").get<std::string>();
            rec.usage.prompt_tokens = j.at("usage").value("prompt_tokens", std::int64_t{0});
            rec.usage.completion_tokens =
                j.at("usage").value("completion_tokens", std::int64_t{0});
            rec.recorded_at = j.value("recorded_at", "");
            return rec;
        } catch (const nlohmann::json::exception& e) {
            throw Error("corrupt recording " + prompt_hash + ": " + e.what());
        }
    }

    void save(const std::string& prompt_hash, const Recording& rec) const {
        nlohmann::ordered_json j;
        j["model"] = rec.model;
        j["prompt"] = rec.prompt;
        j["reply"] = rec.reply;
        j["usage"] = {{"prompt_tokens", rec.usage.prompt_tokens},
                      {"completion_tokens", rec.usage.completion_tokens}};
        j["recorded_at"] = rec.recorded_at;
        write_file(m_dir / (prompt_hash + ".json"), j.dump(2) + "\n");
    }

private:
    fs::path m_dir;
};

// ---------------------------------------------------------------------------
// Gateway

enum class GatewayMode { live, record, replay };
enum class ModelRole { general, coder };

inline std::string to_string(GatewayMode m) {
    switch (m) {
        case GatewayMode::live: return "live";
        case GatewayMode::record: return "record";
        case GatewayMode::replay: return "replay";
    }
    throw Error("bad gateway mode");
}

inline GatewayMode gateway_mode_from_string(const std::string& s) {
    if (s == "live") return GatewayMode::live;
    if (s == "record") return GatewayMode::record;
    if (s == "replay") return GatewayMode::replay;
    throw ConfigError("unknown mode: " + s + " (expected live|record|replay)");
}

struct ModelRates {
    TokenRate input;
    TokenRate output;
};

struct GatewayConfig {
    GatewayMode mode = GatewayMode::replay;
    std::string general_model;
    std::string coder_model;
    ModelRates general_rates;
    ModelRates coder_rates;
    fs::path cache_dir;
    int max_attempts = 3;        // transport retries per call
    int backoff_base_ms = 1000;  // doubled per retry
    double llm_rps = 0.0;        // 0 = unthrottled
    double temperature_classification = 0.0;
    double temperature_generation = 0.2;
};

class Gateway {
public:
    Gateway(GatewayConfig config, std::unique_ptr<ChatProvider> provider)
        : m_config(std::move(config)),
          m_provider(std::move(provider)),
          m_store(m_config.cache_dir),
          m_limiter(m_config.llm_rps) {
        if (m_config.mode != GatewayMode::replay && !m_provider)
            throw ConfigError("live/record mode requires a provider");
    }

    const GatewayConfig& config() const { return m_config; }

    std::string model_for(ModelRole role) const {
        return role == ModelRole::coder ? m_config.coder_model : m_config.general_model;
    }

    // Generation steps (code adaptation, instruction writing) run warmer than
    // classification steps.
    double temperature_for(TemplateId id) const {
        return (id == TemplateId::adapt || id == TemplateId::instruct_gen)
                   ? m_config.temperature_generation
                   : m_config.temperature_classification;
    }

    LLMExchange complete(const std::string& stage, TemplateId id,
                         const std::map<std::string, std::string>& bindings, ModelRole role) {
        return complete_text(stage, to_string(id), render(id, bindings), role,
                             temperature_for(id));
    }

    // Lower-level entry point for composed prompts (debug-round feedback,
    // format-reminder retries, pipeline-owned prompts without a fixed body).
    LLMExchange complete_text(const std::string& stage, const std::string& tag,
                              const std::string& prompt, ModelRole role, double temperature) {
        LLMExchange ex;
        ex.template_tag = tag;
        ex.model = model_for(role);
        ex.prompt = prompt;
        ex.prompt_hash = prompt_hash_for(ex.model, prompt);

        if (m_config.mode == GatewayMode::replay) {
            std::optional<Recording> rec;
            {
                std::lock_guard<std::mutex> lock(m_mutex);
                rec = m_store.load(ex.prompt_hash);
            }
            if (!rec) throw ReplayMiss(ex.prompt_hash);
            ex.reply = rec->reply;
            ex.usage = rec->usage;
            ex.timestamp = rec->recorded_at;
            ex.from_replay = true;
        } else {
            m_limiter.acquire();
            ProviderReply reply = send_with_retries(ex.model, prompt, temperature);
            ex.reply = reply.reply;
            ex.usage = reply.usage;
            ex.timestamp = now_utc_iso8601();
            if (m_config.mode == GatewayMode::record) {
                Recording rec{ex.model, prompt, ex.reply, ex.usage, ex.timestamp};
                std::lock_guard<std::mutex> lock(m_mutex);
                m_store.save(ex.prompt_hash, rec);
            }
        }

        const ModelRates& rates =
            role == ModelRole::coder ? m_config.coder_rates : m_config.general_rates;
        ex.usd_cost = rates.input.cost(ex.usage.prompt_tokens) +
                      rates.output.cost(ex.usage.completion_tokens);
        {
            std::lock_guard<std::mutex> lock(m_mutex);
            m_ledger.add(stage, ex.usd_cost);
        }
        return ex;
    }

    CostLedger& ledger() { return m_ledger; }
    const RecordStore& store() const { return m_store; }

private:
    ProviderReply send_with_retries(const std::string& model, const std::string& prompt,
                                    double temperature) {
        std::string last_error;
        int delay_ms = m_config.backoff_base_ms;
        for (int attempt = 1; attempt <= m_config.max_attempts; ++attempt) {
            try {
                return m_provider->complete(model, prompt, temperature);
            } catch (const ProviderUnavailable& e) {
                last_error = e.what();
                if (attempt < m_config.max_attempts) {
                    std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
                    delay_ms *= 2;
                }
            }
        }
        throw ProviderUnavailable("provider unreachable after " +
                                  std::to_string(m_config.max_attempts) +
                                  " attempts: " + last_error);
    }

    GatewayConfig m_config;
    std::unique_ptr<ChatProvider> m_provider;
    RecordStore m_store;
    RateLimiter m_limiter;
    CostLedger m_ledger;
    std::mutex m_mutex;
};

// ---------------------------------------------------------------------------
// Malformed-reply policy: one re-prompt carrying a one-line format reminder,
// then give up and let the caller drop the item. Provider failures propagate.

template <typename T>
struct ParsedCompletion {
    std::optional<T> value;               // nullopt: malformed twice
    std::vector<LLMExchange> exchanges;   // every round trip made
};

template <typename T>
ParsedCompletion<T> complete_parsed(Gateway& gw, const std::string& stage,
                                    const std::string& tag, const std::string& prompt,
                                    ModelRole role, double temperature,
                                    const std::function<T(const std::string&)>& parse,
                                    const std::string& format_reminder) {
    ParsedCompletion<T> out;
    LLMExchange first = gw.complete_text(stage, tag, prompt, role, temperature);
    out.exchanges.push_back(first);
    try {
        out.value = parse(first.reply);
        return out;
    } catch (const MalformedReply&) {
        // fall through to the single retry
    }
    LLMExchange second = gw.complete_text(stage, tag, prompt + "\n\nReminder: " + format_reminder,
                                          role, temperature);
    out.exchanges.push_back(second);
    try {
        out.value = parse(second.reply);
    } catch (const MalformedReply&) {
        out.value = std::nullopt;
    }
    return out;
}

} // namespace autosdt
