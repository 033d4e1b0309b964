#include "uie/gateway.hpp"

#include "uie/errors.hpp"
#include "uie/util.hpp"

#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>

namespace uie {

const char* to_string(Purpose purpose) {
    switch (purpose) {
    case Purpose::Strategy: return "strategy";
    case Purpose::Rationale: return "rationale";
    case Purpose::Judge: return "judge";
    }
    return "?";
}

Purpose purpose_from_string(std::string_view s) {
    if (s == "strategy") return Purpose::Strategy;
    if (s == "rationale") return Purpose::Rationale;
    if (s == "judge") return Purpose::Judge;
    throw Error(ErrorCode::InvalidConfig, "unknown purpose \"" + std::string(s) + "\"");
}

GenerationRequest make_request(std::string prompt, Purpose purpose, int max_tokens) {
    GenerationRequest req;
    req.prompt = std::move(prompt);
    req.purpose = purpose;
    req.max_tokens = max_tokens;
    req.temperature = purpose == Purpose::Judge ? 0.0 : 1.0;
    return req;
}

HttpTransport::HttpTransport(std::string base_url, std::string api_key, std::string model,
                             std::string endpoint_path)
    : base_url_(std::move(base_url)), api_key_(std::move(api_key)), model_(std::move(model)),
      endpoint_path_(std::move(endpoint_path)) {}

TransportResult HttpTransport::send(const GenerationRequest& request) {
    // one client per call; httplib clients are not safe to share across
    // concurrent requests
    httplib::Client client(base_url_);
    client.set_connection_timeout(10, 0);
    client.set_read_timeout(120, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    nlohmann::json body{
        {"model", model_},
        {"messages", nlohmann::json::array({{{"role", "user"}, {"content", request.prompt}}})},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
    };
    auto res = client.Post(endpoint_path_, headers, body.dump(), "application/json");
    if (!res) {
        throw Error(ErrorCode::GatewayFailure,
                    "no response from " + base_url_ + ": " + httplib::to_string(res.error()));
    }
    if (res->status < 200 || res->status >= 300) {
        throw Error(ErrorCode::GatewayFailure,
                    "HTTP " + std::to_string(res->status) + " from " + base_url_ + endpoint_path_);
    }
    nlohmann::json doc = nlohmann::json::parse(res->body, nullptr, false);
    if (doc.is_discarded()) {
        throw Error(ErrorCode::BadResponse, "response body is not JSON");
    }
    auto choices = doc.find("choices");
    if (choices == doc.end() || !choices->is_array() || choices->empty()) {
        throw Error(ErrorCode::BadResponse, "response has no choices");
    }
    const auto& first = (*choices)[0];
    if (!first.contains("message") || !first["message"].contains("content") ||
        !first["message"]["content"].is_string()) {
        throw Error(ErrorCode::BadResponse, "response choice has no message content");
    }
    TransportResult result;
    result.completion = first["message"]["content"].get<std::string>();
    if (auto usage = doc.find("usage"); usage != doc.end() && usage->is_object()) {
        result.prompt_tokens = usage->value("prompt_tokens", std::uint64_t{0});
        result.completion_tokens = usage->value("completion_tokens", std::uint64_t{0});
    }
    return result;
}

std::unique_ptr<MockTransport> MockTransport::from_file(const std::filesystem::path& path) {
    nlohmann::json doc = nlohmann::json::parse(util::read_file(path), nullptr, false);
    if (doc.is_discarded()) {
        throw Error(ErrorCode::MalformedJson, "mock rule file " + path.string());
    }
    return from_json(doc);
}

std::unique_ptr<MockTransport> MockTransport::from_json(const nlohmann::json& doc) {
    auto mock = std::make_unique<MockTransport>();
    if (!doc.is_object()) {
        throw Error(ErrorCode::InvalidConfig, "mock rules must be a JSON object");
    }
    if (auto it = doc.find("default_response"); it != doc.end()) {
        mock->set_default_response(it->get<std::string>());
    }
    if (auto it = doc.find("rules"); it != doc.end()) {
        for (const auto& raw : *it) {
            Rule rule;
            if (raw.contains("purpose")) {
                rule.purpose = purpose_from_string(raw["purpose"].get<std::string>());
            }
            if (raw.contains("contains")) {
                rule.contains = raw["contains"].get<std::vector<std::string>>();
            }
            if (raw.contains("contains_any")) {
                rule.contains_any = raw["contains_any"].get<std::vector<std::string>>();
            }
            if (!raw.contains("response") || !raw["response"].is_string()) {
                throw Error(ErrorCode::InvalidConfig, "mock rule without a string response");
            }
            rule.response = raw["response"].get<std::string>();
            mock->add_rule(std::move(rule));
        }
    }
    return mock;
}

void MockTransport::add_rule(Rule rule) { rules_.push_back(std::move(rule)); }

void MockTransport::set_default_response(std::string response) {
    default_response_ = std::move(response);
}

TransportResult MockTransport::send(const GenerationRequest& request) {
    calls_.fetch_add(1);
    for (const auto& rule : rules_) {
        if (rule.purpose && *rule.purpose != request.purpose) continue;
        bool ok = true;
        for (const auto& needle : rule.contains) {
            if (request.prompt.find(needle) == std::string::npos) {
                ok = false;
                break;
            }
        }
        if (ok && !rule.contains_any.empty()) {
            ok = false;
            for (const auto& needle : rule.contains_any) {
                if (request.prompt.find(needle) != std::string::npos) {
                    ok = true;
                    break;
                }
            }
        }
        if (ok) return {rule.response};
    }
    if (default_response_) return {*default_response_};
    throw Error(ErrorCode::BadResponse,
                "no mock rule matches prompt starting \"" + request.prompt.substr(0, 96) + "\"");
}

GatewayConfig GatewayConfig::from_env() {
    GatewayConfig config;
    if (const char* url = std::getenv("GATEWAY_URL")) config.url = url;
    if (const char* key = std::getenv("GATEWAY_KEY")) config.api_key = key;
    if (const char* dir = std::getenv("GATEWAY_CACHE_DIR")) config.cache_dir = dir;
    return config;
}

Gateway::Gateway(std::unique_ptr<Transport> transport, GatewayConfig config)
    : transport_(std::move(transport)), config_(std::move(config)),
      slots_free_(config_.max_in_flight) {
    if (!transport_) {
        throw Error(ErrorCode::InvalidConfig, "gateway needs a transport");
    }
    if (config_.max_retries < 0 || config_.max_in_flight < 1) {
        throw Error(ErrorCode::InvalidConfig, "gateway retry/in-flight limits out of range");
    }
    epoch_ = util::hex64(util::fnv1a64(config_.url + '\x1f' + config_.model + '\x1f' +
                                       config_.endpoint_path));
}

std::string Gateway::cache_key(const GenerationRequest& request) const {
    std::string material = request.prompt;
    material += '\x1f';
    material += nlohmann::json(request.temperature).dump();
    material += '\x1f';
    material += std::to_string(request.max_tokens);
    return util::hex64(util::fnv1a64(material));
}

std::filesystem::path Gateway::cache_path(const std::string& key) const {
    return config_.cache_dir / epoch_ / (key + ".json");
}

std::optional<Gateway::CacheEntry> Gateway::lookup(const std::string& key) {
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    }
    if (config_.cache_dir.empty()) return std::nullopt;
    const auto path = cache_path(key);
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    nlohmann::json doc = nlohmann::json::parse(util::read_file(path), nullptr, false);
    if (doc.is_discarded() || !doc.is_object() || !doc.contains("completion") ||
        !doc["completion"].is_string() || doc["completion"].get<std::string>().empty()) {
        return std::nullopt; // unusable cache file, regenerate
    }
    CacheEntry entry;
    entry.completion = doc["completion"].get<std::string>();
    entry.prompt_tokens = doc.value("prompt_tokens", std::uint64_t{0});
    entry.completion_tokens = doc.value("completion_tokens", std::uint64_t{0});
    std::lock_guard<std::mutex> lock(cache_mutex_);
    memo_.emplace(key, entry);
    return entry;
}

void Gateway::store(const std::string& key, const CacheEntry& entry) {
    {
        std::lock_guard<std::mutex> lock(cache_mutex_);
        memo_.insert_or_assign(key, entry);
    }
    if (config_.cache_dir.empty()) return;
    const auto path = cache_path(key);
    std::filesystem::create_directories(path.parent_path());
    nlohmann::json doc{
        {"completion", entry.completion},
        {"prompt_tokens", entry.prompt_tokens},
        {"completion_tokens", entry.completion_tokens},
    };
    util::write_file(path, doc.dump());
}

GenerationResponse Gateway::complete(const GenerationRequest& request) {
    if (request.max_tokens <= 0) {
        throw Error(ErrorCode::InvalidConfig, "max_tokens must be positive");
    }
    const std::string key = cache_key(request);
    if (auto hit = lookup(key)) {
        GenerationResponse response;
        response.completion = hit->completion;
        response.prompt_tokens = hit->prompt_tokens;
        response.completion_tokens = hit->completion_tokens;
        response.cached = true;
        return response;
    }

    {
        std::unique_lock<std::mutex> lock(slot_mutex_);
        slot_cv_.wait(lock, [this] { return slots_free_ > 0; });
        --slots_free_;
    }
    struct SlotGuard {
        Gateway* g;
        ~SlotGuard() {
            std::lock_guard<std::mutex> lock(g->slot_mutex_);
            ++g->slots_free_;
            g->slot_cv_.notify_one();
        }
    } guard{this};

    std::optional<Error> last;
    const int attempts = 1 + config_.max_retries;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0 && config_.backoff_base_ms > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(config_.backoff_base_ms << (attempt - 1)));
        }
        TransportResult sent;
        try {
            sent = transport_->send(request);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::GatewayFailure && e.code() != ErrorCode::BadResponse) {
                throw;
            }
            last = e;
            continue;
        }
        if (sent.completion.empty()) {
            last = Error(ErrorCode::BadResponse, "empty completion");
            continue;
        }
        CacheEntry entry;
        entry.completion = std::move(sent.completion);
        entry.prompt_tokens = sent.prompt_tokens;
        entry.completion_tokens = sent.completion_tokens;
        store(key, entry);
        GenerationResponse response;
        response.completion = entry.completion;
        response.prompt_tokens = entry.prompt_tokens;
        response.completion_tokens = entry.completion_tokens;
        response.cached = false;
        response.retries = attempt;
        return response;
    }
    if (last && last->code() == ErrorCode::BadResponse) {
        throw Error(ErrorCode::BadResponse,
                    std::string("giving up after ") + std::to_string(attempts) +
                        " attempts: " + last->what());
    }
    throw Error(ErrorCode::Exhausted, std::string("giving up after ") + std::to_string(attempts) +
                                          " attempts: " + (last ? last->what() : "no attempt ran"));
}

} // namespace uie
