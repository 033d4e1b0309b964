#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

namespace uie {

enum class Purpose { Strategy, Rationale, Judge };

const char* to_string(Purpose purpose);
Purpose purpose_from_string(std::string_view s);

struct GenerationRequest {
    std::string prompt;
    double temperature = 1.0;
    int max_tokens = 2048;
    Purpose purpose = Purpose::Rationale;
};

/// Request with the default sampling profile for its purpose: temperature
/// 1.0 for generation, 0.0 for judge calls.
GenerationRequest make_request(std::string prompt, Purpose purpose, int max_tokens = 2048);

struct GenerationResponse {
    std::string completion;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
    bool cached = false;
    int retries = 0;
};

struct TransportResult {
    std::string completion;
    std::uint64_t prompt_tokens = 0;
    std::uint64_t completion_tokens = 0;
};

/// One round trip to a generator backend. Returns the raw completion text;
/// throws GatewayFailure for transport trouble and BadResponse for
/// protocol-invalid payloads. Implementations must be safe to call from
/// several threads at once.
class Transport {
public:
    virtual ~Transport() = default;
    virtual TransportResult send(const GenerationRequest& request) = 0;
};

/// Chat-completions client: POST {model, messages:[{role,content}],
/// temperature, max_tokens}, read choices[0].message.content.
class HttpTransport : public Transport {
public:
    HttpTransport(std::string base_url, std::string api_key, std::string model,
                  std::string endpoint_path = "/v1/chat/completions");

    TransportResult send(const GenerationRequest& request) override;

private:
    std::string base_url_;
    std::string api_key_;
    std::string model_;
    std::string endpoint_path_;
};

/// Scripted transport for tests and offline runs. Rules are tried in
/// order; the first whose conditions all hold supplies the response.
///
/// Rule file shape:
///   {"rules": [{"purpose": "strategy", "contains": ["a"],
///               "contains_any": ["b", "c"], "response": "..."}],
///    "default_response": "..."}
class MockTransport : public Transport {
public:
    struct Rule {
        std::optional<Purpose> purpose;
        std::vector<std::string> contains;
        std::vector<std::string> contains_any;
        std::string response;
    };

    MockTransport() = default;

    static std::unique_ptr<MockTransport> from_file(const std::filesystem::path& path);
    static std::unique_ptr<MockTransport> from_json(const nlohmann::json& doc);

    void add_rule(Rule rule);
    void set_default_response(std::string response);

    TransportResult send(const GenerationRequest& request) override;

    std::uint64_t calls() const { return calls_.load(); }

private:
    std::vector<Rule> rules_;
    std::optional<std::string> default_response_;
    std::atomic<std::uint64_t> calls_ = 0;
};

/// Adapts a plain function; handy for failure-injection tests.
class CallbackTransport : public Transport {
public:
    explicit CallbackTransport(std::function<std::string(const GenerationRequest&)> fn)
        : fn_(std::move(fn)) {}

    TransportResult send(const GenerationRequest& request) override { return {fn_(request)}; }

private:
    std::function<std::string(const GenerationRequest&)> fn_;
};

struct GatewayConfig {
    std::string url;
    std::string api_key;
    std::string model = "generator";
    std::string endpoint_path = "/v1/chat/completions";
    std::filesystem::path cache_dir; // empty: in-memory memo only
    int max_retries = 3;
    int backoff_base_ms = 250;
    int max_in_flight = 8;

    /// Reads GATEWAY_URL, GATEWAY_KEY and GATEWAY_CACHE_DIR.
    static GatewayConfig from_env();
};

/// Caching, retrying front end over a Transport. Responses are keyed by
/// (prompt, sampling params) inside an epoch derived from the endpoint and
/// model, so reruns replay from cache byte for byte. Empty completions are
/// treated as failures and never cached.
class Gateway {
public:
    Gateway(std::unique_ptr<Transport> transport, GatewayConfig config);

    GenerationResponse complete(const GenerationRequest& request);

    const GatewayConfig& config() const { return config_; }

private:
    struct CacheEntry {
        std::string completion;
        std::uint64_t prompt_tokens = 0;
        std::uint64_t completion_tokens = 0;
    };

    std::string cache_key(const GenerationRequest& request) const;
    std::filesystem::path cache_path(const std::string& key) const;
    std::optional<CacheEntry> lookup(const std::string& key);
    void store(const std::string& key, const CacheEntry& entry);

    std::unique_ptr<Transport> transport_;
    GatewayConfig config_;
    std::string epoch_;

    std::mutex cache_mutex_;
    std::unordered_map<std::string, CacheEntry> memo_;

    std::mutex slot_mutex_;
    std::condition_variable slot_cv_;
    int slots_free_;
};

} // namespace uie
