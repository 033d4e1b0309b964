#include "uie/reward_server.hpp"

#include "uie/errors.hpp"

#include <httplib.h>

namespace uie {

namespace {

RewardConfig merge_config(const RewardConfig& defaults, const nlohmann::json& body) {
    RewardConfig cfg = defaults;
    if (auto it = body.find("config"); it != body.end() && it->is_object()) {
        cfg.alpha = it->value("alpha", cfg.alpha);
        cfg.beta = it->value("beta", cfg.beta);
        cfg.lambda1 = it->value("lambda1", cfg.lambda1);
        cfg.lambda2 = it->value("lambda2", cfg.lambda2);
        if (it->contains("mode")) {
            cfg.mode = reward_mode_from_string(it->at("mode").get<std::string>());
        }
    }
    cfg.validate();
    return cfg;
}

} // namespace

nlohmann::json breakdown_to_json(const RewardBreakdown& breakdown) {
    return {
        {"r_result", breakdown.r_result},
        {"r_process", breakdown.r_process},
        {"r_total", breakdown.r_total},
        {"diagnostics",
         {
             {"schema_adherence", breakdown.checks.schema_adherence},
             {"input_grounding", breakdown.checks.input_grounding},
             {"strategy_soundness", breakdown.checks.strategy_soundness},
             {"category_score", breakdown.category_score},
             {"argument_score", breakdown.argument_score},
             {"note", breakdown.note},
         }},
    };
}

nlohmann::json score_reward_request(const nlohmann::json& body, const RewardConfig& defaults) {
    if (!body.is_object()) {
        throw Error(ErrorCode::UsageError, "reward request must be a JSON object");
    }
    for (const char* key : {"x", "schema", "completion", "gold"}) {
        if (!body.contains(key)) {
            throw Error(ErrorCode::UsageError,
                        std::string("reward request is missing \"") + key + "\"");
        }
    }
    if (!body["x"].is_string() || !body["completion"].is_string()) {
        throw Error(ErrorCode::UsageError, "x and completion must be strings");
    }
    const std::string x = body.at("x").get<std::string>();
    const UnifiedSchema schema = schema_from_json(body.at("schema"));
    const std::string completion = body.at("completion").get<std::string>();

    const auto& gold_json = body.at("gold");
    if (!gold_json.is_array()) {
        throw Error(ErrorCode::UsageError, "gold must be an array of records");
    }
    std::vector<ExtractionRecord> gold_records;
    for (const auto& item : gold_json) gold_records.push_back(record_from_json(item));
    const CanonicalRecords gold = canonicalize(gold_records, schema);

    std::optional<std::string> strategy;
    if (auto it = body.find("strategy"); it != body.end() && it->is_string()) {
        strategy = it->get<std::string>();
    }

    const RewardConfig cfg = merge_config(defaults, body);
    const RewardBreakdown breakdown = score_completion(
        x, schema, strategy ? &*strategy : nullptr, completion, gold, cfg);
    return breakdown_to_json(breakdown);
}

RewardServer::RewardServer(RewardConfig defaults) : defaults_(defaults) {
    defaults_.validate();
    server_ = std::make_unique<httplib::Server>();

    server_->Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("{\"ok\":true}", "application/json");
    });

    server_->Post("/reward", [this](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded()) {
            res.status = 400;
            res.set_content(nlohmann::json{{"error", "request body is not JSON"}}.dump(),
                            "application/json");
            return;
        }
        try {
            res.set_content(score_reward_request(body, defaults_).dump(), "application/json");
        } catch (const std::exception& e) {
            res.status = 400;
            res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
        }
    });

    server_->Post("/reward/batch", [this](const httplib::Request& req, httplib::Response& res) {
        nlohmann::json body = nlohmann::json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object() || !body.contains("items") ||
            !body["items"].is_array()) {
            res.status = 400;
            res.set_content(nlohmann::json{{"error", "expected {\"items\": [...]}"}}.dump(),
                            "application/json");
            return;
        }
        nlohmann::json items = nlohmann::json::array();
        for (const auto& item : body["items"]) {
            try {
                items.push_back(score_reward_request(item, defaults_));
            } catch (const std::exception& e) {
                items.push_back({{"error", e.what()}});
            }
        }
        res.set_content(nlohmann::json{{"items", items}}.dump(), "application/json");
    });
}

RewardServer::~RewardServer() { stop(); }

int RewardServer::start(const std::string& host, int port) {
    if (thread_.joinable()) {
        throw Error(ErrorCode::UsageError, "reward server already running");
    }
    if (port == 0) {
        port_ = server_->bind_to_any_port(host);
        if (port_ < 0) throw Error(ErrorCode::IoError, "could not bind reward server");
    } else {
        if (!server_->bind_to_port(host, port)) {
            throw Error(ErrorCode::IoError, "could not bind port " + std::to_string(port));
        }
        port_ = port;
    }
    thread_ = std::thread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return port_;
}

void RewardServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

} // namespace uie
