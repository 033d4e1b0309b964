#pragma once

#include "uie/reward.hpp"

#include <memory>
#include <string>
#include <thread>

#include <json.hpp>

namespace httplib {
class Server;
}

namespace uie {

/// Score one reward request document: {x, schema, completion, gold,
/// strategy?, config?}. config fields override the supplied defaults.
/// Returns {r_result, r_process, r_total, diagnostics}.
nlohmann::json score_reward_request(const nlohmann::json& body, const RewardConfig& defaults);

nlohmann::json breakdown_to_json(const RewardBreakdown& breakdown);

/// Blocking-free HTTP wrapper around the reward engine:
///   POST /reward        one request document
///   POST /reward/batch  {"items": [...]} scored element-wise
///   GET  /healthz       liveness probe
class RewardServer {
public:
    explicit RewardServer(RewardConfig defaults = {});
    ~RewardServer();

    RewardServer(const RewardServer&) = delete;
    RewardServer& operator=(const RewardServer&) = delete;

    /// Binds and serves on a background thread. port 0 picks a free port;
    /// the bound port is returned.
    int start(const std::string& host = "127.0.0.1", int port = 0);

    void stop();

    int port() const { return port_; }

private:
    RewardConfig defaults_;
    std::unique_ptr<httplib::Server> server_;
    std::thread thread_;
    int port_ = -1;
};

} // namespace uie
