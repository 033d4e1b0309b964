#pragma once

#include "uie/gateway.hpp"
#include "uie/grpo.hpp"
#include "uie/reward.hpp"
#include "uie/strategy.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace uie {

/// One document that feeds every stage. Field values mirror the module
/// defaults; a JSON config file overrides them, CLI flags override both.
/// The API key is taken from the environment only, never from the file.
struct PipelineConfig {
    int n_per_dim = 5;
    int core_size = 5;
    int sft_threshold = 3;
    std::string paradigms_path;
    std::string prompts_dir;

    double alpha = 2.0;
    double beta = 1.0;
    double lambda1 = 0.9;
    double lambda2 = 0.1;
    RewardMode mode = RewardMode::Strict;

    int group_size = 8;
    std::size_t max_len = 2048;
    int batch_size = 128;
    double eta = 0.1;
    double kl_coeff = 0.01;
    double lr = 5e-7;

    double hide_fraction = 0.1;
    double negative_keep = 0.4;

    std::uint64_t seed = 0;

    GatewayConfig gateway = GatewayConfig::from_env();

    static PipelineConfig from_json(const nlohmann::json& doc);
    static PipelineConfig load(const std::filesystem::path& path);

    void validate() const;

    /// Full effective configuration, embedded in output headers. The API
    /// key itself is reduced to a presence flag.
    nlohmann::json resolved() const;

    ForgeConfig forge() const;
    RewardConfig reward() const;
    GrpoConfig grpo() const;
};

} // namespace uie
