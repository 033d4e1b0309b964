#pragma once

#include "uie/gateway.hpp"
#include "uie/records.hpp"
#include "uie/reward.hpp"
#include "uie/util.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace uie {

struct GrpoConfig {
    int group_size = 8;
    std::size_t max_len = 2048; // character budget per completion
    int batch_size = 128;
    double eta = 0.1;      // bandit policy step size
    double kl_coeff = 0.01; // carried into exported batches, not applied here
    double lr = 5e-7;       // same
    std::uint64_t seed = 0;

    void validate() const;
};

/// Source of candidate completions. generate must return exactly g texts;
/// update lets trainable mocks react to the advantages of the completions
/// they just produced (call order: generate, then update, per group).
class PolicyAdapter {
public:
    virtual ~PolicyAdapter() = default;
    virtual std::vector<std::string> generate(const std::string& x, const UnifiedSchema& schema,
                                              int g, std::size_t max_len) = 0;
    virtual void update(const std::vector<double>& advantages) { (void)advantages; }
};

/// Cycles through a fixed list of completions. Stateless across examples
/// apart from the cycle position.
class ScriptedPolicy : public PolicyAdapter {
public:
    explicit ScriptedPolicy(std::vector<std::string> script);

    std::vector<std::string> generate(const std::string& x, const UnifiedSchema& schema, int g,
                                      std::size_t max_len) override;

private:
    std::vector<std::string> script_;
    std::size_t cursor_ = 0;
};

/// Multi-armed mock policy over completion templates. Sampling follows a
/// weight vector; update multiplies the weight of each arm drawn in the
/// preceding generate call by exp(eta * advantage) and renormalizes, so
/// reward signal shifts probability mass toward better completions.
/// Templates may contain {gold}, replaced through the gold lookup.
class BanditPolicy : public PolicyAdapter {
public:
    BanditPolicy(std::vector<std::string> templates, double eta, std::uint64_t seed);

    void set_gold_lookup(std::function<std::string(const std::string& x)> lookup);

    std::vector<std::string> generate(const std::string& x, const UnifiedSchema& schema, int g,
                                      std::size_t max_len) override;
    void update(const std::vector<double>& advantages) override;

    const std::vector<double>& weights() const { return weights_; }

private:
    std::vector<std::string> templates_;
    std::vector<double> weights_;
    double eta_;
    util::Rng rng_;
    std::function<std::string(const std::string&)> gold_lookup_;
    std::vector<std::size_t> last_drawn_;
};

/// Real-generator policy: g gateway completions of the extraction
/// instruction. Note that response caching replays identical prompts, so
/// pair this with a cache-free gateway when sampling diversity matters.
class GatewayPolicy : public PolicyAdapter {
public:
    explicit GatewayPolicy(Gateway& gateway) : gateway_(gateway) {}

    std::vector<std::string> generate(const std::string& x, const UnifiedSchema& schema, int g,
                                      std::size_t max_len) override;

private:
    Gateway& gateway_;
};

/// Four-arm menu for simulation runs: a grounded gold answer, an empty
/// guess, free text with no structure, and an off-schema record. Rewards
/// separate the arms, so the bandit has signal to climb.
std::vector<std::string> default_bandit_menu();

struct GroupSample {
    std::string instance_id;
    std::string prompt;
    std::vector<std::string> completions;
    std::vector<double> rewards;
    std::vector<double> advantages;
};

/// Draw a group of completions for one example; rewards stay empty.
GroupSample sample_group(const LabeledExample& example, PolicyAdapter& policy,
                         const GrpoConfig& cfg);

/// Fill rewards with each completion's total reward against the example.
GroupSample score_group(GroupSample group, const LabeledExample& example,
                        const RewardConfig& reward_cfg);

/// Group-relative advantages: (r - mean) / (population std + 1e-8).
/// Identical rewards yield exact zeros.
std::vector<double> group_advantages(const std::vector<double>& rewards);

struct RlPoolItem {
    std::string id;
    LabeledExample example;
};

struct DynamicsPoint {
    int step = 0;
    double mean_reward = 0.0;
    double mean_response_length = 0.0;
};

/// The desk-scale alignment loop: per step, draw a batch from the pool,
/// sample and score a group per item, update the policy with the group
/// advantages, and log the step means. Batches are exported as JSONL when
/// a path is given so an external trainer can consume them.
std::vector<DynamicsPoint> run_alignment_loop(
    const std::vector<RlPoolItem>& pool, PolicyAdapter& policy, int steps, const GrpoConfig& cfg,
    const RewardConfig& reward_cfg,
    const std::optional<std::filesystem::path>& batch_path = std::nullopt);

void write_dynamics(const std::filesystem::path& path, const std::vector<DynamicsPoint>& log,
                    const nlohmann::json& header_extra = nlohmann::json::object());

} // namespace uie
