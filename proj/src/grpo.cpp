#include "uie/grpo.hpp"

#include "uie/dataset.hpp"
#include "uie/errors.hpp"
#include "uie/jsonl.hpp"
#include "uie/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <utility>

namespace uie {

void GrpoConfig::validate() const {
    if (group_size < 2) throw Error(ErrorCode::InvalidConfig, "group_size must be at least 2");
    if (max_len == 0) throw Error(ErrorCode::InvalidConfig, "max_len must be positive");
    if (batch_size < 1) throw Error(ErrorCode::InvalidConfig, "batch_size must be positive");
    if (!(eta > 0.0)) throw Error(ErrorCode::InvalidConfig, "eta must be positive");
    if (kl_coeff < 0.0) throw Error(ErrorCode::InvalidConfig, "kl_coeff must be non-negative");
    if (!(lr > 0.0)) throw Error(ErrorCode::InvalidConfig, "lr must be positive");
}

ScriptedPolicy::ScriptedPolicy(std::vector<std::string> script) : script_(std::move(script)) {
    if (script_.empty()) throw Error(ErrorCode::InvalidConfig, "scripted policy needs completions");
}

std::vector<std::string> ScriptedPolicy::generate(const std::string&, const UnifiedSchema&, int g,
                                                  std::size_t max_len) {
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(g));
    for (int i = 0; i < g; ++i) {
        std::string text = script_[cursor_ % script_.size()];
        ++cursor_;
        if (text.size() > max_len) text.resize(max_len);
        out.push_back(std::move(text));
    }
    return out;
}

BanditPolicy::BanditPolicy(std::vector<std::string> templates, double eta, std::uint64_t seed)
    : templates_(std::move(templates)), eta_(eta), rng_(seed) {
    if (templates_.empty()) throw Error(ErrorCode::InvalidConfig, "bandit policy needs templates");
    if (!(eta_ > 0.0)) throw Error(ErrorCode::InvalidConfig, "eta must be positive");
    weights_.assign(templates_.size(), 1.0 / static_cast<double>(templates_.size()));
}

void BanditPolicy::set_gold_lookup(std::function<std::string(const std::string&)> lookup) {
    gold_lookup_ = std::move(lookup);
}

std::vector<std::string> BanditPolicy::generate(const std::string& x, const UnifiedSchema&, int g,
                                                std::size_t max_len) {
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(g));
    last_drawn_.clear();
    double total = 0.0;
    for (double w : weights_) total += w;
    for (int i = 0; i < g; ++i) {
        double r = rng_.unit() * total;
        std::size_t pick = weights_.size() - 1;
        double acc = 0.0;
        for (std::size_t a = 0; a < weights_.size(); ++a) {
            acc += weights_[a];
            if (r < acc) {
                pick = a;
                break;
            }
        }
        last_drawn_.push_back(pick);
        std::string text = templates_[pick];
        if (text.find("{gold}") != std::string::npos) {
            std::string gold = gold_lookup_ ? gold_lookup_(x) : std::string("[]");
            text = util::replace_all(text, "{gold}", gold);
        }
        if (text.size() > max_len) text.resize(max_len);
        out.push_back(std::move(text));
    }
    return out;
}

void BanditPolicy::update(const std::vector<double>& advantages) {
    if (advantages.size() != last_drawn_.size())
        throw Error(ErrorCode::PolicyFailure, "advantage count does not match the last draw");
    for (std::size_t i = 0; i < advantages.size(); ++i)
        weights_[last_drawn_[i]] *= std::exp(eta_ * advantages[i]);
    double total = 0.0;
    for (double w : weights_) total += w;
    if (!(total > 0.0) || !std::isfinite(total))
        throw Error(ErrorCode::PolicyFailure, "bandit weights degenerated");
    for (double& w : weights_) w /= total;
}

std::vector<std::string> default_bandit_menu() {
    return {
        "<think>checked each candidate span against the text before keeping it</think>{gold}",
        "<think>nothing stood out, guessing broadly</think>[]",
        "no structured answer here, just a rambling unformatted reply about the passage",
        "<think>try the first label that comes to mind</think>"
        "[{\"type\": \"made-up-label\", \"mention\": \"zzz\"}]",
    };
}

std::vector<std::string> GatewayPolicy::generate(const std::string& x, const UnifiedSchema& schema,
                                                 int g, std::size_t max_len) {
    const std::string prompt = render_instruction(x, schema);
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(g));
    for (int i = 0; i < g; ++i) {
        try {
            auto res = gateway_.complete(make_request(prompt, Purpose::Rationale,
                                                      static_cast<int>(max_len)));
            out.push_back(std::move(res.completion));
        } catch (const Error& e) {
            throw Error(ErrorCode::PolicyFailure,
                        std::string("gateway sampling failed: ") + e.what());
        }
    }
    return out;
}

GroupSample sample_group(const LabeledExample& example, PolicyAdapter& policy,
                         const GrpoConfig& cfg) {
    cfg.validate();
    GroupSample group;
    group.prompt = render_instruction(example.x, example.schema);
    group.completions =
        policy.generate(example.x, example.schema, cfg.group_size, cfg.max_len);
    if (group.completions.size() != static_cast<std::size_t>(cfg.group_size))
        throw Error(ErrorCode::PolicyFailure,
                    "policy returned " + std::to_string(group.completions.size()) +
                        " completions, expected " + std::to_string(cfg.group_size));
    for (auto& text : group.completions)
        if (text.size() > cfg.max_len) text.resize(cfg.max_len);
    return group;
}

GroupSample score_group(GroupSample group, const LabeledExample& example,
                        const RewardConfig& reward_cfg) {
    const std::size_t n = group.completions.size();
    group.rewards.assign(n, 0.0);
    unsigned workers = std::thread::hardware_concurrency();
    if (workers == 0) workers = 1;
    workers = std::min<unsigned>(workers, 8);
    workers = std::min<unsigned>(workers, static_cast<unsigned>(n));
    auto score_slice = [&](unsigned tid) {
        for (std::size_t i = tid; i < n; i += workers) {
            auto breakdown = score_completion(example.x, example.schema, nullptr,
                                              group.completions[i], example.gold, reward_cfg);
            group.rewards[i] = breakdown.r_total;
        }
    };
    if (workers <= 1) {
        score_slice(0);
        return group;
    }
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) threads.emplace_back(score_slice, t);
    for (auto& th : threads) th.join();
    return group;
}

std::vector<double> group_advantages(const std::vector<double>& rewards) {
    if (rewards.size() < 2)
        throw Error(ErrorCode::UsageError, "advantages need at least two rewards");
    const double n = static_cast<double>(rewards.size());
    bool all_equal = true;
    for (double r : rewards)
        if (r != rewards.front()) {
            all_equal = false;
            break;
        }
    if (all_equal) return std::vector<double>(rewards.size(), 0.0);
    double mean = 0.0;
    for (double r : rewards) mean += r;
    mean /= n;
    double var = 0.0;
    for (double r : rewards) var += (r - mean) * (r - mean);
    var /= n;
    const double denom = std::sqrt(var) + 1e-8;
    std::vector<double> adv;
    adv.reserve(rewards.size());
    for (double r : rewards) adv.push_back((r - mean) / denom);
    return adv;
}

namespace {

nlohmann::json batch_config_json(const GrpoConfig& cfg) {
    return {{"group_size", cfg.group_size},
            {"max_len", cfg.max_len},
            {"kl_coeff", cfg.kl_coeff},
            {"lr", cfg.lr},
            {"batch_size", cfg.batch_size}};
}

std::vector<std::size_t> draw_batch(const std::vector<RlPoolItem>& pool, int batch_size,
                                    util::Rng& rng) {
    std::vector<std::size_t> picks;
    picks.reserve(static_cast<std::size_t>(batch_size));
    if (pool.size() >= static_cast<std::size_t>(batch_size)) {
        std::vector<std::size_t> order(pool.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (int i = 0; i < batch_size; ++i) {
            std::size_t j = i + rng.below(order.size() - static_cast<std::size_t>(i));
            std::swap(order[static_cast<std::size_t>(i)], order[j]);
            picks.push_back(order[static_cast<std::size_t>(i)]);
        }
    } else {
        for (int i = 0; i < batch_size; ++i) picks.push_back(rng.below(pool.size()));
    }
    return picks;
}

} // namespace

std::vector<DynamicsPoint> run_alignment_loop(
    const std::vector<RlPoolItem>& pool, PolicyAdapter& policy, int steps, const GrpoConfig& cfg,
    const RewardConfig& reward_cfg, const std::optional<std::filesystem::path>& batch_path) {
    cfg.validate();
    reward_cfg.validate();
    if (pool.empty()) throw Error(ErrorCode::EmptyPool, "alignment pool is empty");
    if (steps < 0) throw Error(ErrorCode::InvalidConfig, "steps must be non-negative");

    std::optional<JsonlWriter> writer;
    if (batch_path) {
        writer.emplace(*batch_path);
        writer->write_header(formats::kBatches, {{"config", batch_config_json(cfg)}});
    }

    util::Rng rng(cfg.seed);
    std::vector<DynamicsPoint> log;
    log.reserve(static_cast<std::size_t>(steps));
    for (int step = 0; step < steps; ++step) {
        double reward_sum = 0.0;
        double length_sum = 0.0;
        std::size_t completions_seen = 0;
        for (std::size_t idx : draw_batch(pool, cfg.batch_size, rng)) {
            const RlPoolItem& item = pool[idx];
            GroupSample group = sample_group(item.example, policy, cfg);
            group.instance_id = item.id;
            group = score_group(std::move(group), item.example, reward_cfg);
            group.advantages = group_advantages(group.rewards);
            policy.update(group.advantages);
            for (std::size_t i = 0; i < group.completions.size(); ++i) {
                reward_sum += group.rewards[i];
                length_sum += static_cast<double>(group.completions[i].size());
                ++completions_seen;
            }
            if (writer)
                writer->write({{"step", step},
                               {"instance_id", group.instance_id},
                               {"prompt", group.prompt},
                               {"completions", group.completions},
                               {"rewards", group.rewards},
                               {"advantages", group.advantages},
                               {"config", batch_config_json(cfg)}});
        }
        DynamicsPoint point;
        point.step = step;
        point.mean_reward = reward_sum / static_cast<double>(completions_seen);
        point.mean_response_length = length_sum / static_cast<double>(completions_seen);
        log.push_back(point);
    }
    return log;
}

void write_dynamics(const std::filesystem::path& path, const std::vector<DynamicsPoint>& log,
                    const nlohmann::json& header_extra) {
    JsonlWriter writer(path);
    writer.write_header(formats::kDynamics, header_extra);
    for (const auto& point : log)
        writer.write({{"step", point.step},
                      {"mean_reward", point.mean_reward},
                      {"mean_response_length", point.mean_response_length}});
}

} // namespace uie
