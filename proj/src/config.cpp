#include "uie/config.hpp"

#include "uie/errors.hpp"
#include "uie/util.hpp"

#include <set>

namespace uie {

namespace {

const std::set<std::string>& known_keys() {
    static const std::set<std::string> keys = {
        "n_per_dim", "core_size",  "sft_threshold", "paradigms_path", "prompts_dir",
        "alpha",     "beta",       "lambda1",       "lambda2",        "mode",
        "group_size", "max_len",   "batch_size",    "eta",            "kl_coeff",
        "lr",        "hide_fraction", "negative_keep", "seed",        "gateway"};
    return keys;
}

const std::set<std::string>& known_gateway_keys() {
    static const std::set<std::string> keys = {"url",         "model",          "endpoint_path",
                                               "cache_dir",   "max_retries",    "backoff_base_ms",
                                               "max_in_flight"};
    return keys;
}

template <typename T>
void read_field(const nlohmann::json& doc, const char* key, T& out) {
    auto it = doc.find(key);
    if (it == doc.end()) return;
    try {
        out = it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(ErrorCode::InvalidConfig, std::string("bad value for '") + key + "'");
    }
}

} // namespace

PipelineConfig PipelineConfig::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (known_keys().count(key) == 0)
            throw Error(ErrorCode::InvalidConfig, "unknown config key '" + key + "'");
    }

    PipelineConfig cfg;
    read_field(doc, "n_per_dim", cfg.n_per_dim);
    read_field(doc, "core_size", cfg.core_size);
    read_field(doc, "sft_threshold", cfg.sft_threshold);
    read_field(doc, "paradigms_path", cfg.paradigms_path);
    read_field(doc, "prompts_dir", cfg.prompts_dir);
    read_field(doc, "alpha", cfg.alpha);
    read_field(doc, "beta", cfg.beta);
    read_field(doc, "lambda1", cfg.lambda1);
    read_field(doc, "lambda2", cfg.lambda2);
    if (doc.contains("mode")) cfg.mode = reward_mode_from_string(doc.at("mode").get<std::string>());
    read_field(doc, "group_size", cfg.group_size);
    read_field(doc, "max_len", cfg.max_len);
    read_field(doc, "batch_size", cfg.batch_size);
    read_field(doc, "eta", cfg.eta);
    read_field(doc, "kl_coeff", cfg.kl_coeff);
    read_field(doc, "lr", cfg.lr);
    read_field(doc, "hide_fraction", cfg.hide_fraction);
    read_field(doc, "negative_keep", cfg.negative_keep);
    read_field(doc, "seed", cfg.seed);

    if (doc.contains("gateway")) {
        const auto& gw = doc.at("gateway");
        if (!gw.is_object())
            throw Error(ErrorCode::InvalidConfig, "gateway section must be an object");
        for (const auto& [key, value] : gw.items()) {
            (void)value;
            if (known_gateway_keys().count(key) == 0)
                throw Error(ErrorCode::InvalidConfig, "unknown gateway key '" + key + "'");
        }
        read_field(gw, "url", cfg.gateway.url);
        read_field(gw, "model", cfg.gateway.model);
        read_field(gw, "endpoint_path", cfg.gateway.endpoint_path);
        if (gw.contains("cache_dir"))
            cfg.gateway.cache_dir = gw.at("cache_dir").get<std::string>();
        read_field(gw, "max_retries", cfg.gateway.max_retries);
        read_field(gw, "backoff_base_ms", cfg.gateway.backoff_base_ms);
        read_field(gw, "max_in_flight", cfg.gateway.max_in_flight);
    }

    cfg.validate();
    return cfg;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    nlohmann::json doc = nlohmann::json::parse(util::read_file(path), nullptr, false);
    if (doc.is_discarded())
        throw Error(ErrorCode::MalformedJson, "config file is not valid JSON: " + path.string());
    return from_json(doc);
}

void PipelineConfig::validate() const {
    ForgeConfig probe;
    probe.n_per_dim = n_per_dim;
    probe.core_size = static_cast<std::size_t>(core_size);
    probe.sft_threshold = sft_threshold;
    probe.seed = seed;
    if (core_size < 1) throw Error(ErrorCode::InvalidConfig, "core_size must be positive");
    probe.validate();
    reward().validate();
    grpo().validate();
    if (hide_fraction < 0.0 || hide_fraction > 1.0)
        throw Error(ErrorCode::InvalidConfig, "hide_fraction must lie in [0, 1]");
    if (negative_keep < 0.0 || negative_keep > 1.0)
        throw Error(ErrorCode::InvalidConfig, "negative_keep must lie in [0, 1]");
    if (gateway.max_retries < 0)
        throw Error(ErrorCode::InvalidConfig, "max_retries must be non-negative");
    if (gateway.max_in_flight < 1)
        throw Error(ErrorCode::InvalidConfig, "max_in_flight must be positive");
}

nlohmann::json PipelineConfig::resolved() const {
    return {{"n_per_dim", n_per_dim},
            {"core_size", core_size},
            {"sft_threshold", sft_threshold},
            {"paradigms_path", paradigms_path},
            {"prompts_dir", prompts_dir},
            {"alpha", alpha},
            {"beta", beta},
            {"lambda1", lambda1},
            {"lambda2", lambda2},
            {"mode", to_string(mode)},
            {"group_size", group_size},
            {"max_len", max_len},
            {"batch_size", batch_size},
            {"eta", eta},
            {"kl_coeff", kl_coeff},
            {"lr", lr},
            {"hide_fraction", hide_fraction},
            {"negative_keep", negative_keep},
            {"seed", seed},
            {"gateway",
             {{"url", gateway.url},
              {"model", gateway.model},
              {"endpoint_path", gateway.endpoint_path},
              {"cache_dir", gateway.cache_dir.string()},
              {"max_retries", gateway.max_retries},
              {"backoff_base_ms", gateway.backoff_base_ms},
              {"max_in_flight", gateway.max_in_flight},
              {"api_key_set", !gateway.api_key.empty()}}}};
}

ForgeConfig PipelineConfig::forge() const {
    ForgeConfig cfg;
    cfg.n_per_dim = n_per_dim;
    cfg.core_size = static_cast<std::size_t>(core_size);
    cfg.sft_threshold = sft_threshold;
    cfg.seed = seed;
    if (!paradigms_path.empty()) cfg.paradigms = load_paradigms(paradigms_path);
    if (!prompts_dir.empty()) cfg.prompts = PromptTemplates::load_dir(prompts_dir);
    cfg.validate();
    return cfg;
}

RewardConfig PipelineConfig::reward() const {
    RewardConfig cfg;
    cfg.alpha = alpha;
    cfg.beta = beta;
    cfg.lambda1 = lambda1;
    cfg.lambda2 = lambda2;
    cfg.mode = mode;
    return cfg;
}

GrpoConfig PipelineConfig::grpo() const {
    GrpoConfig cfg;
    cfg.group_size = group_size;
    cfg.max_len = max_len;
    cfg.batch_size = batch_size;
    cfg.eta = eta;
    cfg.kl_coeff = kl_coeff;
    cfg.lr = lr;
    cfg.seed = seed;
    return cfg;
}

} // namespace uie
