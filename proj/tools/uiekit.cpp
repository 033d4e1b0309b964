#include "uie/config.hpp"
#include "uie/dataset.hpp"
#include "uie/errors.hpp"
#include "uie/gateway.hpp"
#include "uie/grpo.hpp"
#include "uie/jsonl.hpp"
#include "uie/records.hpp"
#include "uie/reward.hpp"
#include "uie/reward_server.hpp"
#include "uie/schema.hpp"
#include "uie/scorer.hpp"
#include "uie/strategy.hpp"
#include "uie/util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct GlobalArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string mock_path;
    std::string cache_dir;
};

uie::PipelineConfig resolve_config(const GlobalArgs& args) {
    uie::PipelineConfig cfg;
    if (!args.config_path.empty()) cfg = uie::PipelineConfig::load(args.config_path);
    if (args.seed) cfg.seed = *args.seed;
    if (!args.cache_dir.empty()) cfg.gateway.cache_dir = args.cache_dir;
    cfg.validate();
    return cfg;
}

std::unique_ptr<uie::Gateway> make_gateway(const GlobalArgs& args,
                                           const uie::PipelineConfig& cfg) {
    std::unique_ptr<uie::Transport> transport;
    if (!args.mock_path.empty()) {
        transport = uie::MockTransport::from_file(args.mock_path);
    } else if (!cfg.gateway.url.empty()) {
        transport = std::make_unique<uie::HttpTransport>(cfg.gateway.url, cfg.gateway.api_key,
                                                         cfg.gateway.model,
                                                         cfg.gateway.endpoint_path);
    } else {
        throw uie::Error(uie::ErrorCode::UsageError,
                         "no generator configured: pass --mock or set GATEWAY_URL");
    }
    return std::make_unique<uie::Gateway>(std::move(transport), cfg.gateway);
}

std::vector<json> read_raw_lines(const fs::path& path) {
    std::istringstream in(uie::util::read_file(path));
    std::vector<json> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(json::parse(line, nullptr, false));
    }
    return out;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text << "\n";
    } else {
        uie::util::write_file(out_path, text + "\n");
    }
}

int run_cli(int argc, char** argv) {
    CLI::App app{"information extraction data toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalArgs globals;
    app.add_option("--config", globals.config_path, "pipeline config JSON")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", globals.seed, "override the configured seed");
    app.add_option("--mock", globals.mock_path, "serve generator calls from a mock rules file")
        ->check(CLI::ExistingFile);
    app.add_option("--cache-dir", globals.cache_dir, "gateway response cache directory");

    int exit_code = 0;

    auto* schema_cmd = app.add_subcommand("schema", "schema utilities");
    schema_cmd->require_subcommand(1);
    auto* compile_cmd = schema_cmd->add_subcommand("compile", "compile a raw schema file");
    struct {
        std::string in, task, out;
        bool allow_empty_event_roles = false;
    } compile_args;
    compile_cmd->add_option("--in", compile_args.in, "raw schema JSON")
        ->required()
        ->check(CLI::ExistingFile);
    compile_cmd->add_option("--task", compile_args.task, "ner, re or ee")->required();
    compile_cmd->add_option("--out", compile_args.out, "output path (default stdout)");
    compile_cmd->add_flag("--allow-empty-event-roles", compile_args.allow_empty_event_roles,
                          "accept event classes without roles");
    compile_cmd->callback([&] {
        json raw = json::parse(uie::util::read_file(compile_args.in), nullptr, false);
        if (raw.is_discarded())
            throw uie::Error(uie::ErrorCode::MalformedJson, "schema file is not valid JSON");
        uie::CompileOptions options;
        options.allow_empty_event_roles = compile_args.allow_empty_event_roles;
        auto schema =
            uie::compile_schema(raw, uie::task_from_string(compile_args.task), options);
        emit(uie::serialize_schema(schema), compile_args.out);
    });

    auto* curate_cmd = app.add_subcommand("curate", "shape raw lines into a corpus file");
    struct {
        std::string in, out, adapter = "native", source = "corpus", split = "train";
        bool no_dedup = false;
        double negative_keep = -1.0;
    } curate_args;
    curate_cmd->add_option("--in", curate_args.in, "raw JSONL input")
        ->required()
        ->check(CLI::ExistingFile);
    curate_cmd->add_option("--out", curate_args.out, "corpus output path")->required();
    curate_cmd->add_option("--adapter", curate_args.adapter, "native or flat-ner");
    curate_cmd->add_option("--source", curate_args.source, "source name for unlabeled records");
    curate_cmd->add_option("--split", curate_args.split, "split name for unlabeled records");
    curate_cmd->add_flag("--no-dedup", curate_args.no_dedup, "keep duplicate (x, gold) pairs");
    curate_cmd->add_option("--negative-keep", curate_args.negative_keep,
                           "keep ratio for empty-gold records (off when unset)");
    curate_cmd->callback([&] {
        auto cfg = resolve_config(globals);
        uie::CurationRules rules;
        rules.adapter = curate_args.adapter;
        rules.source = curate_args.source;
        rules.split = curate_args.split;
        rules.dedup = !curate_args.no_dedup;
        uie::CurationStats stats;
        auto records = uie::curate_corpus(read_raw_lines(curate_args.in), rules, &stats);
        json extra{{"config", cfg.resolved()}, {"stats", stats.to_json()}};
        if (curate_args.negative_keep >= 0.0) {
            records = uie::subsample_negatives(records, curate_args.negative_keep, cfg.seed);
            extra["negative_keep"] = curate_args.negative_keep;
        }
        uie::write_corpus(curate_args.out, records, extra);
        json report = stats.to_json();
        report["written"] = records.size();
        std::cout << report.dump(2) << "\n";
    });

    auto* build_cmd = app.add_subcommand("build-reasoning",
                                         "run strategy divergence and rejection filtering");
    struct {
        std::string corpus, out, histogram;
    } build_args;
    build_cmd->add_option("--corpus", build_args.corpus, "curated corpus JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    build_cmd->add_option("--out", build_args.out, "reasoning dataset output path")->required();
    build_cmd->add_option("--histogram", build_args.histogram, "level histogram JSON path");
    build_cmd->callback([&] {
        auto cfg = resolve_config(globals);
        auto gateway = make_gateway(globals, cfg);
        uie::StrategyForge forge(*gateway, cfg.forge());
        auto corpus = uie::load_corpus(build_args.corpus);
        auto result = uie::build_reasoning(corpus, forge);
        uie::write_reasoning(build_args.out, result.instances,
                             {{"config", cfg.resolved()},
                              {"histogram", result.histogram.to_json()},
                              {"incomplete", result.incomplete}});
        json summary{{"instances", result.instances.size()},
                     {"incomplete", result.incomplete},
                     {"histogram", result.histogram.to_json()}};
        if (!build_args.histogram.empty())
            uie::util::write_file(build_args.histogram,
                                  result.histogram.to_json().dump(2) + "\n");
        std::cout << summary.dump(2) << "\n";
        if (result.incomplete > 0) {
            std::cerr << "warning: " << result.incomplete
                      << " instances incomplete; rerun with the same cache to resume\n";
            exit_code = 3;
        }
    });

    auto* sft_cmd = app.add_subcommand("render-sft", "render SFT samples from kept traces");
    struct {
        std::string reasoning, out;
        double hide_fraction = -1.0;
    } sft_args;
    sft_cmd->add_option("--reasoning", sft_args.reasoning, "reasoning dataset JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    sft_cmd->add_option("--out", sft_args.out, "SFT output path")->required();
    sft_cmd->add_option("--hide-fraction", sft_args.hide_fraction,
                        "strategy-hiding fraction (default from config)");
    sft_cmd->callback([&] {
        auto cfg = resolve_config(globals);
        double fraction = sft_args.hide_fraction >= 0.0 ? sft_args.hide_fraction
                                                        : cfg.hide_fraction;
        auto routed =
            uie::route_instances(uie::load_reasoning(sft_args.reasoning), cfg.sft_threshold);
        auto samples = uie::render_sft(routed.sft);
        const std::size_t base = samples.size();
        samples = uie::inject_strategy_hiding(std::move(samples), fraction, cfg.seed);
        uie::write_sft(sft_args.out, samples, {{"config", cfg.resolved()}});
        json summary{{"sft_instances", routed.sft.size()},
                     {"rl_instances", routed.rl.size()},
                     {"samples", base},
                     {"hidden_clones", samples.size() - base}};
        std::cout << summary.dump(2) << "\n";
    });

    auto* route_cmd = app.add_subcommand("route", "split a reasoning dataset by level");
    struct {
        std::string reasoning, sft_out, rl_out;
        int threshold = -1;
    } route_args;
    route_cmd->add_option("--reasoning", route_args.reasoning, "reasoning dataset JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    route_cmd->add_option("--sft-out", route_args.sft_out, "SFT-routed output path")->required();
    route_cmd->add_option("--rl-out", route_args.rl_out, "RL-routed output path")->required();
    route_cmd->add_option("--threshold", route_args.threshold,
                          "level threshold (default from config)");
    route_cmd->callback([&] {
        auto cfg = resolve_config(globals);
        const int threshold = route_args.threshold >= 0 ? route_args.threshold
                                                        : cfg.sft_threshold;
        auto routed =
            uie::route_instances(uie::load_reasoning(route_args.reasoning), threshold);
        json extra{{"config", cfg.resolved()}, {"threshold", threshold}};
        uie::write_reasoning(route_args.sft_out, routed.sft, extra);
        uie::write_reasoning(route_args.rl_out, routed.rl, extra);
        json summary{{"sft", routed.sft.size()}, {"rl", routed.rl.size()}};
        std::cout << summary.dump(2) << "\n";
    });

    auto* reward_cmd = app.add_subcommand("reward", "reward scoring utilities");
    reward_cmd->require_subcommand(1);

    auto* serve_cmd = reward_cmd->add_subcommand("serve", "run the reward HTTP service");
    struct {
        std::string host = "127.0.0.1";
        int port = 8080;
    } serve_args;
    serve_cmd->add_option("--host", serve_args.host, "bind address");
    serve_cmd->add_option("--port", serve_args.port, "port (0 picks a free one)");
    serve_cmd->callback([&] {
        auto cfg = resolve_config(globals);
        uie::RewardServer server(cfg.reward());
        const int port = server.start(serve_args.host, serve_args.port);
        std::cout << "reward server listening on http://" << serve_args.host << ":" << port
                  << "\n"
                  << std::flush;
        for (;;) std::this_thread::sleep_for(std::chrono::seconds(1));
    });

    auto* score_req_cmd = reward_cmd->add_subcommand("score", "score a request file offline");
    struct {
        std::string in, out;
    } score_req_args;
    score_req_cmd->add_option("--in", score_req_args.in, "request JSON (single or batch)")
        ->required()
        ->check(CLI::ExistingFile);
    score_req_cmd->add_option("--out", score_req_args.out, "output path (default stdout)");
    score_req_cmd->callback([&] {
        auto cfg = resolve_config(globals);
        json body = json::parse(uie::util::read_file(score_req_args.in), nullptr, false);
        if (body.is_discarded())
            throw uie::Error(uie::ErrorCode::MalformedJson, "request file is not valid JSON");
        json result;
        if (body.is_object() && body.contains("items")) {
            if (!body["items"].is_array())
                throw uie::Error(uie::ErrorCode::MalformedJson, "items must be an array");
            result = json{{"results", json::array()}};
            for (const auto& item : body["items"]) {
                try {
                    result["results"].push_back(uie::score_reward_request(item, cfg.reward()));
                } catch (const uie::Error& e) {
                    result["results"].push_back(json{{"error", e.what()}});
                }
            }
        } else {
            result = uie::score_reward_request(body, cfg.reward());
        }
        emit(result.dump(2), score_req_args.out);
    });

    auto* sim_cmd = app.add_subcommand("grpo", "group-relative policy optimization tools");
    sim_cmd->require_subcommand(1);
    auto* run_cmd = sim_cmd->add_subcommand("sim", "run the bandit-mock alignment loop");
    struct {
        std::string rl, dynamics, batches, menu;
        int steps = 200;
    } sim_args;
    run_cmd->add_option("--rl", sim_args.rl, "RL-routed reasoning JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    run_cmd->add_option("--steps", sim_args.steps, "alignment steps");
    run_cmd->add_option("--out-dynamics", sim_args.dynamics, "training dynamics JSONL path")
        ->required();
    run_cmd->add_option("--out-batches", sim_args.batches, "exported batch JSONL path");
    run_cmd->add_option("--menu", sim_args.menu, "completion template JSON array")
        ->check(CLI::ExistingFile);
    run_cmd->callback([&] {
        auto cfg = resolve_config(globals);
        std::vector<uie::RlPoolItem> pool;
        std::map<std::string, std::string> gold_by_x;
        for (const auto& instance : uie::load_reasoning(sim_args.rl)) {
            pool.push_back({instance.record.id, instance.record.to_example()});
            gold_by_x[instance.record.x] = uie::serialize_records(instance.record.gold);
        }
        std::vector<std::string> menu = uie::default_bandit_menu();
        if (!sim_args.menu.empty()) {
            json doc = json::parse(uie::util::read_file(sim_args.menu), nullptr, false);
            if (!doc.is_array() || doc.empty())
                throw uie::Error(uie::ErrorCode::InvalidConfig,
                                 "menu must be a non-empty JSON array of strings");
            menu.clear();
            for (const auto& item : doc) menu.push_back(item.get<std::string>());
        }
        uie::BanditPolicy policy(menu, cfg.eta,
                                 cfg.seed ^ uie::util::fnv1a64("bandit-policy"));
        policy.set_gold_lookup([&gold_by_x](const std::string& x) {
            auto it = gold_by_x.find(x);
            return it == gold_by_x.end() ? std::string("[]") : it->second;
        });
        std::optional<fs::path> batches;
        if (!sim_args.batches.empty()) batches = sim_args.batches;
        auto log = uie::run_alignment_loop(pool, policy, sim_args.steps, cfg.grpo(),
                                           cfg.reward(), batches);
        uie::write_dynamics(sim_args.dynamics, log, {{"config", cfg.resolved()}});
        json summary{{"steps", log.size()}};
        if (!log.empty()) {
            summary["first_mean_reward"] = log.front().mean_reward;
            summary["final_mean_reward"] = log.back().mean_reward;
            summary["final_mean_response_length"] = log.back().mean_response_length;
        }
        std::cout << summary.dump(2) << "\n";
    });

    auto* score_cmd = app.add_subcommand("score", "score predictions against a corpus");
    struct {
        std::string pred, gold, task, out;
    } score_args;
    score_cmd->add_option("--pred", score_args.pred, "predictions or reasoning JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    score_cmd->add_option("--gold", score_args.gold, "corpus JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    score_cmd->add_option("--task", score_args.task, "keep only this task (ner, re, ee)");
    score_cmd->add_option("--out", score_args.out, "metrics JSONL path");
    score_cmd->callback([&] {
        auto cfg = resolve_config(globals);
        std::optional<uie::TaskKind> filter;
        if (!score_args.task.empty()) filter = uie::task_from_string(score_args.task);
        auto result = uie::evaluate_files(score_args.pred, score_args.gold, filter);
        if (!score_args.out.empty()) {
            uie::JsonlWriter writer(score_args.out);
            writer.write_header(uie::formats::kMetrics,
                                {{"config", cfg.resolved()},
                                 {"missing_predictions", result.missing_predictions},
                                 {"unmatched_predictions", result.unmatched_predictions}});
            for (const auto& row : uie::report_to_json(result.rows)) writer.write(row);
        }
        std::cout << uie::render_report_text(result.rows);
        if (result.missing_predictions > 0 || result.unmatched_predictions > 0) {
            std::cerr << "note: " << result.missing_predictions << " missing and "
                      << result.unmatched_predictions << " unmatched predictions\n";
        }
    });

    auto* report_cmd = app.add_subcommand("report", "render a metrics file as text");
    struct {
        std::string in;
    } report_args;
    report_cmd->add_option("--in", report_args.in, "metrics JSONL")
        ->required()
        ->check(CLI::ExistingFile);
    report_cmd->callback([&] {
        uie::JsonlReader reader(report_args.in);
        if (!reader.header() || !reader.header()->contains("format") ||
            (*reader.header())["format"] != uie::formats::kMetrics) {
            throw uie::Error(uie::ErrorCode::UsageError, "not a metrics file");
        }
        std::vector<uie::MetricRow> rows;
        while (auto line = reader.next()) rows.push_back(uie::metric_row_from_json(*line));
        std::cout << uie::render_report_text(rows);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    return exit_code;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const uie::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
