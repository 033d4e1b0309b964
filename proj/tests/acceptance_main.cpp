#include "uie/dataset.hpp"
#include "uie/errors.hpp"
#include "uie/gateway.hpp"
#include "uie/grpo.hpp"
#include "uie/jsonl.hpp"
#include "uie/records.hpp"
#include "uie/reward.hpp"
#include "uie/schema.hpp"
#include "uie/scorer.hpp"
#include "uie/strategy.hpp"
#include "uie/util.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace uie;
using nlohmann::json;

namespace {

struct CheckFailure : std::runtime_error {
    explicit CheckFailure(const std::string& what) : std::runtime_error(what) {}
};

void require(bool condition, const std::string& message) {
    if (!condition) throw CheckFailure(message);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void require_under(std::chrono::steady_clock::time_point start, double limit,
                   const std::string& label) {
    double elapsed = seconds_since(start);
    require(elapsed < limit, label + " took " + std::to_string(elapsed) + "s, limit " +
                                 std::to_string(limit) + "s");
}

std::filesystem::path fixtures_dir() { return std::filesystem::path(FIXTURES_DIR); }

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "uiekit-acceptance" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

std::vector<json> read_raw_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), "cannot open " + path.string());
    std::vector<json> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        out.push_back(json::parse(line, nullptr, false));
    }
    return out;
}

// ---------------------------------------------------------------------------
// criterion 1: match counting against a brute-force oracle

std::vector<std::string> oracle_units(const ExtractionRecord& record, TaskKind task,
                                      std::optional<EventSubtask> subtask) {
    std::vector<std::string> units;
    if (task == TaskKind::NER) {
        const auto& e = std::get<Entity>(record);
        units.push_back("E\x1f" + e.class_id + "\x1f" + e.mention);
    } else if (task == TaskKind::RE) {
        const auto& r = std::get<Relation>(record);
        units.push_back("R\x1f" + r.subject + "\x1f" + r.relation + "\x1f" + r.object);
    } else {
        const auto& ev = std::get<Event>(record);
        if (*subtask == EventSubtask::Trigger) {
            units.push_back("T\x1f" + ev.class_id + "\x1f" + ev.trigger);
        } else {
            for (const auto& arg : ev.arguments) {
                units.push_back("A\x1f" + ev.class_id + "\x1f" + arg.role + "\x1f" + arg.span);
            }
        }
    }
    return units;
}

MatchCounts oracle_counts(const CanonicalRecords& pred, const CanonicalRecords& gold,
                          TaskKind task, std::optional<EventSubtask> subtask) {
    std::map<std::string, std::size_t> pred_units, gold_units;
    std::size_t pred_total = 0, gold_total = 0;
    for (const auto& record : pred.items()) {
        for (auto& unit : oracle_units(record, task, subtask)) {
            ++pred_units[unit];
            ++pred_total;
        }
    }
    for (const auto& record : gold.items()) {
        for (auto& unit : oracle_units(record, task, subtask)) {
            ++gold_units[unit];
            ++gold_total;
        }
    }
    std::size_t tp = 0;
    for (const auto& [unit, count] : pred_units) {
        auto it = gold_units.find(unit);
        if (it != gold_units.end()) tp += std::min(count, it->second);
    }
    return {tp, pred_total - tp, gold_total - tp};
}

CanonicalRecords random_records(util::Rng& rng, TaskKind task) {
    static const std::vector<std::string> spans = {"ada", "bo", "cy", "dee", "eve"};
    static const std::vector<std::string> classes = {"person", "location"};
    static const std::vector<std::string> relations = {"works_for", "based_in"};
    static const std::vector<std::string> events = {"attack", "meet"};
    static const std::vector<std::string> triggers = {"hit", "met", "saw"};
    static const std::vector<std::string> roles = {"agent", "place"};

    std::vector<ExtractionRecord> out;
    const std::size_t n = rng.below(6);
    for (std::size_t i = 0; i < n; ++i) {
        if (task == TaskKind::NER) {
            out.push_back(Entity{spans[rng.below(spans.size())],
                                 classes[rng.below(classes.size())]});
        } else if (task == TaskKind::RE) {
            out.push_back(Relation{spans[rng.below(spans.size())],
                                   relations[rng.below(relations.size())],
                                   spans[rng.below(spans.size())]});
        } else {
            Event ev;
            ev.class_id = events[rng.below(events.size())];
            ev.trigger = triggers[rng.below(triggers.size())];
            const std::size_t n_args = rng.below(3);
            for (std::size_t a = 0; a < n_args; ++a) {
                ev.arguments.push_back(
                    {roles[rng.below(roles.size())], spans[rng.below(spans.size())]});
            }
            out.push_back(std::move(ev));
        }
    }
    return CanonicalRecords::adopt(std::move(out));
}

void check_micro_against_hand_formula(const MatchCounts& counts) {
    MetricRow row = micro_f1({counts});
    const double pred_total = static_cast<double>(counts.tp + counts.fp);
    const double gold_total = static_cast<double>(counts.tp + counts.fn);
    const double precision = pred_total > 0 ? static_cast<double>(counts.tp) / pred_total : 0.0;
    const double recall = gold_total > 0 ? static_cast<double>(counts.tp) / gold_total : 0.0;
    const double f1 =
        precision + recall > 0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    const bool degenerate = pred_total == 0 || gold_total == 0 || precision + recall == 0;

    require(std::abs(row.precision - precision) <= 1e-12, "precision deviates from hand formula");
    require(std::abs(row.recall - recall) <= 1e-12, "recall deviates from hand formula");
    require(std::abs(row.f1 - f1) <= 1e-12, "f1 deviates from hand formula");
    require(row.degenerate == degenerate, "degenerate flag deviates from hand rule");
}

void criterion_scorer_oracle() {
    auto start = std::chrono::steady_clock::now();
    util::Rng rng(1001);
    for (TaskKind task : {TaskKind::NER, TaskKind::RE, TaskKind::EE}) {
        for (int iter = 0; iter < 1000; ++iter) {
            auto pred = random_records(rng, task);
            auto gold = random_records(rng, task);
            std::vector<std::optional<EventSubtask>> subtasks;
            if (task == TaskKind::EE) {
                subtasks = {EventSubtask::Trigger, EventSubtask::Argument};
            } else {
                subtasks = {std::nullopt};
            }
            for (auto subtask : subtasks) {
                MatchCounts got = count_matches(pred, gold, task, subtask);
                MatchCounts want = oracle_counts(pred, gold, task, subtask);
                require(got.tp == want.tp && got.fp == want.fp && got.fn == want.fn,
                        "count_matches disagrees with the brute-force oracle");
                check_micro_against_hand_formula(got);
            }
        }
    }
    require_under(start, 5.0, "scorer oracle sweep");
}

// ---------------------------------------------------------------------------
// criterion 2: reward properties

void criterion_reward_properties() {
    auto start = std::chrono::steady_clock::now();
    util::Rng rng(2002);
    auto schema = compile_schema(json{{"classes", {"person", "location"}}}, TaskKind::NER);
    static const std::vector<std::string> spans = {"ada", "bo", "cy", "dee"};
    static const std::vector<std::string> classes = {"person", "location"};
    static const std::vector<std::string> cot_words = {"verify", "scan", "guess", "the", "span"};
    RewardConfig cfg;

    auto random_set = [&](std::size_t max_n) {
        std::vector<ExtractionRecord> out;
        const std::size_t n = rng.below(max_n + 1);
        for (std::size_t i = 0; i < n; ++i) {
            out.push_back(Entity{spans[rng.below(spans.size())],
                                 classes[rng.below(classes.size())]});
        }
        return CanonicalRecords::adopt(std::move(out));
    };

    auto facets = [](const CanonicalRecords& records) {
        std::vector<std::string> cats, args;
        for (const auto& record : records.items()) {
            const auto& e = std::get<Entity>(record);
            cats.push_back(e.class_id);
            args.push_back(e.mention);
        }
        std::sort(cats.begin(), cats.end());
        std::sort(args.begin(), args.end());
        return std::pair(cats, args);
    };

    for (int iter = 0; iter < 10000; ++iter) {
        auto pred = random_set(4);
        auto gold = random_set(4);

        RewardConfig strict = cfg;
        strict.mode = RewardMode::Strict;
        double r = result_reward(pred, gold, strict);
        require(r == 0.0 || r == 1.0, "strict result reward left {0, 1}");
        require((r == 1.0) == (facets(pred) == facets(gold)),
                "strict result reward disagrees with facet equality");

        double u = rng.unit();
        double v = rng.unit();
        auto blend = total_reward(u, v, cfg);
        require(std::abs(blend.r_total - (cfg.lambda1 * u + cfg.lambda2 * v)) <= 1e-12,
                "total reward left the convex blend");

        std::string cot;
        const std::size_t n_words = rng.below(6);
        for (std::size_t w = 0; w < n_words; ++w) {
            if (w) cot += ' ';
            cot += cot_words[rng.below(cot_words.size())];
        }
        double p = process_reward("ada bo cy dee", schema, nullptr, cot, pred);
        require(p == 0.0 || p == 1.0 / 3.0 || p == 2.0 / 3.0 || p == 1.0,
                "process reward left its quantized range");

        if (iter % 10 == 0) {
            RewardConfig soft = cfg;
            soft.mode = RewardMode::Soft;
            std::vector<ExtractionRecord> ladder = {
                Entity{"ada", "person"}, Entity{"bo", "location"}, Entity{"cy", "person"},
                Entity{"dee", "location"}};
            auto full = CanonicalRecords::adopt(ladder);
            double previous = -1.0;
            for (std::size_t k = 0; k <= ladder.size(); ++k) {
                auto partial = CanonicalRecords::adopt(
                    {ladder.begin(), ladder.begin() + static_cast<std::ptrdiff_t>(k)});
                double score = result_reward(partial, full, soft);
                require(score > previous, "soft result reward failed to rise with f1");
                previous = score;
            }
            require(previous == 1.0, "soft result reward missed 1.0 at equality");
        }
    }
    require_under(start, 5.0, "reward property sweep");
}

// ---------------------------------------------------------------------------
// criterion 3: strategy pipeline shape and reproducibility

void criterion_strategy_pipeline() {
    auto start = std::chrono::steady_clock::now();
    auto lines = read_raw_lines(fixtures_dir() / "mini_corpus.jsonl");
    auto corpus = curate_corpus(lines, CurationRules{});
    require(corpus.size() == 20, "mini corpus should curate to 20 records");

    ForgeConfig defaults;
    require(defaults.n_per_dim == 5, "default strategies per dimension should be 5");
    require(defaults.core_size == 5, "default reasoning core size should be 5");
    require(defaults.sft_threshold == 3, "default routing threshold should be 3");

    auto build_once = [&]() {
        Gateway gateway(MockTransport::from_file(fixtures_dir() / "mock.json"),
                        GatewayConfig{});
        ForgeConfig cfg;
        cfg.seed = 7;
        StrategyForge forge(gateway, cfg);
        return build_reasoning(corpus, forge);
    };

    auto first = build_once();
    require(first.instances.size() == 20, "one reasoning instance per corpus record");
    require(first.incomplete == 0, "mock-backed build should complete");
    for (const auto& instance : first.instances) {
        require(instance.diagnostics.raw_strategies == 15,
                "divergence should yield 3 x 5 strategies per example");
        require(instance.level == static_cast<int>(instance.traces.size()),
                "level must equal the kept trace count");
        require((instance.route == Route::Sft) == (instance.level >= 3),
                "routing must follow level >= 3");
        for (const auto& trace : instance.traces) {
            require(trace.correct, "kept traces must be correct");
            require(trace.prediction == instance.record.gold,
                    "kept trace predictions must equal gold");
        }
    }

    auto second = build_once();
    std::string bytes_first, bytes_second;
    for (const auto& instance : first.instances) {
        bytes_first += reasoning_instance_to_json(instance).dump();
        bytes_first += '\n';
    }
    for (const auto& instance : second.instances) {
        bytes_second += reasoning_instance_to_json(instance).dump();
        bytes_second += '\n';
    }
    require(bytes_first == bytes_second, "two builds should be byte-identical");
    require_under(start, 30.0, "strategy pipeline build");
}

// ---------------------------------------------------------------------------
// criterion 4: tf-idf hand oracle and representative extremality

std::map<std::string, double> hand_tfidf(const std::vector<std::string>& docs, std::size_t index) {
    std::map<std::string, std::size_t> df;
    std::vector<std::vector<std::string>> tokens;
    for (const auto& doc : docs) {
        tokens.push_back(util::tokenize(doc));
        std::set<std::string> uniq(tokens.back().begin(), tokens.back().end());
        for (const auto& t : uniq) ++df[t];
    }
    std::map<std::string, double> weights;
    if (tokens[index].empty()) return weights;
    for (const auto& t : tokens[index]) weights[t] += 1.0;
    for (auto& [term, w] : weights) {
        double tf = w / static_cast<double>(tokens[index].size());
        double idf = std::log(static_cast<double>(docs.size()) /
                              (1.0 + static_cast<double>(df[term]))) +
                     1.0;
        w = tf * idf;
    }
    return weights;
}

double hand_cosine(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (const auto& [term, w] : a) {
        na += w * w;
        auto it = b.find(term);
        if (it != b.end()) dot += w * it->second;
    }
    for (const auto& [term, w] : b) nb += w * w;
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

void criterion_embedding_oracle() {
    auto start = std::chrono::steady_clock::now();

    const std::vector<std::string> fixture = {"a b", "a c", "b c"};
    auto vectors = embed_tfidf(fixture);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = i + 1; j < 3; ++j) {
            double got = cosine(vectors[i], vectors[j]);
            double want = hand_cosine(hand_tfidf(fixture, i), hand_tfidf(fixture, j));
            require(std::abs(got - 0.5) <= 1e-9, "fixture cosine should be exactly one half");
            require(std::abs(want - 0.5) <= 1e-9, "hand oracle should agree on one half");
        }
    }

    util::Rng rng(404);
    static const std::vector<std::string> words = {"scan",  "verify", "order", "list",
                                                   "quote", "span",   "check", "read"};
    for (int iter = 0; iter < 500; ++iter) {
        const std::size_t size = 1 + rng.below(6);
        std::vector<std::string> texts;
        for (std::size_t i = 0; i < size; ++i) {
            std::string text;
            const std::size_t n_words = 1 + rng.below(5);
            for (std::size_t w = 0; w < n_words; ++w) {
                if (w) text += ' ';
                text += words[rng.below(words.size())];
            }
            texts.push_back(std::move(text));
        }
        auto pick = pick_representatives(texts);
        if (size == 1) {
            require(pick.unique_index == 0 && pick.generic_index == 0,
                    "singleton must represent itself twice");
            continue;
        }
        std::vector<std::map<std::string, double>> embeds;
        for (std::size_t i = 0; i < size; ++i) embeds.push_back(hand_tfidf(texts, i));
        std::vector<double> mean(size, 0.0);
        for (std::size_t i = 0; i < size; ++i) {
            for (std::size_t j = 0; j < size; ++j) {
                if (j != i) mean[i] += hand_cosine(embeds[i], embeds[j]);
            }
            mean[i] /= static_cast<double>(size - 1);
        }
        for (std::size_t i = 0; i < size; ++i) {
            require(mean[pick.unique_index] <= mean[i] + 1e-9,
                    "unique pick must minimize mean similarity");
            require(mean[pick.generic_index] >= mean[i] - 1e-9,
                    "generic pick must maximize mean similarity");
        }
    }
    require_under(start, 30.0, "embedding oracle sweep");
}

// ---------------------------------------------------------------------------
// criterion 5: advantage normalization and the bandit learning curve

void criterion_advantages_and_bandit() {
    auto start = std::chrono::steady_clock::now();
    util::Rng rng(505);
    for (int iter = 0; iter < 1000; ++iter) {
        const std::size_t g = 2 + rng.below(7);
        std::vector<double> rewards;
        if (rng.below(2) == 0) {
            double value = rng.unit();
            rewards.assign(g, value);
        } else {
            for (std::size_t i = 0; i < g; ++i) rewards.push_back(rng.unit());
        }
        auto advantages = group_advantages(rewards);
        require(advantages.size() == g, "advantage count must match the group");

        bool all_equal = std::all_of(rewards.begin(), rewards.end(),
                                     [&](double r) { return r == rewards.front(); });
        if (all_equal) {
            for (double a : advantages) {
                require(a == 0.0, "identical rewards must map to exact zeros");
            }
            continue;
        }
        double sum = 0.0, sq = 0.0;
        for (double a : advantages) {
            sum += a;
            sq += a * a;
        }
        require(std::abs(sum) < 1e-9, "advantages must sum to zero");
        require(std::abs(sq / static_cast<double>(g) - 1.0) <= 1e-4,
                "advantages must have unit variance");
    }

    auto schema = compile_schema(json{{"classes", {"person", "location"}}}, TaskKind::NER);
    std::vector<RlPoolItem> pool;
    const std::vector<std::pair<std::string, std::string>> texts = {
        {"Ada Lovelace wrote the notes.", "Ada Lovelace"},
        {"Grace Hopper led the team.", "Grace Hopper"},
        {"Alan Turing proved the result.", "Alan Turing"},
    };
    std::map<std::string, std::string> gold_by_x;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        auto gold = canonicalize({Entity{texts[i].second, "person"}}, schema);
        gold_by_x[texts[i].first] = serialize_records(gold);
        pool.push_back({"pool-" + std::to_string(i), {texts[i].first, schema, gold}});
    }

    GrpoConfig cfg;
    cfg.group_size = 8;
    cfg.batch_size = 8;
    cfg.seed = 909;
    BanditPolicy policy(default_bandit_menu(), cfg.eta, 909);
    policy.set_gold_lookup([&](const std::string& x) {
        auto it = gold_by_x.find(x);
        return it == gold_by_x.end() ? std::string("[]") : it->second;
    });

    auto log = run_alignment_loop(pool, policy, 200, cfg, RewardConfig{});
    require(log.size() == 200, "one dynamics point per step");
    require(log.back().mean_reward > log.front().mean_reward,
            "mean reward must rise over the run");

    auto dynamics_path = scratch_dir("dynamics") / "dynamics.jsonl";
    write_dynamics(dynamics_path, log);
    JsonlReader reader(dynamics_path);
    require(reader.header().has_value(), "dynamics file needs a header");
    std::size_t rows = 0;
    while (auto line = reader.next()) {
        require(line->contains("mean_reward") && line->contains("mean_response_length"),
                "dynamics lines must carry both learning curves");
        ++rows;
    }
    require(rows == 200, "dynamics file must hold every step");
    require_under(start, 60.0, "advantage and bandit sweep");
}

// ---------------------------------------------------------------------------
// criterion 6: hiding clone counts and negative subsampling bounds

void criterion_hiding_and_negatives() {
    auto start = std::chrono::steady_clock::now();

    SftSample base;
    base.instance_id = "inst";
    base.prompt = "Strategy: look closely\n\nExtract all entity mentions from the text.";
    base.target = "<think>seen</think>[]";
    base.cot_begin = 7;
    base.cot_len = 4;
    base.struct_begin = 19;
    base.struct_len = 2;

    for (std::size_t n = 1; n <= 50; ++n) {
        std::vector<SftSample> samples(n, base);
        auto grown = inject_strategy_hiding(samples, 0.1, 77);
        const std::size_t expected = (n + 9) / 10;
        require(grown.size() == n + expected,
                "hiding must add exactly ceil(0.1 * n) clones at n=" + std::to_string(n));
        for (std::size_t i = n; i < grown.size(); ++i) {
            require(grown[i].hidden, "appended clones must be marked hidden");
            require(!grown[i].cot_mask_enabled, "clones must disable the reasoning loss mask");
            require(grown[i].cot_len == 0, "clones must carry an empty think block");
            require(grown[i].target.rfind("<think></think>", 0) == 0,
                    "clone targets must start with an empty think block");
        }
        for (std::size_t i = 0; i < n; ++i) {
            require(grown[i].target == base.target, "source samples must stay untouched");
        }
    }

    auto schema = compile_schema(json{{"classes", {"person"}}}, TaskKind::NER);
    std::vector<CorpusRecord> negatives;
    negatives.reserve(1000);
    for (int i = 0; i < 1000; ++i) {
        negatives.push_back({"neg-" + std::to_string(i), "sentence " + std::to_string(i),
                             schema, CanonicalRecords{}, "bench", "train"});
    }
    // joint 99% binomial band for 100 trials at p=0.4, n=1000
    const std::size_t lower = 340, upper = 460;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const std::size_t kept = subsample_negatives(negatives, 0.4, seed).size();
        require(kept >= lower && kept <= upper,
                "negative keep count " + std::to_string(kept) + " left [340, 460] at seed " +
                    std::to_string(seed));
    }
    require_under(start, 30.0, "hiding and negative subsampling sweep");
}

// ---------------------------------------------------------------------------
// criterion 7: serialization stability and mutation rejection

void criterion_serialization_stability() {
    auto start = std::chrono::steady_clock::now();
    util::Rng rng(707);
    static const std::vector<std::string> spans = {"ada", "bo", "cy", "dee", "eve", "fay"};

    for (int iter = 0; iter < 100; ++iter) {
        const TaskKind task = static_cast<TaskKind>(rng.below(3));
        json raw;
        if (task == TaskKind::NER) {
            json classes = json::array();
            const std::size_t n = 1 + rng.below(5);
            for (std::size_t i = 0; i < n; ++i) {
                classes.push_back("Class" + std::to_string(iter) + "_" + std::to_string(i));
            }
            raw = {{"classes", classes}};
        } else if (task == TaskKind::RE) {
            json relations = json::array();
            const std::size_t n = 1 + rng.below(4);
            for (std::size_t i = 0; i < n; ++i) {
                relations.push_back("rel" + std::to_string(iter) + "_" + std::to_string(i));
            }
            raw = {{"relations", relations}};
        } else {
            json events = json::array();
            const std::size_t n = 1 + rng.below(3);
            for (std::size_t i = 0; i < n; ++i) {
                json roles = json::array();
                const std::size_t n_roles = 1 + rng.below(3);
                for (std::size_t r = 0; r < n_roles; ++r) {
                    roles.push_back("role" + std::to_string(i) + "_" + std::to_string(r));
                }
                events.push_back({{"event", "ev" + std::to_string(iter) + "_" + std::to_string(i)},
                                  {"roles", roles}});
            }
            raw = {{"events", events}};
        }

        UnifiedSchema schema = compile_schema(raw, task);
        const std::string schema_once = serialize_schema(schema);
        UnifiedSchema parsed = parse_schema(schema_once);
        require(serialize_schema(parsed) == schema_once,
                "schema must serialize byte-identically after a round trip");
        require(parsed == schema, "parsed schema must equal the original");

        std::vector<ExtractionRecord> raw_records;
        const std::size_t n_records = rng.below(5);
        for (std::size_t i = 0; i < n_records; ++i) {
            const auto& cls = schema.classes()[rng.below(schema.classes().size())];
            if (task == TaskKind::NER) {
                raw_records.push_back(Entity{spans[rng.below(spans.size())], cls.class_id});
            } else if (task == TaskKind::RE) {
                raw_records.push_back(Relation{spans[rng.below(spans.size())], cls.class_id,
                                               spans[rng.below(spans.size())]});
            } else {
                Event ev;
                ev.class_id = cls.class_id;
                ev.trigger = spans[rng.below(spans.size())];
                const std::size_t n_args = rng.below(3);
                for (std::size_t a = 0; a < n_args; ++a) {
                    ev.arguments.push_back({cls.arguments[rng.below(cls.arguments.size())],
                                            spans[rng.below(spans.size())]});
                }
                raw_records.push_back(std::move(ev));
            }
        }
        CanonicalRecords records = canonicalize(raw_records, schema);
        require(validate_output(records, schema).valid(), "generated records must validate");

        const std::string once = serialize_records(records);
        std::vector<ExtractionRecord> reparsed;
        for (const auto& item : json::parse(once)) {
            reparsed.push_back(record_from_json(item));
        }
        require(serialize_records(CanonicalRecords::adopt(std::move(reparsed))) == once,
                "records must serialize byte-identically after a round trip");

        for (std::size_t i = 0; i < records.items().size(); ++i) {
            std::vector<ExtractionRecord> mutated = records.items();
            auto& victim = mutated[i];
            if (auto* e = std::get_if<Entity>(&victim)) {
                e->class_id = "zz-unknown";
            } else if (auto* r = std::get_if<Relation>(&victim)) {
                r->relation = "zz-unknown";
            } else {
                auto& ev = std::get<Event>(victim);
                if (!ev.arguments.empty() && rng.below(2) == 0) {
                    ev.arguments[0].role = "zz-unknown";
                } else {
                    ev.class_id = "zz-unknown";
                }
            }
            require(!validate_output(CanonicalRecords::adopt(std::move(mutated)), schema).valid(),
                    "an off-schema mutation must be rejected");
        }
    }
    require_under(start, 30.0, "serialization stability sweep");
}

// ---------------------------------------------------------------------------
// criterion 8: the CLI pipeline end to end

void require_format(const std::filesystem::path& path, const char* format) {
    require(std::filesystem::exists(path), "missing artifact " + path.string());
    JsonlReader reader(path);
    require(reader.header().has_value(), path.string() + " lacks a header");
    require((*reader.header())["format"] == format,
            path.string() + " carries an unexpected format tag");
}

void criterion_cli_pipeline() {
    auto start = std::chrono::steady_clock::now();
    auto dir = scratch_dir("cli");
    const std::string uiekit = std::string("\"") + UIEKIT_BIN + "\" --seed 7";
    const std::string mock = " --mock \"" + (fixtures_dir() / "mock.json").string() + "\"";

    auto run = [&](const std::string& args, const std::string& log_name) {
        const std::string log = (dir / log_name).string();
        const std::string command = uiekit + args + " > \"" + log + "\" 2>&1";
        int status = std::system(command.c_str());
        require(status == 0, "command failed: uiekit" + args + " (see " + log + ")");
    };

    const auto corpus = dir / "corpus.jsonl";
    const auto reasoning = dir / "reasoning.jsonl";
    const auto histogram = dir / "histogram.json";
    const auto sft = dir / "sft.jsonl";
    const auto sft_route = dir / "sft_route.jsonl";
    const auto rl_route = dir / "rl_route.jsonl";
    const auto dynamics = dir / "dynamics.jsonl";
    const auto batches = dir / "batches.jsonl";
    const auto metrics = dir / "metrics.jsonl";
    const auto report = dir / "report.txt";

    run(" curate --in \"" + (fixtures_dir() / "mini_corpus.jsonl").string() + "\" --out \"" +
            corpus.string() + "\"",
        "curate.log");
    run(mock + " build-reasoning --corpus \"" + corpus.string() + "\" --out \"" +
            reasoning.string() + "\" --histogram \"" + histogram.string() + "\"",
        "build.log");
    run(" render-sft --reasoning \"" + reasoning.string() + "\" --out \"" + sft.string() + "\"",
        "render.log");
    run(" route --reasoning \"" + reasoning.string() + "\" --sft-out \"" + sft_route.string() +
            "\" --rl-out \"" + rl_route.string() + "\"",
        "route.log");
    run(" grpo sim --rl \"" + rl_route.string() + "\" --steps 200 --out-dynamics \"" +
            dynamics.string() + "\" --out-batches \"" + batches.string() + "\"",
        "sim.log");
    run(" score --pred \"" + reasoning.string() + "\" --gold \"" + corpus.string() +
            "\" --out \"" + metrics.string() + "\"",
        "score.log");

    const std::string report_cmd = uiekit + " report --in \"" + metrics.string() + "\" > \"" +
                                   report.string() + "\" 2>&1";
    require(std::system(report_cmd.c_str()) == 0, "report rendering failed");

    require_format(corpus, formats::kCorpus);
    require_format(reasoning, formats::kReasoning);
    require_format(sft, formats::kSft);
    require_format(sft_route, formats::kReasoning);
    require_format(rl_route, formats::kReasoning);
    require_format(dynamics, formats::kDynamics);
    require_format(batches, formats::kBatches);
    require_format(metrics, formats::kMetrics);
    require(std::filesystem::exists(histogram), "missing level histogram");

    const std::string report_text = util::read_file(report);
    require(report_text.find("NER") != std::string::npos, "report must list the NER row");
    require(report_text.find("EE") != std::string::npos, "report must list the EE rows");
    require(report_text.find("trigger") != std::string::npos &&
                report_text.find("argument") != std::string::npos,
            "report must split EE into trigger and argument rows");

    std::size_t dynamics_rows = 0;
    JsonlReader reader(dynamics);
    while (reader.next()) ++dynamics_rows;
    require(dynamics_rows == 200, "the simulation must log 200 steps");

    require_under(start, 120.0, "CLI pipeline run");
}

} // namespace

int main() {
    struct Criterion {
        int number;
        const char* summary;
        std::function<void()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "match counting agrees with a brute-force oracle and the hand micro-F1 formula",
         criterion_scorer_oracle},
        {2, "reward identities and ranges hold over 10000 randomized cases",
         criterion_reward_properties},
        {3, "strategy builds emit 15 raw strategies, level-exact routing and identical reruns",
         criterion_strategy_pipeline},
        {4, "tf-idf cosines match the hand oracle and representative picks are extremal",
         criterion_embedding_oracle},
        {5, "advantages are centered with unit variance and the bandit loop climbs",
         criterion_advantages_and_bandit},
        {6, "hiding adds exact clone counts and negative subsampling stays in bounds",
         criterion_hiding_and_negatives},
        {7, "schemas and records round trip byte-identically and mutations are rejected",
         criterion_serialization_stability},
        {8, "the CLI pipeline runs end to end on the bundled corpus",
         criterion_cli_pipeline},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        auto start = std::chrono::steady_clock::now();
        try {
            criterion.run();
            std::printf("PASS criterion %d: %s (%.2fs)\n", criterion.number, criterion.summary,
                        seconds_since(start));
        } catch (const std::exception& e) {
            ++failures;
            std::printf("FAIL criterion %d: %s (%s)\n", criterion.number, criterion.summary,
                        e.what());
        }
        std::fflush(stdout);
    }
    if (failures > 0) {
        std::printf("%d of %zu criteria failed\n", failures, criteria.size());
    } else {
        std::printf("all %zu criteria passed\n", criteria.size());
    }
    return failures;
}
