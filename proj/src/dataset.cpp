#include "uie/dataset.hpp"

#include "uie/errors.hpp"
#include "uie/util.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace uie {

nlohmann::json corpus_record_to_json(const CorpusRecord& record) {
    return {
        {"id", record.id},
        {"x", record.x},
        {"schema", schema_to_json(record.schema)},
        {"gold", records_to_json(record.gold.items())},
        {"source", record.source},
        {"split", record.split},
    };
}

CorpusRecord corpus_record_from_json(const nlohmann::json& value) {
    if (!value.is_object()) {
        throw Error(ErrorCode::MalformedJson, "corpus record must be an object");
    }
    for (const char* key : {"id", "x", "schema", "gold"}) {
        if (!value.contains(key)) {
            throw Error(ErrorCode::MalformedJson,
                        std::string("corpus record is missing \"") + key + "\"");
        }
    }
    UnifiedSchema schema = schema_from_json(value["schema"]);
    std::vector<ExtractionRecord> parsed;
    for (const auto& item : value["gold"]) parsed.push_back(record_from_json(item));
    CanonicalRecords gold = canonicalize(parsed, schema);
    const ValidationReport report = validate_output(gold, schema);
    if (!report.valid()) {
        throw Error(ErrorCode::SchemaViolation,
                    "gold of record \"" + value["id"].get<std::string>() +
                        "\" is invalid: " + report.entries.front().detail);
    }
    return CorpusRecord{value["id"].get<std::string>(), value["x"].get<std::string>(),
                        std::move(schema),              std::move(gold),
                        value.value("source", ""),      value.value("split", "train")};
}

nlohmann::json CurationStats::to_json() const {
    return {
        {"total_in", total_in},       {"kept", kept},
        {"malformed", malformed},     {"empty_input", empty_input},
        {"invalid_gold", invalid_gold}, {"duplicates", duplicates},
        {"duplicate_ids", duplicate_ids},
    };
}

namespace {

struct ShapedRecord {
    std::string id; // may be empty, assigned later
    std::string x;
    UnifiedSchema schema;
    std::vector<ExtractionRecord> gold;
    std::string source;
    std::string split;
};

std::vector<ShapedRecord> shape_native(const std::vector<nlohmann::json>& raw_lines,
                                       const CurationRules& rules, CurationStats& stats) {
    std::vector<ShapedRecord> out;
    for (const auto& line : raw_lines) {
        try {
            if (!line.is_object() || !line.contains("x") || !line["x"].is_string() ||
                !line.contains("task") || !line.contains("schema") || !line.contains("gold") ||
                !line["gold"].is_array()) {
                ++stats.malformed;
                continue;
            }
            const TaskKind task = task_from_string(line["task"].get<std::string>());
            UnifiedSchema schema = compile_schema(line["schema"], task);
            std::vector<ExtractionRecord> gold;
            for (const auto& item : line["gold"]) gold.push_back(record_from_json(item));
            out.push_back(ShapedRecord{line.value("id", ""), line["x"].get<std::string>(),
                                       std::move(schema), std::move(gold),
                                       line.value("source", rules.source),
                                       line.value("split", rules.split)});
        } catch (const Error&) {
            ++stats.malformed;
        }
    }
    return out;
}

std::vector<ShapedRecord> shape_flat_ner(const std::vector<nlohmann::json>& raw_lines,
                                         const CurationRules& rules, CurationStats& stats) {
    std::set<std::string> types;
    for (const auto& line : raw_lines) {
        if (!line.is_object() || !line.contains("entities")) continue;
        for (const auto& ent : line["entities"]) {
            if (ent.is_object() && ent.contains("type") && ent["type"].is_string()) {
                types.insert(ent["type"].get<std::string>());
            }
        }
    }
    nlohmann::json classes = nlohmann::json::array();
    for (const auto& t : types) classes.push_back(t);
    UnifiedSchema schema =
        compile_schema(nlohmann::json{{"classes", classes}}, TaskKind::NER);

    std::vector<ShapedRecord> out;
    for (const auto& line : raw_lines) {
        try {
            if (!line.is_object() || !line.contains("text") || !line["text"].is_string()) {
                ++stats.malformed;
                continue;
            }
            std::vector<ExtractionRecord> gold;
            if (line.contains("entities")) {
                for (const auto& ent : line["entities"]) gold.push_back(record_from_json(ent));
            }
            out.push_back(ShapedRecord{"", line["text"].get<std::string>(), schema,
                                       std::move(gold), rules.source, rules.split});
        } catch (const Error&) {
            ++stats.malformed;
        }
    }
    return out;
}

} // namespace

std::vector<CorpusRecord> curate_corpus(const std::vector<nlohmann::json>& raw_lines,
                                        const CurationRules& rules, CurationStats* stats_out) {
    CurationStats stats;
    stats.total_in = raw_lines.size();

    std::vector<ShapedRecord> shaped;
    if (rules.adapter == "native") {
        shaped = shape_native(raw_lines, rules, stats);
    } else if (rules.adapter == "flat-ner") {
        shaped = shape_flat_ner(raw_lines, rules, stats);
    } else {
        throw Error(ErrorCode::UnknownAdapter, "no dataset adapter named \"" + rules.adapter + "\"");
    }

    std::vector<CorpusRecord> out;
    std::set<std::string> dedup_keys;
    std::set<std::string> seen_ids;
    std::size_t auto_id = 0;
    for (auto& rec : shaped) {
        if (util::normalize_ws(rec.x).empty()) {
            ++stats.empty_input;
            continue;
        }
        CanonicalRecords gold = canonicalize(rec.gold, rec.schema);
        if (!validate_output(gold, rec.schema).valid()) {
            ++stats.invalid_gold;
            continue;
        }
        if (rules.dedup) {
            std::string key = util::normalize_ws(rec.x);
            key += '\x1f';
            key += serialize_records(gold);
            if (!dedup_keys.insert(std::move(key)).second) {
                ++stats.duplicates;
                continue;
            }
        }
        std::string id = rec.id;
        if (id.empty()) {
            id = rec.source + "-" + std::to_string(auto_id);
        }
        ++auto_id;
        if (!seen_ids.insert(id).second) {
            ++stats.duplicate_ids;
            continue;
        }
        out.push_back(CorpusRecord{std::move(id), std::move(rec.x), std::move(rec.schema),
                                   std::move(gold), std::move(rec.source), std::move(rec.split)});
    }
    stats.kept = out.size();
    if (stats_out) *stats_out = stats;
    return out;
}

namespace {

void require_format(const JsonlReader& reader, const char* format,
                    const std::filesystem::path& path) {
    if (!reader.header() || !reader.header()->contains("format") ||
        (*reader.header())["format"] != format) {
        throw Error(ErrorCode::UsageError,
                    path.string() + " is not a " + format + " file");
    }
}

} // namespace

std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path) {
    JsonlReader reader(path);
    require_format(reader, formats::kCorpus, path);
    std::vector<CorpusRecord> out;
    std::set<std::string> ids;
    while (auto line = reader.next()) {
        out.push_back(corpus_record_from_json(*line));
        if (!ids.insert(out.back().id).second) {
            throw Error(ErrorCode::MalformedJson,
                        "duplicate corpus id \"" + out.back().id + "\" in " + path.string());
        }
    }
    return out;
}

void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records,
                  const nlohmann::json& header_extra) {
    JsonlWriter writer(path);
    writer.write_header(formats::kCorpus, header_extra);
    for (const auto& record : records) writer.write(corpus_record_to_json(record));
}

std::vector<CorpusRecord> subsample_negatives(const std::vector<CorpusRecord>& records,
                                              double keep_ratio, std::uint64_t seed) {
    if (keep_ratio < 0.0 || keep_ratio > 1.0) {
        throw Error(ErrorCode::InvalidConfig, "keep_ratio must lie in [0, 1]");
    }
    util::Rng rng(seed);
    std::vector<CorpusRecord> out;
    out.reserve(records.size());
    for (const auto& record : records) {
        if (!record.gold.empty() || rng.unit() < keep_ratio) {
            out.push_back(record);
        }
    }
    return out;
}

namespace {

nlohmann::json trace_to_json(const ReasoningTrace& trace) {
    const std::string answer = serialize_records(trace.prediction);
    const std::size_t cot_begin = 7; // |"<think>"|
    const std::size_t struct_begin = cot_begin + trace.cot.size() + 8; // |"</think>"|
    return {
        {"strategy",
         {{"text", trace.strategy.text},
          {"dimension", to_string(trace.strategy.dimension)},
          {"paradigm_id", trace.strategy.paradigm_id}}},
        {"cot", trace.cot},
        {"prediction", records_to_json(trace.prediction.items())},
        {"segments",
         {{"cot", {cot_begin, trace.cot.size()}}, {"struct", {struct_begin, answer.size()}}}},
    };
}

ReasoningTrace trace_from_json(const nlohmann::json& value) {
    ReasoningTrace trace;
    const auto& strat = value.at("strategy");
    trace.strategy.text = strat.at("text").get<std::string>();
    trace.strategy.dimension = dimension_from_string(strat.at("dimension").get<std::string>());
    trace.strategy.paradigm_id = strat.at("paradigm_id").get<int>();
    trace.cot = value.at("cot").get<std::string>();
    std::vector<ExtractionRecord> records;
    for (const auto& item : value.at("prediction")) records.push_back(record_from_json(item));
    trace.prediction = CanonicalRecords::adopt(std::move(records));
    trace.correct = true; // persisted traces are the kept (correct) ones
    return trace;
}

nlohmann::json diagnostics_to_json(const InstanceDiagnostics& diag) {
    return {
        {"raw_strategies", diag.raw_strategies}, {"blank_skipped", diag.blank_skipped},
        {"candidates", diag.candidates},         {"core_deficit", diag.core_deficit},
        {"traces_run", diag.traces_run},         {"parse_failures", diag.parse_failures},
        {"dropped_records", diag.dropped_records},
    };
}

InstanceDiagnostics diagnostics_from_json(const nlohmann::json& value) {
    InstanceDiagnostics diag;
    diag.raw_strategies = value.value("raw_strategies", 0);
    diag.blank_skipped = value.value("blank_skipped", 0);
    diag.candidates = value.value("candidates", 0);
    diag.core_deficit = value.value("core_deficit", false);
    diag.traces_run = value.value("traces_run", 0);
    diag.parse_failures = value.value("parse_failures", 0);
    diag.dropped_records = value.value("dropped_records", std::size_t{0});
    return diag;
}

} // namespace

nlohmann::json reasoning_instance_to_json(const ReasoningInstance& instance) {
    nlohmann::json traces = nlohmann::json::array();
    for (const auto& trace : instance.traces) traces.push_back(trace_to_json(trace));
    nlohmann::json out = corpus_record_to_json(instance.record);
    out["level"] = instance.level;
    out["route"] = to_string(instance.route);
    out["traces"] = std::move(traces);
    out["diagnostics"] = diagnostics_to_json(instance.diagnostics);
    return out;
}

ReasoningInstance reasoning_instance_from_json(const nlohmann::json& value) {
    ReasoningInstance instance{corpus_record_from_json(value), {}, 0, Route::Rl, {}};
    instance.level = value.at("level").get<int>();
    instance.route = route_from_string(value.at("route").get<std::string>());
    for (const auto& trace : value.at("traces")) {
        instance.traces.push_back(trace_from_json(trace));
    }
    if (value.contains("diagnostics")) {
        instance.diagnostics = diagnostics_from_json(value["diagnostics"]);
    }
    if (instance.level != static_cast<int>(instance.traces.size())) {
        throw Error(ErrorCode::MalformedJson,
                    "instance \"" + instance.record.id + "\" level disagrees with kept traces");
    }
    return instance;
}

void LevelHistogram::add(TaskKind task, int level, std::size_t max_level) {
    auto& counts = by_task[to_string(task)];
    if (counts.size() < max_level + 1) counts.resize(max_level + 1, 0);
    if (level >= 0 && static_cast<std::size_t>(level) < counts.size()) {
        ++counts[static_cast<std::size_t>(level)];
    }
}

nlohmann::json LevelHistogram::to_json() const {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [task, counts] : by_task) out[task] = counts;
    return out;
}

ReasoningBuildResult build_reasoning(const std::vector<CorpusRecord>& corpus,
                                     const StrategyForge& forge) {
    ReasoningBuildResult result;
    for (const auto& record : corpus) {
        const std::uint64_t instance_seed = forge.config().seed ^ util::fnv1a64(record.id);
        BuiltInstance built;
        try {
            built = forge.build_instance(record.to_example(), instance_seed);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::GatewayFailure) {
                ++result.incomplete;
                continue;
            }
            throw;
        }
        result.histogram.add(record.schema.task(), built.level, forge.config().core_size);
        result.instances.push_back(ReasoningInstance{record, std::move(built.kept), built.level,
                                                     built.route, built.diagnostics});
    }
    return result;
}

void write_reasoning(const std::filesystem::path& path,
                     const std::vector<ReasoningInstance>& instances,
                     const nlohmann::json& header_extra) {
    JsonlWriter writer(path);
    writer.write_header(formats::kReasoning, header_extra);
    for (const auto& instance : instances) writer.write(reasoning_instance_to_json(instance));
}

std::vector<ReasoningInstance> load_reasoning(const std::filesystem::path& path) {
    JsonlReader reader(path);
    require_format(reader, formats::kReasoning, path);
    std::vector<ReasoningInstance> out;
    while (auto line = reader.next()) {
        out.push_back(reasoning_instance_from_json(*line));
    }
    return out;
}

nlohmann::json sft_sample_to_json(const SftSample& sample) {
    return {
        {"instance_id", sample.instance_id},
        {"prompt", sample.prompt},
        {"target", sample.target},
        {"segments",
         {{"cot", {sample.cot_begin, sample.cot_len}},
          {"struct", {sample.struct_begin, sample.struct_len}}}},
        {"cot_mask_enabled", sample.cot_mask_enabled},
        {"hidden", sample.hidden},
    };
}

static constexpr std::string_view kHideDirective = "Answer directly without showing reasoning.";

std::vector<SftSample> render_sft(const std::vector<ReasoningInstance>& instances) {
    std::vector<SftSample> out;
    for (const auto& instance : instances) {
        if (instance.route != Route::Sft) {
            throw Error(ErrorCode::UsageError,
                        "instance \"" + instance.record.id + "\" is not SFT-routed");
        }
        const std::string instruction =
            render_instruction(instance.record.x, instance.record.schema);
        for (const auto& trace : instance.traces) {
            SftSample sample;
            sample.instance_id = instance.record.id;
            sample.prompt = "Strategy: " + trace.strategy.text + "\n\n" + instruction;
            const std::string answer = serialize_records(trace.prediction);
            sample.target = "<think>" + trace.cot + "</think>" + answer;
            sample.cot_begin = 7;
            sample.cot_len = trace.cot.size();
            sample.struct_begin = sample.cot_begin + sample.cot_len + 8;
            sample.struct_len = answer.size();
            out.push_back(std::move(sample));
        }
    }
    return out;
}

std::vector<SftSample> inject_strategy_hiding(std::vector<SftSample> samples, double fraction,
                                              std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0) {
        throw Error(ErrorCode::InvalidConfig, "hiding fraction must lie in [0, 1]");
    }
    const std::size_t n = samples.size();
    const std::size_t k =
        static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    if (k == 0) return samples;

    util::Rng rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i < k; ++i) {
        std::swap(order[i], order[i + rng.below(n - i)]);
    }
    std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    std::sort(chosen.begin(), chosen.end());

    for (std::size_t index : chosen) {
        const SftSample& src = samples[index];
        SftSample clone;
        clone.instance_id = src.instance_id;
        std::string instruction = src.prompt;
        if (instruction.rfind("Strategy: ", 0) == 0) {
            if (auto sep = instruction.find("\n\n"); sep != std::string::npos) {
                instruction = instruction.substr(sep + 2);
            }
        }
        clone.prompt = std::string(kHideDirective) + "\n\n" + instruction;
        const std::string answer = src.target.substr(src.struct_begin, src.struct_len);
        clone.target = "<think></think>" + answer;
        clone.cot_begin = 7;
        clone.cot_len = 0;
        clone.struct_begin = 15;
        clone.struct_len = answer.size();
        clone.cot_mask_enabled = false;
        clone.hidden = true;
        samples.push_back(std::move(clone));
    }
    return samples;
}

void write_sft(const std::filesystem::path& path, const std::vector<SftSample>& samples,
               const nlohmann::json& header_extra) {
    nlohmann::json extra = {{"lambda_cot", 0.5}, {"lambda_struct", 0.5}};
    for (const auto& [key, value] : header_extra.items()) extra[key] = value;
    JsonlWriter writer(path);
    writer.write_header(formats::kSft, extra);
    for (const auto& sample : samples) writer.write(sft_sample_to_json(sample));
}

RoutedInstances route_instances(std::vector<ReasoningInstance> instances, int threshold) {
    RoutedInstances out;
    for (auto& instance : instances) {
        instance.route = instance.level >= threshold ? Route::Sft : Route::Rl;
        if (instance.route == Route::Sft) {
            out.sft.push_back(std::move(instance));
        } else {
            out.rl.push_back(std::move(instance));
        }
    }
    return out;
}

} // namespace uie
