#pragma once

#include "uie/jsonl.hpp"
#include "uie/records.hpp"
#include "uie/schema.hpp"
#include "uie/strategy.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace uie {

namespace formats {
inline constexpr const char* kCorpus = "uiekit.corpus.v1";
inline constexpr const char* kReasoning = "uiekit.reasoning.v1";
inline constexpr const char* kSft = "uiekit.sft.v1";
inline constexpr const char* kPredictions = "uiekit.predictions.v1";
inline constexpr const char* kDynamics = "uiekit.dynamics.v1";
inline constexpr const char* kBatches = "uiekit.batches.v1";
inline constexpr const char* kMetrics = "uiekit.metrics.v1";
} // namespace formats

struct CorpusRecord {
    std::string id;
    std::string x;
    UnifiedSchema schema;
    CanonicalRecords gold;
    std::string source;
    std::string split;

    LabeledExample to_example() const { return {x, schema, gold}; }
};

nlohmann::json corpus_record_to_json(const CorpusRecord& record);
CorpusRecord corpus_record_from_json(const nlohmann::json& value);

struct CurationRules {
    std::string adapter = "native";
    std::string source = "corpus"; // stamped on records lacking one
    std::string split = "train";
    bool dedup = true;
};

struct CurationStats {
    std::size_t total_in = 0;
    std::size_t kept = 0;
    std::size_t malformed = 0;    // lines an adapter could not shape
    std::size_t empty_input = 0;   // x blank after normalization
    std::size_t invalid_gold = 0;  // gold fails schema validation
    std::size_t duplicates = 0;    // same (x, gold) seen before
    std::size_t duplicate_ids = 0;

    nlohmann::json to_json() const;
};

/// Shape raw source lines into schema-validated corpus records.
/// Registered adapters: "native" (corpus line shape with raw or unified
/// schema) and "flat-ner" (text + typed entity list; the schema is the
/// union of observed types). Unknown names throw UnknownAdapter.
std::vector<CorpusRecord> curate_corpus(const std::vector<nlohmann::json>& raw_lines,
                                        const CurationRules& rules,
                                        CurationStats* stats = nullptr);

std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, const std::vector<CorpusRecord>& records,
                  const nlohmann::json& header_extra = nlohmann::json::object());

/// Keep every record with non-empty gold; keep empty-gold records
/// independently with probability keep_ratio.
std::vector<CorpusRecord> subsample_negatives(const std::vector<CorpusRecord>& records,
                                              double keep_ratio, std::uint64_t seed);

struct ReasoningInstance {
    CorpusRecord record;
    std::vector<ReasoningTrace> traces; // correct traces only
    int level = 0;
    Route route = Route::Rl;
    InstanceDiagnostics diagnostics;
};

nlohmann::json reasoning_instance_to_json(const ReasoningInstance& instance);
ReasoningInstance reasoning_instance_from_json(const nlohmann::json& value);

/// Levels per task, histogram[task][k] = number of instances at level k.
struct LevelHistogram {
    std::map<std::string, std::vector<std::size_t>> by_task;

    void add(TaskKind task, int level, std::size_t max_level);
    nlohmann::json to_json() const;
};

struct ReasoningBuildResult {
    std::vector<ReasoningInstance> instances;
    LevelHistogram histogram;
    std::size_t incomplete = 0; // gateway gave out; rerun resumes via cache
};

/// Algorithm pass over a corpus: one build_instance per record, seeded per
/// id so ordering does not matter.
ReasoningBuildResult build_reasoning(const std::vector<CorpusRecord>& corpus,
                                     const StrategyForge& forge);

void write_reasoning(const std::filesystem::path& path,
                     const std::vector<ReasoningInstance>& instances,
                     const nlohmann::json& header_extra = nlohmann::json::object());
std::vector<ReasoningInstance> load_reasoning(const std::filesystem::path& path);

struct SftSample {
    std::string instance_id;
    std::string prompt;
    std::string target; // "<think>" + cot + "</think>" + answer
    std::size_t cot_begin = 0;
    std::size_t cot_len = 0;
    std::size_t struct_begin = 0;
    std::size_t struct_len = 0;
    bool cot_mask_enabled = true;
    bool hidden = false;
};

nlohmann::json sft_sample_to_json(const SftSample& sample);

/// One sample per kept trace. Every instance must be SFT-routed.
std::vector<SftSample> render_sft(const std::vector<ReasoningInstance>& instances);

/// Append ceil(fraction * n) clones whose think block is empty and whose
/// CoT loss mask is disabled; source samples are untouched.
std::vector<SftSample> inject_strategy_hiding(std::vector<SftSample> samples, double fraction,
                                              std::uint64_t seed);

void write_sft(const std::filesystem::path& path, const std::vector<SftSample>& samples,
               const nlohmann::json& header_extra = nlohmann::json::object());

struct RoutedInstances {
    std::vector<ReasoningInstance> sft;
    std::vector<ReasoningInstance> rl;
};

/// Partition by level >= threshold, updating each instance's route tag.
RoutedInstances route_instances(std::vector<ReasoningInstance> instances, int threshold);

} // namespace uie
