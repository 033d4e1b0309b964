#pragma once

#include "uie/dataset.hpp"
#include "uie/records.hpp"
#include "uie/schema.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace uie {

struct MatchCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;

    MatchCounts& operator+=(const MatchCounts& other) {
        tp += other.tp;
        fp += other.fp;
        fn += other.fn;
        return *this;
    }
};

/// Matching units per task: NER (class, mention); RE (subject, relation,
/// object); EE trigger (class, trigger); EE argument (class, role, span).
/// Duplicate units intersect by multiset-min. The subtask is mandatory for
/// EE and ignored otherwise.
MatchCounts count_matches(const CanonicalRecords& pred, const CanonicalRecords& gold,
                          TaskKind task, std::optional<EventSubtask> subtask = std::nullopt);

struct MetricRow {
    std::string dataset;
    TaskKind task = TaskKind::NER;
    std::optional<EventSubtask> subtask;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    bool degenerate = false; // a zero-denominator rule fired
};

/// Pool counts, then precision/recall/F1 with the 0-when-undefined rule.
MetricRow micro_f1(const std::vector<MatchCounts>& counts);

std::string render_report_text(const std::vector<MetricRow>& rows);
nlohmann::json report_to_json(const std::vector<MetricRow>& rows);
MetricRow metric_row_from_json(const nlohmann::json& doc);

struct EvalResult {
    std::vector<MetricRow> rows;
    std::size_t missing_predictions = 0;  // gold ids with no prediction
    std::size_t unmatched_predictions = 0; // prediction ids with no gold
};

/// Score a predictions file against a corpus file, grouped by (source,
/// task); EE sources yield a trigger row and an argument row. Predictions
/// may be a predictions file ({id, records}) or a reasoning file (the
/// first kept trace per instance counts as its prediction). A task filter
/// keeps only matching corpus records.
EvalResult evaluate_files(const std::filesystem::path& pred_path,
                          const std::filesystem::path& gold_path,
                          std::optional<TaskKind> task_filter = std::nullopt);

} // namespace uie
