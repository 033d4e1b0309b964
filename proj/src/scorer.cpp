#include "uie/scorer.hpp"

#include "uie/errors.hpp"
#include "uie/jsonl.hpp"

#include <algorithm>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

namespace uie {

namespace {

std::vector<std::string> match_units(const CanonicalRecords& records, TaskKind task,
                                     std::optional<EventSubtask> subtask) {
    std::vector<std::string> units;
    for (const auto& record : records.items()) {
        switch (task) {
        case TaskKind::NER:
            if (const auto* e = std::get_if<Entity>(&record)) {
                units.push_back(e->class_id + '\x1f' + e->mention);
            }
            break;
        case TaskKind::RE:
            if (const auto* r = std::get_if<Relation>(&record)) {
                units.push_back(r->subject + '\x1f' + r->relation + '\x1f' + r->object);
            }
            break;
        case TaskKind::EE:
            if (const auto* ev = std::get_if<Event>(&record)) {
                if (*subtask == EventSubtask::Trigger) {
                    units.push_back(ev->class_id + '\x1f' + ev->trigger);
                } else {
                    for (const auto& arg : ev->arguments) {
                        units.push_back(ev->class_id + '\x1f' + arg.role + '\x1f' + arg.span);
                    }
                }
            }
            break;
        }
    }
    return units;
}

} // namespace

MatchCounts count_matches(const CanonicalRecords& pred, const CanonicalRecords& gold,
                          TaskKind task, std::optional<EventSubtask> subtask) {
    if (task == TaskKind::EE && !subtask) {
        throw Error(ErrorCode::SubtaskRequired, "event scoring needs trigger or argument");
    }
    const auto pred_units = match_units(pred, task, subtask);
    const auto gold_units = match_units(gold, task, subtask);

    std::map<std::string, std::size_t> remaining;
    for (const auto& unit : gold_units) ++remaining[unit];
    MatchCounts counts;
    for (const auto& unit : pred_units) {
        if (auto it = remaining.find(unit); it != remaining.end() && it->second > 0) {
            --it->second;
            ++counts.tp;
        }
    }
    counts.fp = pred_units.size() - counts.tp;
    counts.fn = gold_units.size() - counts.tp;
    return counts;
}

MetricRow micro_f1(const std::vector<MatchCounts>& counts) {
    MatchCounts pooled;
    for (const auto& c : counts) pooled += c;
    MetricRow row;
    row.tp = pooled.tp;
    row.fp = pooled.fp;
    row.fn = pooled.fn;
    const std::size_t pred_total = pooled.tp + pooled.fp;
    const std::size_t gold_total = pooled.tp + pooled.fn;
    row.degenerate = pred_total == 0 || gold_total == 0;
    row.precision = pred_total ? static_cast<double>(pooled.tp) / static_cast<double>(pred_total)
                               : 0.0;
    row.recall = gold_total ? static_cast<double>(pooled.tp) / static_cast<double>(gold_total)
                            : 0.0;
    const double pr = row.precision + row.recall;
    if (pr > 0.0) {
        row.f1 = 2.0 * row.precision * row.recall / pr;
    } else {
        row.f1 = 0.0;
        row.degenerate = true;
    }
    return row;
}

namespace {

std::string subtask_label(const std::optional<EventSubtask>& subtask) {
    return subtask ? to_string(*subtask) : "-";
}

bool row_less(const MetricRow& a, const MetricRow& b) {
    if (a.dataset != b.dataset) return a.dataset < b.dataset;
    if (a.task != b.task) return static_cast<int>(a.task) < static_cast<int>(b.task);
    return subtask_label(a.subtask) < subtask_label(b.subtask);
}

} // namespace

std::string render_report_text(const std::vector<MetricRow>& rows) {
    std::vector<MetricRow> sorted = rows;
    std::sort(sorted.begin(), sorted.end(), row_less);

    std::size_t name_width = 7; // |"dataset"|
    for (const auto& row : sorted) name_width = std::max(name_width, row.dataset.size());

    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(name_width) + 2) << "dataset"
        << std::setw(6) << "task" << std::setw(10) << "subtask" << std::right << std::setw(8)
        << "P" << std::setw(8) << "R" << std::setw(8) << "F1" << std::setw(7) << "tp"
        << std::setw(7) << "fp" << std::setw(7) << "fn" << "\n";
    out << std::fixed << std::setprecision(4);
    for (const auto& row : sorted) {
        out << std::left << std::setw(static_cast<int>(name_width) + 2) << row.dataset
            << std::setw(6) << to_string(row.task) << std::setw(10) << subtask_label(row.subtask)
            << std::right << std::setw(8) << row.precision << std::setw(8) << row.recall
            << std::setw(8) << row.f1 << std::setw(7) << row.tp << std::setw(7) << row.fp
            << std::setw(7) << row.fn;
        if (row.degenerate) out << "  (degenerate)";
        out << "\n";
    }
    return out.str();
}

nlohmann::json report_to_json(const std::vector<MetricRow>& rows) {
    std::vector<MetricRow> sorted = rows;
    std::sort(sorted.begin(), sorted.end(), row_less);
    nlohmann::json out = nlohmann::json::array();
    for (const auto& row : sorted) {
        out.push_back({
            {"dataset", row.dataset},
            {"task", to_string(row.task)},
            {"subtask", subtask_label(row.subtask)},
            {"precision", row.precision},
            {"recall", row.recall},
            {"f1", row.f1},
            {"tp", row.tp},
            {"fp", row.fp},
            {"fn", row.fn},
            {"degenerate", row.degenerate},
        });
    }
    return out;
}

MetricRow metric_row_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw Error(ErrorCode::MalformedJson, "metric row must be an object");
    MetricRow row;
    try {
        row.dataset = doc.at("dataset").get<std::string>();
        row.task = task_from_string(doc.at("task").get<std::string>());
        const std::string subtask = doc.at("subtask").get<std::string>();
        if (subtask != "-") row.subtask = subtask_from_string(subtask);
        row.precision = doc.at("precision").get<double>();
        row.recall = doc.at("recall").get<double>();
        row.f1 = doc.at("f1").get<double>();
        row.tp = doc.at("tp").get<std::size_t>();
        row.fp = doc.at("fp").get<std::size_t>();
        row.fn = doc.at("fn").get<std::size_t>();
        row.degenerate = doc.at("degenerate").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::MalformedJson, std::string("metric row: ") + e.what());
    }
    return row;
}

namespace {

std::map<std::string, CanonicalRecords> load_predictions(const std::filesystem::path& path) {
    JsonlReader reader(path);
    if (!reader.header() || !reader.header()->contains("format")) {
        throw Error(ErrorCode::UsageError, path.string() + " has no format header");
    }
    const std::string format = (*reader.header())["format"].get<std::string>();
    std::map<std::string, CanonicalRecords> out;
    if (format == formats::kPredictions) {
        while (auto line = reader.next()) {
            std::vector<ExtractionRecord> records;
            for (const auto& item : line->at("records")) {
                records.push_back(record_from_json(item));
            }
            out[line->at("id").get<std::string>()] = CanonicalRecords::adopt(std::move(records));
        }
        return out;
    }
    if (format == formats::kReasoning) {
        while (auto line = reader.next()) {
            const auto& traces = line->at("traces");
            std::vector<ExtractionRecord> records;
            if (!traces.empty()) {
                for (const auto& item : traces.front().at("prediction")) {
                    records.push_back(record_from_json(item));
                }
            }
            out[line->at("id").get<std::string>()] = CanonicalRecords::adopt(std::move(records));
        }
        return out;
    }
    throw Error(ErrorCode::UsageError,
                path.string() + " is neither a predictions nor a reasoning file");
}

} // namespace

EvalResult evaluate_files(const std::filesystem::path& pred_path,
                          const std::filesystem::path& gold_path,
                          std::optional<TaskKind> task_filter) {
    const std::vector<CorpusRecord> corpus = load_corpus(gold_path);
    std::map<std::string, CanonicalRecords> predictions = load_predictions(pred_path);

    struct GroupKey {
        std::string dataset;
        TaskKind task;
        std::optional<EventSubtask> subtask;
        bool operator<(const GroupKey& other) const {
            if (dataset != other.dataset) return dataset < other.dataset;
            if (task != other.task) return static_cast<int>(task) < static_cast<int>(other.task);
            return subtask_label(subtask) < subtask_label(other.subtask);
        }
    };
    std::map<GroupKey, std::vector<MatchCounts>> groups;

    EvalResult result;
    std::set<std::string> used_ids;
    for (const auto& record : corpus) {
        if (task_filter && record.schema.task() != *task_filter) continue;
        CanonicalRecords pred;
        if (auto it = predictions.find(record.id); it != predictions.end()) {
            pred = canonicalize(it->second.items(), record.schema);
            used_ids.insert(record.id);
        } else {
            ++result.missing_predictions;
        }
        const TaskKind task = record.schema.task();
        if (task == TaskKind::EE) {
            for (EventSubtask sub : {EventSubtask::Trigger, EventSubtask::Argument}) {
                groups[{record.source, task, sub}].push_back(
                    count_matches(pred, record.gold, task, sub));
            }
        } else {
            groups[{record.source, task, std::nullopt}].push_back(
                count_matches(pred, record.gold, task));
        }
    }
    for (const auto& [id, records] : predictions) {
        if (!used_ids.count(id)) ++result.unmatched_predictions;
    }

    for (const auto& [key, counts] : groups) {
        MetricRow row = micro_f1(counts);
        row.dataset = key.dataset;
        row.task = key.task;
        row.subtask = key.subtask;
        result.rows.push_back(std::move(row));
    }
    return result;
}

} // namespace uie
