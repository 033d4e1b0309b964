#pragma once

#include "uie/schema.hpp"

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

namespace uie {

struct Entity {
    std::string mention;
    std::string class_id;
    bool operator==(const Entity&) const = default;
};

struct Relation {
    std::string subject;
    std::string relation;
    std::string object;
    bool operator==(const Relation&) const = default;
};

struct EventArg {
    std::string role;
    std::string span;
    bool operator==(const EventArg&) const = default;
};

struct Event {
    std::string class_id;
    std::string trigger;
    std::vector<EventArg> arguments;
    bool operator==(const Event&) const = default;
};

using ExtractionRecord = std::variant<Entity, Relation, Event>;

/// Fixed total order over records: entities < relations < events, then
/// lexicographic on fields. Canonical sets are sorted by this order.
bool record_less(const ExtractionRecord& a, const ExtractionRecord& b);

/// Wire shapes: Entity {"type","mention"}; Relation
/// {"relation","subject","object"}; Event {"event","trigger","arguments":
/// {role: span, ...}} with an array value when one role binds several spans.
nlohmann::json record_to_json(const ExtractionRecord& record);
ExtractionRecord record_from_json(const nlohmann::json& value);

/// Deduplicated, whitespace-normalized, schema-cased, sorted record set.
/// The canonical form under which predictions and gold labels compare.
class CanonicalRecords {
public:
    CanonicalRecords() = default;

    const std::vector<ExtractionRecord>& items() const { return items_; }
    bool empty() const { return items_.empty(); }
    std::size_t size() const { return items_.size(); }

    bool operator==(const CanonicalRecords&) const = default;

    /// Adopts records that are already normalized; sorts and dedups.
    static CanonicalRecords adopt(std::vector<ExtractionRecord> records);

private:
    std::vector<ExtractionRecord> items_;
};

/// Normalize spans (trim + collapse whitespace), rewrite class and role
/// labels case-insensitively to schema casing, drop records with empty
/// spans, deduplicate and sort. Idempotent.
CanonicalRecords canonicalize(const std::vector<ExtractionRecord>& records,
                              const UnifiedSchema& schema);

/// Set equality of canonical records: the y = y* test.
bool records_match(const CanonicalRecords& pred, const CanonicalRecords& gold);

/// Canonical JSON array text for a record list (byte-stable).
std::string serialize_records(const std::vector<ExtractionRecord>& records);
std::string serialize_records(const CanonicalRecords& records);
nlohmann::json records_to_json(const std::vector<ExtractionRecord>& records);

/// Structural check of records against a schema. Failures are report
/// entries, never exceptions.
ValidationReport validate_output(const std::vector<ExtractionRecord>& records,
                                 const UnifiedSchema& schema);
ValidationReport validate_output(const CanonicalRecords& records, const UnifiedSchema& schema);

struct SplitResult {
    std::string cot;
    std::string answer;
};

/// Split a completion on the <think>...</think> markers. Both markers in
/// order: cot is the enclosed content, answer the suffix. No markers at
/// all: empty cot, whole text as answer. Anything else throws
/// UnbalancedMarkers.
SplitResult split_reasoning(std::string_view completion);

struct ParseResult {
    std::vector<ExtractionRecord> records;
    std::size_t dropped = 0; // malformed or schema-invalid entries
};

/// Strict JSON parse of an answer after one repair pass (strip a code
/// fence, cut prose around the outermost JSON value). Records failing
/// shape or schema validation are dropped and counted. Throws Unparseable
/// when no JSON value is recoverable.
ParseResult parse_model_output(std::string_view answer, const UnifiedSchema& schema);

struct ReasoningOutput {
    std::string cot;
    std::string answer;
    CanonicalRecords records;
    std::size_t dropped = 0;
};

/// split_reasoning + parse_model_output + canonicalize in one step.
ReasoningOutput parse_completion(std::string_view completion, const UnifiedSchema& schema);

struct LabeledExample {
    std::string x;
    UnifiedSchema schema;
    CanonicalRecords gold;
};

} // namespace uie
