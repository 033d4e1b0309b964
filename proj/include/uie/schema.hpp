#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace uie {

enum class TaskKind { NER, RE, EE };

enum class EventSubtask { Trigger, Argument };

const char* to_string(TaskKind task);
const char* to_string(EventSubtask subtask);
TaskKind task_from_string(std::string_view s);
EventSubtask subtask_from_string(std::string_view s);

/// One extraction target: a class identifier, its argument roles (empty for
/// NER, exactly [subject, object] for RE) and a free-text description.
struct SchemaClass {
    std::string class_id;
    std::vector<std::string> arguments;
    std::string descriptor;

    bool operator==(const SchemaClass&) const = default;
};

/// Canonical task description shared by NER, RE and EE. Immutable after
/// construction; the constructor enforces all structural invariants.
class UnifiedSchema {
public:
    UnifiedSchema(TaskKind task, std::vector<SchemaClass> classes, std::string source_name);

    TaskKind task() const { return task_; }
    const std::vector<SchemaClass>& classes() const { return classes_; }
    const std::string& source_name() const { return source_name_; }

    /// Case-insensitive class lookup; nullptr when absent.
    const SchemaClass* find_class(std::string_view label) const;

    /// Case-insensitive role lookup within a class; nullptr when absent.
    static const std::string* find_role(const SchemaClass& cls, std::string_view role);

    /// True when the label equals (case-insensitively) any class id or any
    /// argument role in the schema.
    bool knows_label(std::string_view label) const;

    bool operator==(const UnifiedSchema&) const = default;

private:
    TaskKind task_;
    std::vector<SchemaClass> classes_;
    std::string source_name_;
};

struct CompileOptions {
    bool allow_empty_event_roles = false;
};

/// Compile a task-specific raw description into the unified form. Accepts
/// already-unified schema JSON unchanged (compilation is idempotent).
///
/// Raw shapes:
///   NER  {"classes": ["PER", {"class": "LOC", "description": "..."}]}
///   RE   {"relations": ["works_for", ...]} (or "classes"); arguments become
///        [subject, object]
///   EE   {"events": [{"event": "attack", "roles": ["attacker"], ...}]}
UnifiedSchema compile_schema(const nlohmann::json& raw, TaskKind task,
                             const CompileOptions& options = {});

/// Canonical byte-stable JSON text: sorted keys, no whitespace, UTF-8
/// passed through unescaped.
std::string serialize_schema(const UnifiedSchema& schema);
nlohmann::json schema_to_json(const UnifiedSchema& schema);

UnifiedSchema parse_schema(std::string_view text);
UnifiedSchema schema_from_json(const nlohmann::json& value);

enum class ValidationReason { UnknownClass, UnknownArgument, WrongArity, EmptySpan };
const char* to_string(ValidationReason reason);

struct ValidationEntry {
    std::size_t record_index;
    ValidationReason reason;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationEntry> entries;
    bool valid() const { return entries.empty(); }
};

} // namespace uie
