#include "uie/schema.hpp"

#include "uie/errors.hpp"
#include "uie/util.hpp"

#include <algorithm>

namespace uie {

const char* to_string(TaskKind task) {
    switch (task) {
    case TaskKind::NER: return "NER";
    case TaskKind::RE: return "RE";
    case TaskKind::EE: return "EE";
    }
    return "NER";
}

const char* to_string(EventSubtask subtask) {
    return subtask == EventSubtask::Trigger ? "trigger" : "argument";
}

TaskKind task_from_string(std::string_view s) {
    if (util::iequals_ascii(s, "NER")) return TaskKind::NER;
    if (util::iequals_ascii(s, "RE")) return TaskKind::RE;
    if (util::iequals_ascii(s, "EE")) return TaskKind::EE;
    throw Error(ErrorCode::SchemaViolation, "unknown task kind '" + std::string(s) + "'");
}

EventSubtask subtask_from_string(std::string_view s) {
    if (util::iequals_ascii(s, "trigger")) return EventSubtask::Trigger;
    if (util::iequals_ascii(s, "argument")) return EventSubtask::Argument;
    throw Error(ErrorCode::SchemaViolation, "unknown EE subtask '" + std::string(s) + "'");
}

UnifiedSchema::UnifiedSchema(TaskKind task, std::vector<SchemaClass> classes,
                             std::string source_name)
    : task_(task), classes_(std::move(classes)), source_name_(std::move(source_name)) {
    if (classes_.empty()) {
        throw Error(ErrorCode::EmptySchema, "schema '" + source_name_ + "' has no classes");
    }
    for (std::size_t i = 0; i < classes_.size(); ++i) {
        const SchemaClass& cls = classes_[i];
        if (cls.class_id.empty()) {
            throw Error(ErrorCode::SchemaViolation, "class " + std::to_string(i) + " has empty id");
        }
        for (std::size_t j = 0; j < i; ++j) {
            if (util::iequals_ascii(classes_[j].class_id, cls.class_id)) {
                throw Error(ErrorCode::DuplicateClass, "duplicate class '" + cls.class_id + "'");
            }
        }
        for (std::size_t a = 0; a < cls.arguments.size(); ++a) {
            if (cls.arguments[a].empty()) {
                throw Error(ErrorCode::SchemaViolation,
                            "class '" + cls.class_id + "' has an empty argument name");
            }
            for (std::size_t b = 0; b < a; ++b) {
                if (util::iequals_ascii(cls.arguments[b], cls.arguments[a])) {
                    throw Error(ErrorCode::SchemaViolation,
                                "class '" + cls.class_id + "' repeats argument '" +
                                    cls.arguments[a] + "'");
                }
            }
        }
        if (task_ == TaskKind::NER && !cls.arguments.empty()) {
            throw Error(ErrorCode::SchemaViolation,
                        "NER class '" + cls.class_id + "' must not declare arguments");
        }
        if (task_ == TaskKind::RE &&
            (cls.arguments.size() != 2 || cls.arguments[0] != "subject" ||
             cls.arguments[1] != "object")) {
            throw Error(ErrorCode::SchemaViolation,
                        "RE class '" + cls.class_id + "' must have arguments [subject, object]");
        }
    }
}

const SchemaClass* UnifiedSchema::find_class(std::string_view label) const {
    for (const SchemaClass& cls : classes_) {
        if (util::iequals_ascii(cls.class_id, label)) return &cls;
    }
    return nullptr;
}

const std::string* UnifiedSchema::find_role(const SchemaClass& cls, std::string_view role) {
    for (const std::string& r : cls.arguments) {
        if (util::iequals_ascii(r, role)) return &r;
    }
    return nullptr;
}

bool UnifiedSchema::knows_label(std::string_view label) const {
    for (const SchemaClass& cls : classes_) {
        if (util::iequals_ascii(cls.class_id, label)) return true;
        for (const std::string& role : cls.arguments) {
            if (util::iequals_ascii(role, label)) return true;
        }
    }
    return false;
}

namespace {

std::string string_field(const nlohmann::json& obj, const char* key, const char* alt = nullptr) {
    if (obj.contains(key) && obj[key].is_string()) return obj[key].get<std::string>();
    if (alt && obj.contains(alt) && obj[alt].is_string()) return obj[alt].get<std::string>();
    return {};
}

SchemaClass class_from_entry(const nlohmann::json& entry, TaskKind task,
                             const CompileOptions& options) {
    SchemaClass cls;
    if (entry.is_string()) {
        cls.class_id = entry.get<std::string>();
    } else if (entry.is_object()) {
        cls.class_id = string_field(entry, "class", "name");
        if (cls.class_id.empty()) cls.class_id = string_field(entry, "event", "relation");
        cls.descriptor = string_field(entry, "description", "descriptor");
        if (entry.contains("roles") && entry["roles"].is_array()) {
            for (const auto& r : entry["roles"]) cls.arguments.push_back(r.get<std::string>());
        } else if (entry.contains("arguments") && entry["arguments"].is_array()) {
            for (const auto& r : entry["arguments"]) cls.arguments.push_back(r.get<std::string>());
        }
    } else {
        throw Error(ErrorCode::SchemaViolation, "class entry must be a string or object");
    }

    if (task == TaskKind::RE) {
        cls.arguments = {"subject", "object"};
    } else if (task == TaskKind::EE) {
        if (cls.arguments.empty() && !options.allow_empty_event_roles) {
            throw Error(ErrorCode::MissingArguments,
                        "event class '" + cls.class_id + "' lists no argument roles");
        }
    } else {
        cls.arguments.clear();
    }
    return cls;
}

bool looks_unified(const nlohmann::json& raw) {
    return raw.is_object() && raw.contains("task") && raw.contains("classes");
}

} // namespace

UnifiedSchema compile_schema(const nlohmann::json& raw, TaskKind task,
                             const CompileOptions& options) {
    if (!raw.is_object() && !raw.is_array()) {
        throw Error(ErrorCode::SchemaViolation, "raw schema must be a JSON object or array");
    }

    if (looks_unified(raw)) {
        UnifiedSchema schema = schema_from_json(raw);
        if (schema.task() != task) {
            throw Error(ErrorCode::SchemaViolation,
                        std::string("unified schema is ") + to_string(schema.task()) +
                            " but task " + to_string(task) + " was requested");
        }
        return schema;
    }

    const nlohmann::json* entries = nullptr;
    if (raw.is_array()) {
        entries = &raw;
    } else {
        for (const char* key : {"classes", "relations", "events", "entities", "types"}) {
            if (raw.contains(key) && raw[key].is_array()) {
                entries = &raw[key];
                break;
            }
        }
    }
    if (entries == nullptr || entries->empty()) {
        throw Error(ErrorCode::EmptySchema, "raw schema lists no classes");
    }

    std::vector<SchemaClass> classes;
    classes.reserve(entries->size());
    for (const auto& entry : *entries) {
        classes.push_back(class_from_entry(entry, task, options));
    }
    std::string source = raw.is_object() ? string_field(raw, "source_name", "source") : "";
    return UnifiedSchema(task, std::move(classes), std::move(source));
}

nlohmann::json schema_to_json(const UnifiedSchema& schema) {
    // nlohmann::json keeps object keys sorted, which is exactly the
    // canonical ordering the serialization contract requires.
    nlohmann::json classes = nlohmann::json::array();
    for (const SchemaClass& cls : schema.classes()) {
        classes.push_back({{"class", cls.class_id},
                           {"arguments", cls.arguments},
                           {"description", cls.descriptor}});
    }
    return {{"task", to_string(schema.task())},
            {"classes", std::move(classes)},
            {"source_name", schema.source_name()}};
}

std::string serialize_schema(const UnifiedSchema& schema) {
    return schema_to_json(schema).dump();
}

UnifiedSchema schema_from_json(const nlohmann::json& value) {
    if (!value.is_object()) {
        throw Error(ErrorCode::SchemaViolation, "schema must be a JSON object");
    }
    static const char* known[] = {"task", "classes", "source_name"};
    for (auto it = value.begin(); it != value.end(); ++it) {
        if (std::find_if(std::begin(known), std::end(known),
                         [&](const char* k) { return it.key() == k; }) == std::end(known)) {
            throw Error(ErrorCode::SchemaViolation, "unknown schema field '" + it.key() + "'");
        }
    }
    if (!value.contains("task") || !value["task"].is_string()) {
        throw Error(ErrorCode::SchemaViolation, "schema is missing string field 'task'");
    }
    if (!value.contains("classes") || !value["classes"].is_array()) {
        throw Error(ErrorCode::SchemaViolation, "schema is missing array field 'classes'");
    }
    TaskKind task = task_from_string(value["task"].get<std::string>());

    std::vector<SchemaClass> classes;
    for (const auto& entry : value["classes"]) {
        if (!entry.is_object()) {
            throw Error(ErrorCode::SchemaViolation, "class entry must be an object");
        }
        static const char* class_keys[] = {"class", "arguments", "description"};
        for (auto it = entry.begin(); it != entry.end(); ++it) {
            if (std::find_if(std::begin(class_keys), std::end(class_keys), [&](const char* k) {
                    return it.key() == k;
                }) == std::end(class_keys)) {
                throw Error(ErrorCode::SchemaViolation,
                            "unknown class field '" + it.key() + "'");
            }
        }
        SchemaClass cls;
        cls.class_id = string_field(entry, "class");
        cls.descriptor = string_field(entry, "description");
        if (entry.contains("arguments")) {
            if (!entry["arguments"].is_array()) {
                throw Error(ErrorCode::SchemaViolation, "class 'arguments' must be an array");
            }
            for (const auto& r : entry["arguments"]) {
                if (!r.is_string()) {
                    throw Error(ErrorCode::SchemaViolation, "argument names must be strings");
                }
                cls.arguments.push_back(r.get<std::string>());
            }
        }
        classes.push_back(std::move(cls));
    }

    std::string source;
    if (value.contains("source_name")) {
        if (!value["source_name"].is_string()) {
            throw Error(ErrorCode::SchemaViolation, "'source_name' must be a string");
        }
        source = value["source_name"].get<std::string>();
    }
    return UnifiedSchema(task, std::move(classes), std::move(source));
}

UnifiedSchema parse_schema(std::string_view text) {
    auto value = nlohmann::json::parse(text, nullptr, false);
    if (value.is_discarded()) {
        throw Error(ErrorCode::MalformedJson, "schema text is not valid JSON");
    }
    return schema_from_json(value);
}

const char* to_string(ValidationReason reason) {
    switch (reason) {
    case ValidationReason::UnknownClass: return "UnknownClass";
    case ValidationReason::UnknownArgument: return "UnknownArgument";
    case ValidationReason::WrongArity: return "WrongArity";
    case ValidationReason::EmptySpan: return "EmptySpan";
    }
    return "UnknownClass";
}

} // namespace uie
