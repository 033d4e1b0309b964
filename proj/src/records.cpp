#include "uie/records.hpp"

#include "uie/errors.hpp"
#include "uie/util.hpp"

#include <algorithm>
#include <map>
#include <tuple>

namespace uie {

namespace {

int kind_rank(const ExtractionRecord& r) { return static_cast<int>(r.index()); }

std::tuple<const std::string&, const std::string&> entity_key(const Entity& e) {
    return {e.class_id, e.mention};
}

std::tuple<const std::string&, const std::string&, const std::string&>
relation_key(const Relation& r) {
    return {r.relation, r.subject, r.object};
}

bool arg_less(const EventArg& a, const EventArg& b) {
    return std::tie(a.role, a.span) < std::tie(b.role, b.span);
}

bool event_less(const Event& a, const Event& b) {
    if (auto c = a.class_id.compare(b.class_id); c != 0) return c < 0;
    if (auto c = a.trigger.compare(b.trigger); c != 0) return c < 0;
    return std::lexicographical_compare(a.arguments.begin(), a.arguments.end(),
                                        b.arguments.begin(), b.arguments.end(), arg_less);
}

std::string field_string(const nlohmann::json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw Error(ErrorCode::SchemaViolation,
                    std::string("record is missing string field \"") + key + "\"");
    }
    return it->get<std::string>();
}

} // namespace

bool record_less(const ExtractionRecord& a, const ExtractionRecord& b) {
    if (kind_rank(a) != kind_rank(b)) return kind_rank(a) < kind_rank(b);
    if (const auto* ea = std::get_if<Entity>(&a)) {
        return entity_key(*ea) < entity_key(std::get<Entity>(b));
    }
    if (const auto* ra = std::get_if<Relation>(&a)) {
        return relation_key(*ra) < relation_key(std::get<Relation>(b));
    }
    return event_less(std::get<Event>(a), std::get<Event>(b));
}

nlohmann::json record_to_json(const ExtractionRecord& record) {
    nlohmann::json out;
    if (const auto* e = std::get_if<Entity>(&record)) {
        out["type"] = e->class_id;
        out["mention"] = e->mention;
        return out;
    }
    if (const auto* r = std::get_if<Relation>(&record)) {
        out["relation"] = r->relation;
        out["subject"] = r->subject;
        out["object"] = r->object;
        return out;
    }
    const auto& ev = std::get<Event>(record);
    out["event"] = ev.class_id;
    out["trigger"] = ev.trigger;
    nlohmann::json args = nlohmann::json::object();
    std::map<std::string, std::vector<std::string>> by_role;
    for (const auto& arg : ev.arguments) by_role[arg.role].push_back(arg.span);
    for (auto& [role, spans] : by_role) {
        std::sort(spans.begin(), spans.end());
        if (spans.size() == 1) {
            args[role] = spans.front();
        } else {
            args[role] = spans;
        }
    }
    out["arguments"] = std::move(args);
    return out;
}

ExtractionRecord record_from_json(const nlohmann::json& value) {
    if (!value.is_object()) {
        throw Error(ErrorCode::SchemaViolation, "record must be a JSON object");
    }
    if (value.contains("event")) {
        Event ev;
        ev.class_id = field_string(value, "event");
        ev.trigger = field_string(value, "trigger");
        if (auto it = value.find("arguments"); it != value.end()) {
            if (!it->is_object()) {
                throw Error(ErrorCode::SchemaViolation, "event arguments must be an object");
            }
            for (const auto& [role, spans] : it->items()) {
                if (spans.is_string()) {
                    ev.arguments.push_back({role, spans.get<std::string>()});
                } else if (spans.is_array()) {
                    for (const auto& span : spans) {
                        if (!span.is_string()) {
                            throw Error(ErrorCode::SchemaViolation,
                                        "event argument spans must be strings");
                        }
                        ev.arguments.push_back({role, span.get<std::string>()});
                    }
                } else {
                    throw Error(ErrorCode::SchemaViolation,
                                "event argument value must be a string or an array");
                }
            }
        }
        return ev;
    }
    if (value.contains("relation")) {
        Relation r;
        r.relation = field_string(value, "relation");
        r.subject = field_string(value, "subject");
        r.object = field_string(value, "object");
        return r;
    }
    if (value.contains("type") || value.contains("mention")) {
        Entity e;
        e.class_id = field_string(value, "type");
        e.mention = field_string(value, "mention");
        return e;
    }
    throw Error(ErrorCode::SchemaViolation, "record matches no known shape: " + value.dump());
}

CanonicalRecords CanonicalRecords::adopt(std::vector<ExtractionRecord> records) {
    for (auto& record : records) {
        if (auto* ev = std::get_if<Event>(&record)) {
            std::sort(ev->arguments.begin(), ev->arguments.end(), arg_less);
        }
    }
    std::sort(records.begin(), records.end(), record_less);
    records.erase(std::unique(records.begin(), records.end()), records.end());
    CanonicalRecords out;
    out.items_ = std::move(records);
    return out;
}

CanonicalRecords canonicalize(const std::vector<ExtractionRecord>& records,
                              const UnifiedSchema& schema) {
    std::vector<ExtractionRecord> cleaned;
    cleaned.reserve(records.size());
    auto recase_class = [&](const std::string& label) {
        const SchemaClass* cls = schema.find_class(label);
        return cls ? cls->class_id : label;
    };
    for (const auto& record : records) {
        if (const auto* e = std::get_if<Entity>(&record)) {
            Entity out;
            out.mention = util::normalize_ws(e->mention);
            if (out.mention.empty()) continue;
            out.class_id = recase_class(e->class_id);
            cleaned.push_back(std::move(out));
        } else if (const auto* r = std::get_if<Relation>(&record)) {
            Relation out;
            out.subject = util::normalize_ws(r->subject);
            out.object = util::normalize_ws(r->object);
            if (out.subject.empty() || out.object.empty()) continue;
            out.relation = recase_class(r->relation);
            cleaned.push_back(std::move(out));
        } else {
            const auto& ev = std::get<Event>(record);
            Event out;
            out.trigger = util::normalize_ws(ev.trigger);
            if (out.trigger.empty()) continue;
            out.class_id = recase_class(ev.class_id);
            const SchemaClass* cls = schema.find_class(ev.class_id);
            for (const auto& arg : ev.arguments) {
                EventArg cooked;
                cooked.span = util::normalize_ws(arg.span);
                if (cooked.span.empty()) continue;
                const std::string* role = cls ? UnifiedSchema::find_role(*cls, arg.role) : nullptr;
                cooked.role = role ? *role : arg.role;
                out.arguments.push_back(std::move(cooked));
            }
            std::sort(out.arguments.begin(), out.arguments.end(), arg_less);
            out.arguments.erase(std::unique(out.arguments.begin(), out.arguments.end()),
                                out.arguments.end());
            cleaned.push_back(std::move(out));
        }
    }
    return CanonicalRecords::adopt(std::move(cleaned));
}

bool records_match(const CanonicalRecords& pred, const CanonicalRecords& gold) {
    return pred == gold;
}

nlohmann::json records_to_json(const std::vector<ExtractionRecord>& records) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& record : records) out.push_back(record_to_json(record));
    return out;
}

std::string serialize_records(const std::vector<ExtractionRecord>& records) {
    return records_to_json(records).dump();
}

std::string serialize_records(const CanonicalRecords& records) {
    return serialize_records(records.items());
}

namespace {

void validate_one(const ExtractionRecord& record, const UnifiedSchema& schema, std::size_t index,
                  ValidationReport& report) {
    auto flag = [&](ValidationReason reason, std::string detail) {
        report.entries.push_back({index, reason, std::move(detail)});
    };
    auto span_empty = [](const std::string& s) { return util::normalize_ws(s).empty(); };

    if (const auto* e = std::get_if<Entity>(&record)) {
        if (schema.task() != TaskKind::NER) {
            flag(ValidationReason::WrongArity,
                 "entity record under a " + std::string(to_string(schema.task())) + " schema");
        } else if (!schema.find_class(e->class_id)) {
            flag(ValidationReason::UnknownClass, "entity type \"" + e->class_id + "\"");
        }
        if (span_empty(e->mention)) flag(ValidationReason::EmptySpan, "entity mention");
        return;
    }
    if (const auto* r = std::get_if<Relation>(&record)) {
        if (schema.task() != TaskKind::RE) {
            flag(ValidationReason::WrongArity,
                 "relation record under a " + std::string(to_string(schema.task())) + " schema");
        } else if (!schema.find_class(r->relation)) {
            flag(ValidationReason::UnknownClass, "relation \"" + r->relation + "\"");
        }
        if (span_empty(r->subject)) flag(ValidationReason::EmptySpan, "relation subject");
        if (span_empty(r->object)) flag(ValidationReason::EmptySpan, "relation object");
        return;
    }
    const auto& ev = std::get<Event>(record);
    const SchemaClass* cls = nullptr;
    if (schema.task() != TaskKind::EE) {
        flag(ValidationReason::WrongArity,
             "event record under a " + std::string(to_string(schema.task())) + " schema");
    } else if (!(cls = schema.find_class(ev.class_id))) {
        flag(ValidationReason::UnknownClass, "event type \"" + ev.class_id + "\"");
    }
    if (span_empty(ev.trigger)) flag(ValidationReason::EmptySpan, "event trigger");
    for (const auto& arg : ev.arguments) {
        if (cls && !UnifiedSchema::find_role(*cls, arg.role)) {
            flag(ValidationReason::UnknownArgument,
                 "role \"" + arg.role + "\" of event \"" + ev.class_id + "\"");
        }
        if (span_empty(arg.span)) {
            flag(ValidationReason::EmptySpan, "argument \"" + arg.role + "\"");
        }
    }
}

} // namespace

ValidationReport validate_output(const std::vector<ExtractionRecord>& records,
                                 const UnifiedSchema& schema) {
    ValidationReport report;
    for (std::size_t i = 0; i < records.size(); ++i) {
        validate_one(records[i], schema, i, report);
    }
    return report;
}

ValidationReport validate_output(const CanonicalRecords& records, const UnifiedSchema& schema) {
    return validate_output(records.items(), schema);
}

SplitResult split_reasoning(std::string_view completion) {
    static constexpr std::string_view kOpen = "<think>";
    static constexpr std::string_view kClose = "</think>";
    const auto open = completion.find(kOpen);
    const auto first_close = completion.find(kClose);
    if (open == std::string_view::npos) {
        if (first_close != std::string_view::npos) {
            throw Error(ErrorCode::UnbalancedMarkers, "closing marker without an opening one");
        }
        return {"", std::string(completion)};
    }
    if (first_close != std::string_view::npos && first_close < open) {
        throw Error(ErrorCode::UnbalancedMarkers, "closing marker precedes the opening one");
    }
    const auto body_start = open + kOpen.size();
    const auto close = completion.find(kClose, body_start);
    if (close == std::string_view::npos) {
        throw Error(ErrorCode::UnbalancedMarkers, "opening marker without a closing one");
    }
    SplitResult out;
    out.cot = std::string(completion.substr(body_start, close - body_start));
    out.answer = std::string(completion.substr(close + kClose.size()));
    return out;
}

namespace {

/// Innermost fenced block content, or the original text when no complete
/// fence is present.
std::string_view strip_code_fence(std::string_view text) {
    const auto fence = text.find("```");
    if (fence == std::string_view::npos) return text;
    auto start = fence + 3;
    const auto newline = text.find('\n', start);
    if (newline != std::string_view::npos) {
        // skip a language tag such as ```json
        std::string_view tag = text.substr(start, newline - start);
        bool tag_like = tag.find('{') == std::string_view::npos &&
                        tag.find('[') == std::string_view::npos && tag.size() <= 16;
        if (tag_like) start = newline + 1;
    }
    const auto end = text.find("```", start);
    if (end == std::string_view::npos) return text.substr(start);
    return text.substr(start, end - start);
}

/// Outermost balanced JSON array or object slice, tracking string literals
/// so braces inside spans do not confuse the scan. Empty view when nothing
/// balanced is found.
std::string_view balanced_json_slice(std::string_view text) {
    const auto first = text.find_first_of("[{");
    if (first == std::string_view::npos) return {};
    const char open = text[first];
    const char close = open == '[' ? ']' : '}';
    int depth = 0;
    bool in_string = false;
    for (std::size_t i = first; i < text.size(); ++i) {
        const char c = text[i];
        if (in_string) {
            if (c == '\\') {
                ++i;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == open) {
            ++depth;
        } else if (c == close) {
            if (--depth == 0) return text.substr(first, i - first + 1);
        }
    }
    return {};
}

} // namespace

ParseResult parse_model_output(std::string_view answer, const UnifiedSchema& schema) {
    const std::string_view candidate = strip_code_fence(answer);
    const std::string_view slice = balanced_json_slice(candidate);
    if (slice.empty()) {
        throw Error(ErrorCode::Unparseable, "no JSON array or object in the answer");
    }
    nlohmann::json parsed = nlohmann::json::parse(slice, nullptr, false);
    if (parsed.is_discarded()) {
        throw Error(ErrorCode::Unparseable, "answer slice is not valid JSON");
    }
    nlohmann::json elements = nlohmann::json::array();
    if (parsed.is_array()) {
        elements = std::move(parsed);
    } else if (parsed.is_object()) {
        elements.push_back(std::move(parsed));
    } else {
        throw Error(ErrorCode::Unparseable, "answer JSON is neither an array nor an object");
    }
    ParseResult result;
    for (const auto& element : elements) {
        ExtractionRecord record;
        try {
            record = record_from_json(element);
        } catch (const Error&) {
            ++result.dropped;
            continue;
        }
        if (!validate_output({record}, schema).valid()) {
            ++result.dropped;
            continue;
        }
        result.records.push_back(std::move(record));
    }
    return result;
}

ReasoningOutput parse_completion(std::string_view completion, const UnifiedSchema& schema) {
    SplitResult split = split_reasoning(completion);
    ParseResult parsed = parse_model_output(split.answer, schema);
    ReasoningOutput out;
    out.cot = std::move(split.cot);
    out.answer = std::move(split.answer);
    out.records = canonicalize(parsed.records, schema);
    out.dropped = parsed.dropped;
    return out;
}

} // namespace uie
