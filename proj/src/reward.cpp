#include "uie/reward.hpp"

#include "uie/errors.hpp"
#include "uie/util.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <set>

namespace uie {

const char* to_string(RewardMode mode) { return mode == RewardMode::Strict ? "strict" : "soft"; }

RewardMode reward_mode_from_string(std::string_view s) {
    if (s == "strict") return RewardMode::Strict;
    if (s == "soft") return RewardMode::Soft;
    throw Error(ErrorCode::InvalidConfig, "unknown reward mode \"" + std::string(s) + "\"");
}

void RewardConfig::validate() const {
    if (!(alpha > beta) || !(beta > 0.0)) {
        throw Error(ErrorCode::InvalidConfig, "reward weights need alpha > beta > 0");
    }
    if (lambda1 < 0.0 || lambda2 < 0.0 || std::abs(lambda1 + lambda2 - 1.0) > 1e-9) {
        throw Error(ErrorCode::InvalidConfig, "lambda1 and lambda2 must be non-negative and sum to 1");
    }
}

CategoryArgumentView view_of(const CanonicalRecords& records) {
    CategoryArgumentView view;
    for (const auto& record : records.items()) {
        if (const auto* e = std::get_if<Entity>(&record)) {
            view.categories.push_back(e->class_id);
            view.arguments.push_back("m\x1f" + e->mention);
        } else if (const auto* r = std::get_if<Relation>(&record)) {
            view.categories.push_back(r->relation);
            view.arguments.push_back("p\x1f" + r->subject + '\x1f' + r->object);
        } else {
            const auto& ev = std::get<Event>(record);
            view.categories.push_back(ev.class_id);
            view.arguments.push_back("t\x1f" + ev.trigger);
            for (const auto& arg : ev.arguments) {
                view.arguments.push_back("a\x1f" + arg.role + '\x1f' + arg.span);
            }
        }
    }
    std::sort(view.categories.begin(), view.categories.end());
    std::sort(view.arguments.begin(), view.arguments.end());
    return view;
}

double multiset_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold) {
    if (pred.empty() && gold.empty()) return 1.0;
    std::map<std::string, std::size_t> gold_counts;
    for (const auto& item : gold) ++gold_counts[item];
    std::size_t tp = 0;
    for (const auto& item : pred) {
        if (auto it = gold_counts.find(item); it != gold_counts.end() && it->second > 0) {
            --it->second;
            ++tp;
        }
    }
    return 2.0 * static_cast<double>(tp) / static_cast<double>(pred.size() + gold.size());
}

double harmonic_result_score(double ic, double ia, const RewardConfig& cfg) {
    cfg.validate();
    const double denom = cfg.alpha * ic + cfg.beta * ia;
    if (denom <= 0.0) return 0.0;
    const double raw = 2.0 * cfg.alpha * cfg.beta * ic * ia / denom;
    const double ceiling = 2.0 * cfg.alpha * cfg.beta / (cfg.alpha + cfg.beta);
    return raw / ceiling;
}

double result_reward(const CanonicalRecords& pred, const CanonicalRecords& gold,
                     const RewardConfig& cfg) {
    cfg.validate();
    const CategoryArgumentView vp = view_of(pred);
    const CategoryArgumentView vg = view_of(gold);
    double ic, ia;
    if (cfg.mode == RewardMode::Strict) {
        ic = vp.categories == vg.categories ? 1.0 : 0.0;
        ia = vp.arguments == vg.arguments ? 1.0 : 0.0;
    } else {
        ic = multiset_f1(vp.categories, vg.categories);
        ia = multiset_f1(vp.arguments, vg.arguments);
    }
    return harmonic_result_score(ic, ia, cfg);
}

namespace {

/// Spans a completion might quote as labels: text between double quotes
/// or backticks, short enough to be a label rather than a passage.
std::vector<std::string> quoted_spans(std::string_view cot) {
    std::vector<std::string> out;
    for (char quote : {'"', '`'}) {
        std::size_t pos = 0;
        while (true) {
            const auto open = cot.find(quote, pos);
            if (open == std::string_view::npos) break;
            const auto close = cot.find(quote, open + 1);
            if (close == std::string_view::npos) break;
            std::string inner = util::normalize_ws(cot.substr(open + 1, close - open - 1));
            if (!inner.empty() && inner.size() <= 64) out.push_back(std::move(inner));
            pos = close + 1;
        }
    }
    return out;
}

bool contains_ci(const std::string& haystack, const std::string& needle) {
    return util::lower_ascii(haystack).find(util::lower_ascii(needle)) != std::string::npos;
}

bool pred_labels_known(const CanonicalRecords& pred, const UnifiedSchema& schema) {
    for (const auto& record : pred.items()) {
        if (const auto* e = std::get_if<Entity>(&record)) {
            if (!schema.knows_label(e->class_id)) return false;
        } else if (const auto* r = std::get_if<Relation>(&record)) {
            if (!schema.knows_label(r->relation)) return false;
        } else {
            const auto& ev = std::get<Event>(record);
            if (!schema.knows_label(ev.class_id)) return false;
            for (const auto& arg : ev.arguments) {
                if (!schema.knows_label(arg.role)) return false;
            }
        }
    }
    return true;
}

bool check_schema_adherence(std::string_view x, const UnifiedSchema& schema, std::string_view cot,
                            const CanonicalRecords& pred) {
    if (!pred_labels_known(pred, schema)) return false;
    const std::string x_norm = util::normalize_ws(x);
    for (const auto& candidate : quoted_spans(cot)) {
        // quoting the input is fine; the check only polices label talk
        if (contains_ci(x_norm, candidate)) continue;
        if (!schema.knows_label(candidate)) return false;
    }
    return true;
}

bool check_input_grounding(std::string_view x, const CanonicalRecords& pred) {
    const std::string x_norm = util::normalize_ws(x);
    auto grounded = [&](const std::string& span) {
        return x_norm.find(util::normalize_ws(span)) != std::string::npos;
    };
    for (const auto& record : pred.items()) {
        if (const auto* e = std::get_if<Entity>(&record)) {
            if (!grounded(e->mention)) return false;
        } else if (const auto* r = std::get_if<Relation>(&record)) {
            if (!grounded(r->subject) || !grounded(r->object)) return false;
        } else {
            const auto& ev = std::get<Event>(record);
            if (!grounded(ev.trigger)) return false;
            for (const auto& arg : ev.arguments) {
                if (!grounded(arg.span)) return false;
            }
        }
    }
    return true;
}

bool is_stopword(const std::string& token) {
    static const std::set<std::string> kStop = {
        "the", "and", "for", "with", "from", "that", "this", "are",  "was",  "were",
        "will", "each", "all", "any",  "how",  "what", "when", "then", "than", "into",
        "its", "out", "our", "your", "their", "them", "they", "should", "would", "could"};
    return kStop.count(token) > 0;
}

bool check_strategy_soundness(const std::string* strategy, std::string_view cot) {
    if (util::normalize_ws(cot).empty()) return true; // hidden reasoning
    if (!strategy) return true;
    std::set<std::string> cot_tokens;
    for (auto& tok : util::tokenize(cot)) {
        if (tok.size() >= 3 && !is_stopword(tok)) cot_tokens.insert(std::move(tok));
    }
    for (const auto& tok : util::tokenize(*strategy)) {
        if (tok.size() >= 3 && !is_stopword(tok) && cot_tokens.count(tok)) return true;
    }
    return false;
}

} // namespace

ProcessChecks process_checks(std::string_view x, const UnifiedSchema& schema,
                             const std::string* strategy, std::string_view cot,
                             const CanonicalRecords& pred) {
    ProcessChecks checks;
    checks.schema_adherence = check_schema_adherence(x, schema, cot, pred);
    checks.input_grounding = check_input_grounding(x, pred);
    checks.strategy_soundness = check_strategy_soundness(strategy, cot);
    return checks;
}

double process_reward(std::string_view x, const UnifiedSchema& schema, const std::string* strategy,
                      std::string_view cot, const CanonicalRecords& pred) {
    return static_cast<double>(process_checks(x, schema, strategy, cot, pred).passes()) / 3.0;
}

RewardBreakdown total_reward(double r_result, double r_process, const RewardConfig& cfg) {
    cfg.validate();
    if (r_result < 0.0 || r_result > 1.0 || r_process < 0.0 || r_process > 1.0) {
        throw Error(ErrorCode::InvalidConfig, "reward components must lie in [0, 1]");
    }
    RewardBreakdown out;
    out.r_result = r_result;
    out.r_process = r_process;
    out.r_total = cfg.lambda1 * r_result + cfg.lambda2 * r_process;
    return out;
}

RewardBreakdown score_completion(std::string_view x, const UnifiedSchema& schema,
                                 const std::string* strategy, std::string_view completion,
                                 const CanonicalRecords& gold, const RewardConfig& cfg) {
    cfg.validate();
    ReasoningOutput parsed;
    try {
        parsed = parse_completion(completion, schema);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::Unparseable && e.code() != ErrorCode::UnbalancedMarkers) {
            throw;
        }
        RewardBreakdown out;
        out.note = to_string(e.code());
        return out;
    }

    const CategoryArgumentView vp = view_of(parsed.records);
    const CategoryArgumentView vg = view_of(gold);
    RewardBreakdown out =
        total_reward(result_reward(parsed.records, gold, cfg),
                     process_reward(x, schema, strategy, parsed.cot, parsed.records), cfg);
    out.checks = process_checks(x, schema, strategy, parsed.cot, parsed.records);
    if (cfg.mode == RewardMode::Strict) {
        out.category_score = vp.categories == vg.categories ? 1.0 : 0.0;
        out.argument_score = vp.arguments == vg.arguments ? 1.0 : 0.0;
    } else {
        out.category_score = multiset_f1(vp.categories, vg.categories);
        out.argument_score = multiset_f1(vp.arguments, vg.arguments);
    }
    return out;
}

} // namespace uie
