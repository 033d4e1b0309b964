#include "uie/strategy.hpp"

#include "uie/errors.hpp"
#include "uie/util.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

namespace uie {

const char* to_string(Dimension d) {
    switch (d) {
    case Dimension::Cognitive: return "cognitive";
    case Dimension::Role: return "role";
    case Dimension::Heuristic: return "heuristic";
    }
    return "?";
}

Dimension dimension_from_string(std::string_view s) {
    if (s == "cognitive") return Dimension::Cognitive;
    if (s == "role") return Dimension::Role;
    if (s == "heuristic") return Dimension::Heuristic;
    throw Error(ErrorCode::InvalidConfig, "unknown dimension \"" + std::string(s) + "\"");
}

const char* to_string(Route route) { return route == Route::Sft ? "sft" : "rl"; }

Route route_from_string(std::string_view s) {
    if (s == "sft") return Route::Sft;
    if (s == "rl") return Route::Rl;
    throw Error(ErrorCode::InvalidConfig, "unknown route \"" + std::string(s) + "\"");
}

std::vector<Paradigm> default_paradigms() {
    return {
        {0,
         {"entity", "entities", "mention", "mentions", "type", "types", "boundary", "boundaries",
          "span", "spans", "name", "names"}},
        {1,
         {"relation", "relations", "subject", "object", "pair", "pairs", "link", "linked", "links",
          "triple", "triples"}},
        {2,
         {"event", "events", "trigger", "triggers", "timeline", "temporal", "sequence", "order",
          "when"}},
        {3,
         {"verify", "verification", "evidence", "check", "checks", "confirm", "quote", "quotes",
          "cite", "grounded"}},
        {4,
         {"role", "roles", "persona", "expert", "analyst", "detective", "journalist", "historian",
          "veteran", "editor", "linguist"}},
    };
}

namespace {

void validate_paradigms(const std::vector<Paradigm>& paradigms) {
    std::set<int> ids;
    for (const auto& p : paradigms) {
        if (p.id < 0) {
            throw Error(ErrorCode::InvalidConfig, "paradigm ids must be non-negative");
        }
        if (!ids.insert(p.id).second) {
            throw Error(ErrorCode::InvalidConfig, "duplicate paradigm id " + std::to_string(p.id));
        }
        if (p.keywords.empty()) {
            throw Error(ErrorCode::InvalidConfig,
                        "paradigm " + std::to_string(p.id) + " has no keywords");
        }
        std::set<std::string> seen;
        for (const auto& kw : p.keywords) {
            if (kw.empty() || !seen.insert(util::lower_ascii(kw)).second) {
                throw Error(ErrorCode::InvalidConfig, "paradigm " + std::to_string(p.id) +
                                                          " has an empty or duplicate keyword");
            }
        }
    }
}

} // namespace

std::vector<Paradigm> paradigms_from_json(const nlohmann::json& doc) {
    if (!doc.is_array() || doc.empty()) {
        throw Error(ErrorCode::InvalidConfig, "paradigm config must be a non-empty array");
    }
    std::vector<Paradigm> out;
    for (const auto& entry : doc) {
        Paradigm p;
        p.id = entry.at("id").get<int>();
        for (const auto& kw : entry.at("keywords")) {
            p.keywords.push_back(util::lower_ascii(kw.get<std::string>()));
        }
        out.push_back(std::move(p));
    }
    validate_paradigms(out);
    return out;
}

std::vector<Paradigm> load_paradigms(const std::filesystem::path& path) {
    nlohmann::json doc = nlohmann::json::parse(util::read_file(path), nullptr, false);
    if (doc.is_discarded()) {
        throw Error(ErrorCode::MalformedJson, "paradigm file " + path.string());
    }
    return paradigms_from_json(doc);
}

namespace {

bool is_token_char(unsigned char c) {
    return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c >= 0x80;
}

bool occurs_at_token_start(const std::string& haystack, const std::string& needle) {
    std::size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        if (pos == 0 || !is_token_char(static_cast<unsigned char>(haystack[pos - 1]))) {
            return true;
        }
        ++pos;
    }
    return false;
}

} // namespace

int keyword_cooccurrence(std::string_view text, const Paradigm& paradigm) {
    const std::string lowered = util::lower_ascii(text);
    int score = 0;
    for (const auto& kw : paradigm.keywords) {
        if (occurs_at_token_start(lowered, util::lower_ascii(kw))) ++score;
    }
    return score;
}

std::vector<StrategyCluster> cluster_by_paradigm(std::vector<Strategy>& strategies,
                                                 const std::vector<Paradigm>& paradigms) {
    if (paradigms.empty()) {
        throw Error(ErrorCode::InvalidConfig, "cannot cluster without paradigms");
    }
    validate_paradigms(paradigms);
    std::vector<const Paradigm*> by_id;
    by_id.reserve(paradigms.size());
    for (const auto& p : paradigms) by_id.push_back(&p);
    std::sort(by_id.begin(), by_id.end(),
              [](const Paradigm* a, const Paradigm* b) { return a->id < b->id; });

    std::map<int, StrategyCluster> clusters;
    for (std::size_t i = 0; i < strategies.size(); ++i) {
        int best_id = kParadigmOther;
        int best_score = 0;
        for (const Paradigm* p : by_id) {
            const int score = keyword_cooccurrence(strategies[i].text, *p);
            if (score > best_score) {
                best_score = score;
                best_id = p->id;
            }
        }
        strategies[i].paradigm_id = best_id;
        auto& cluster = clusters[best_id];
        cluster.paradigm_id = best_id;
        cluster.members.push_back(i);
    }

    std::vector<StrategyCluster> out;
    for (auto& [id, cluster] : clusters) {
        if (id != kParadigmOther) out.push_back(std::move(cluster));
    }
    if (auto it = clusters.find(kParadigmOther); it != clusters.end()) {
        out.push_back(std::move(it->second));
    }
    return out;
}

std::vector<std::vector<double>> embed_tfidf(const std::vector<std::string>& texts) {
    if (texts.empty()) {
        throw Error(ErrorCode::UsageError, "embed_tfidf needs at least one text");
    }
    std::vector<std::vector<std::string>> docs;
    docs.reserve(texts.size());
    std::map<std::string, std::size_t> df; // sorted: fixes vocabulary order
    for (const auto& text : texts) {
        docs.push_back(util::tokenize(text));
        std::set<std::string> uniq(docs.back().begin(), docs.back().end());
        for (const auto& tok : uniq) ++df[tok];
    }
    std::unordered_map<std::string, std::size_t> index;
    std::vector<double> idf;
    idf.reserve(df.size());
    const double n_docs = static_cast<double>(texts.size());
    for (const auto& [tok, count] : df) {
        index.emplace(tok, idf.size());
        idf.push_back(std::log(n_docs / (1.0 + static_cast<double>(count))) + 1.0);
    }

    std::vector<std::vector<double>> vectors(texts.size(), std::vector<double>(idf.size(), 0.0));
    for (std::size_t d = 0; d < docs.size(); ++d) {
        if (docs[d].empty()) continue;
        const double len = static_cast<double>(docs[d].size());
        std::unordered_map<std::string, std::size_t> counts;
        for (const auto& tok : docs[d]) ++counts[tok];
        for (const auto& [tok, count] : counts) {
            const std::size_t j = index.at(tok);
            vectors[d][j] = (static_cast<double>(count) / len) * idf[j];
        }
    }
    return vectors;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::UsageError, "cosine over vectors of different dimension");
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

RepresentativePick pick_representatives(const std::vector<std::string>& texts) {
    if (texts.empty()) {
        throw Error(ErrorCode::UsageError, "cannot pick representatives of an empty cluster");
    }
    RepresentativePick pick;
    pick.mean_similarity.assign(texts.size(), 0.0);
    if (texts.size() > 1) {
        const auto vectors = embed_tfidf(texts);
        for (std::size_t i = 0; i < texts.size(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < texts.size(); ++j) {
                if (j != i) sum += cosine(vectors[i], vectors[j]);
            }
            pick.mean_similarity[i] = sum / static_cast<double>(texts.size() - 1);
        }
    }
    for (std::size_t i = 1; i < texts.size(); ++i) {
        if (pick.mean_similarity[i] < pick.mean_similarity[pick.unique_index]) {
            pick.unique_index = i;
        }
        if (pick.mean_similarity[i] > pick.mean_similarity[pick.generic_index]) {
            pick.generic_index = i;
        }
    }
    return pick;
}

std::vector<Strategy> sample_core(const std::vector<Strategy>& candidates, std::size_t p,
                                  std::uint64_t seed, bool* deficit) {
    if (candidates.empty()) {
        throw Error(ErrorCode::UsageError, "cannot sample from an empty candidate pool");
    }
    if (deficit) *deficit = candidates.size() < p;
    if (candidates.size() <= p) return candidates;

    util::Rng rng(seed);
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<Strategy> out;
    out.reserve(p);
    for (std::size_t i = 0; i < p; ++i) {
        const std::size_t j = i + rng.below(order.size() - i);
        std::swap(order[i], order[j]);
        out.push_back(candidates[order[i]]);
    }
    return out;
}

PromptTemplates PromptTemplates::defaults() {
    PromptTemplates t;
    t.cognitive = "You are preparing a thinking strategy for a structured extraction task.\n"
                  "Analytical dimension: cognitive perspective (variant {k} of {n}).\n"
                  "Text:\n{x}\n"
                  "Schema:\n{schema}\n"
                  "Describe one distinct mental approach for reading the text and deriving the "
                  "records. Reply with the strategy text only.\n";
    t.role = "You are preparing a thinking strategy for a structured extraction task.\n"
             "Analytical dimension: professional role (variant {k} of {n}).\n"
             "Text:\n{x}\n"
             "Schema:\n{schema}\n"
             "Pick a profession whose habits suit this text and describe how that person would "
             "work out the records. Reply with the strategy text only.\n";
    t.heuristic = "You are preparing a thinking strategy for a structured extraction task.\n"
                  "Analytical dimension: heuristic rules (variant {k} of {n}).\n"
                  "Text:\n{x}\n"
                  "Schema:\n{schema}\n"
                  "State concrete rules of thumb that lead from surface cues in the text to the "
                  "records. Reply with the strategy text only.\n";
    t.rationale = "Follow the strategy below to extract structured records from the text.\n"
                  "Strategy:\n{strategy}\n"
                  "Text:\n{x}\n"
                  "Schema:\n{schema}\n"
                  "Reason inside <think> and </think>, then give only a JSON array of records.\n";
    return t;
}

PromptTemplates PromptTemplates::load_dir(const std::filesystem::path& dir) {
    PromptTemplates t;
    t.cognitive = util::read_file(dir / "cognitive.txt");
    t.role = util::read_file(dir / "role.txt");
    t.heuristic = util::read_file(dir / "heuristic.txt");
    t.rationale = util::read_file(dir / "rationale.txt");
    return t;
}

namespace {

std::string fill(std::string text, std::string_view x, std::string_view schema_text) {
    text = util::replace_all(std::move(text), "{x}", x);
    return util::replace_all(std::move(text), "{schema}", schema_text);
}

} // namespace

std::string PromptTemplates::render_dimension(Dimension d, std::string_view x,
                                              std::string_view schema_text, int k, int n) const {
    const std::string* base = &cognitive;
    if (d == Dimension::Role) base = &role;
    if (d == Dimension::Heuristic) base = &heuristic;
    std::string text = util::replace_all(*base, "{k}", std::to_string(k));
    text = util::replace_all(std::move(text), "{n}", std::to_string(n));
    return fill(std::move(text), x, schema_text);
}

std::string PromptTemplates::render_rationale(std::string_view x, std::string_view schema_text,
                                              std::string_view strategy_text) const {
    return fill(util::replace_all(rationale, "{strategy}", strategy_text), x, schema_text);
}

std::string render_instruction(std::string_view x, const UnifiedSchema& schema) {
    std::string what = "entity mentions";
    if (schema.task() == TaskKind::RE) what = "relation triples";
    if (schema.task() == TaskKind::EE) what = "events with their arguments";
    std::string out = "Extract all ";
    out += what;
    out += " from the text.\nSchema:\n";
    out += serialize_schema(schema);
    out += "\nText:\n";
    out += x;
    out += "\nReply with a JSON array of records.";
    return out;
}

void ForgeConfig::validate() const {
    if (n_per_dim < 1) {
        throw Error(ErrorCode::InvalidConfig, "n_per_dim must be at least 1");
    }
    if (core_size < 1) {
        throw Error(ErrorCode::InvalidConfig, "core_size must be at least 1");
    }
    if (sft_threshold < 0) {
        throw Error(ErrorCode::InvalidConfig, "sft_threshold must be non-negative");
    }
    validate_paradigms(paradigms);
}

StrategyForge::StrategyForge(Gateway& gateway, ForgeConfig config)
    : gateway_(gateway), config_(std::move(config)) {
    config_.validate();
}

namespace {

[[noreturn]] void rethrow_as_gateway_failure(const Error& e, const char* stage) {
    throw Error(ErrorCode::GatewayFailure, std::string(stage) + ": " + e.what());
}

} // namespace

std::vector<Strategy> StrategyForge::diverge(const std::string& x, const UnifiedSchema& schema,
                                             int* blank_skipped) const {
    const std::string schema_text = serialize_schema(schema);
    std::vector<Strategy> out;
    out.reserve(static_cast<std::size_t>(config_.n_per_dim) * kDimensions.size());
    int blanks = 0;
    for (Dimension d : kDimensions) {
        for (int k = 1; k <= config_.n_per_dim; ++k) {
            const std::string prompt =
                config_.prompts.render_dimension(d, x, schema_text, k, config_.n_per_dim);
            std::string text;
            try {
                text = gateway_.complete(make_request(prompt, Purpose::Strategy)).completion;
            } catch (const Error& e) {
                if (e.code() == ErrorCode::BadResponse) {
                    ++blanks; // retried inside the gateway, still blank
                    continue;
                }
                rethrow_as_gateway_failure(e, "strategy divergence");
            }
            text = util::normalize_ws(text);
            if (text.empty()) {
                ++blanks;
                continue;
            }
            out.push_back({std::move(text), d, kParadigmUnassigned});
        }
    }
    if (blank_skipped) *blank_skipped = blanks;
    return out;
}

ReasoningTrace StrategyForge::generate_trace(const std::string& x, const UnifiedSchema& schema,
                                             const Strategy& strategy,
                                             const CanonicalRecords& gold,
                                             std::size_t* dropped_records) const {
    const std::string prompt =
        config_.prompts.render_rationale(x, serialize_schema(schema), strategy.text);
    std::string completion;
    try {
        completion = gateway_.complete(make_request(prompt, Purpose::Rationale)).completion;
    } catch (const Error& e) {
        if (e.code() == ErrorCode::BadResponse) {
            ReasoningTrace trace;
            trace.strategy = strategy;
            trace.error = to_string(e.code());
            return trace;
        }
        rethrow_as_gateway_failure(e, "rationale generation");
    }
    ReasoningTrace trace;
    trace.strategy = strategy;
    try {
        ReasoningOutput parsed = parse_completion(completion, schema);
        trace.cot = std::move(parsed.cot);
        trace.prediction = std::move(parsed.records);
        trace.correct = records_match(trace.prediction, gold);
        if (dropped_records) *dropped_records += parsed.dropped;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::Unparseable && e.code() != ErrorCode::UnbalancedMarkers) {
            throw;
        }
        trace.correct = false;
        trace.error = to_string(e.code());
    }
    return trace;
}

BuiltInstance StrategyForge::build_instance(const LabeledExample& example,
                                            std::uint64_t instance_seed) const {
    BuiltInstance built;
    auto& diag = built.diagnostics;

    std::vector<Strategy> strategies = diverge(example.x, example.schema, &diag.blank_skipped);
    diag.raw_strategies = static_cast<int>(strategies.size());
    if (strategies.empty()) {
        built.route = built.level >= config_.sft_threshold ? Route::Sft : Route::Rl;
        return built;
    }

    const auto clusters = cluster_by_paradigm(strategies, config_.paradigms);
    std::vector<Strategy> candidates;
    for (const auto& cluster : clusters) {
        std::vector<std::string> texts;
        texts.reserve(cluster.members.size());
        for (std::size_t m : cluster.members) texts.push_back(strategies[m].text);
        const RepresentativePick pick = pick_representatives(texts);
        candidates.push_back(strategies[cluster.members[pick.unique_index]]);
        if (pick.generic_index != pick.unique_index) {
            candidates.push_back(strategies[cluster.members[pick.generic_index]]);
        }
    }
    diag.candidates = static_cast<int>(candidates.size());

    const std::vector<Strategy> core =
        sample_core(candidates, config_.core_size, instance_seed, &diag.core_deficit);

    for (const auto& strategy : core) {
        ReasoningTrace trace =
            generate_trace(example.x, example.schema, strategy, example.gold,
                           &diag.dropped_records);
        ++diag.traces_run;
        if (!trace.error.empty()) ++diag.parse_failures;
        if (trace.correct) built.kept.push_back(std::move(trace));
    }
    built.level = static_cast<int>(built.kept.size());
    built.route = built.level >= config_.sft_threshold ? Route::Sft : Route::Rl;
    return built;
}

} // namespace uie
