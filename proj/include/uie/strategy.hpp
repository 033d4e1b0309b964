#pragma once

#include "uie/gateway.hpp"
#include "uie/records.hpp"
#include "uie/schema.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace uie {

enum class Dimension { Cognitive, Role, Heuristic };

inline constexpr std::array<Dimension, 3> kDimensions = {Dimension::Cognitive, Dimension::Role,
                                                         Dimension::Heuristic};

const char* to_string(Dimension d);
Dimension dimension_from_string(std::string_view s);

/// Cluster ids outside the configured paradigm range.
inline constexpr int kParadigmOther = -1;
inline constexpr int kParadigmUnassigned = -2;

struct Strategy {
    std::string text;
    Dimension dimension = Dimension::Cognitive;
    int paradigm_id = kParadigmUnassigned;
};

struct Paradigm {
    int id = 0;
    std::vector<std::string> keywords; // lowercase, unique
};

std::vector<Paradigm> default_paradigms();
std::vector<Paradigm> paradigms_from_json(const nlohmann::json& doc);
std::vector<Paradigm> load_paradigms(const std::filesystem::path& path);

/// Number of paradigm keywords that occur in the text. A keyword matches
/// case-insensitively wherever it starts at a token boundary, so "type"
/// hits "types" but not "archetype"; each keyword counts at most once.
int keyword_cooccurrence(std::string_view text, const Paradigm& paradigm);

struct StrategyCluster {
    int paradigm_id = kParadigmOther;
    std::vector<std::size_t> members; // indices into the strategy list
};

/// Assign every strategy to the paradigm with the highest co-occurrence
/// (ties to the lowest paradigm id, no hits to OTHER) and group them.
/// Clusters come back sorted by id with OTHER last; empty clusters are
/// omitted. Assignments are also written to each strategy's paradigm_id.
std::vector<StrategyCluster> cluster_by_paradigm(std::vector<Strategy>& strategies,
                                                 const std::vector<Paradigm>& paradigms);

/// TF-IDF embeddings over a shared vocabulary (union of tokens, sorted).
/// tf = count / doc length; idf = ln(N / (1 + df)) + 1.
std::vector<std::vector<double>> embed_tfidf(const std::vector<std::string>& texts);

double cosine(const std::vector<double>& a, const std::vector<double>& b);

struct RepresentativePick {
    std::size_t unique_index = 0;  // lowest mean similarity to the rest
    std::size_t generic_index = 0; // highest mean similarity to the rest
    std::vector<double> mean_similarity;
};

/// Mean pairwise cosine of each text against the others; ties resolve to
/// the earliest index. A singleton picks itself twice.
RepresentativePick pick_representatives(const std::vector<std::string>& texts);

/// Uniform sample of p strategies without replacement. Fewer candidates
/// than p returns them all and sets *deficit.
std::vector<Strategy> sample_core(const std::vector<Strategy>& candidates, std::size_t p,
                                  std::uint64_t seed, bool* deficit = nullptr);

/// Prompt skeletons with {x}, {schema}, {strategy}, {k}, {n} placeholders.
struct PromptTemplates {
    std::string cognitive;
    std::string role;
    std::string heuristic;
    std::string rationale;

    static PromptTemplates defaults();

    /// Reads cognitive.txt, role.txt, heuristic.txt and rationale.txt.
    static PromptTemplates load_dir(const std::filesystem::path& dir);

    std::string render_dimension(Dimension d, std::string_view x, std::string_view schema_text,
                                 int k, int n) const;
    std::string render_rationale(std::string_view x, std::string_view schema_text,
                                 std::string_view strategy_text) const;
};

/// The plain extraction instruction (no strategy prefix) shared by SFT
/// rendering and policy prompting.
std::string render_instruction(std::string_view x, const UnifiedSchema& schema);

struct ReasoningTrace {
    Strategy strategy;
    std::string cot;
    CanonicalRecords prediction;
    bool correct = false;
    std::string error; // parse failure tag, empty when clean
};

enum class Route { Sft, Rl };

const char* to_string(Route route);
Route route_from_string(std::string_view s);

struct InstanceDiagnostics {
    int raw_strategies = 0;   // after blank skips
    int blank_skipped = 0;    // divergence calls that never produced text
    int candidates = 0;       // deduplicated representatives
    bool core_deficit = false;
    int traces_run = 0;
    int parse_failures = 0;
    std::size_t dropped_records = 0; // schema-invalid records inside parsed answers
};

struct BuiltInstance {
    std::vector<ReasoningTrace> kept; // correct traces only
    int level = 0;
    Route route = Route::Rl;
    InstanceDiagnostics diagnostics;
};

struct ForgeConfig {
    int n_per_dim = 5;         // strategies per analytical dimension
    std::size_t core_size = 5; // strategies sampled for rationale generation
    int sft_threshold = 3;     // minimum level that routes to SFT
    std::vector<Paradigm> paradigms = default_paradigms();
    PromptTemplates prompts = PromptTemplates::defaults();
    std::uint64_t seed = 0;

    void validate() const;
};

/// Strategy generation and filtering around one gateway. Divergence asks
/// for n_per_dim strategies per dimension; convergence clusters them,
/// keeps each cluster's most unique and most generic member and samples
/// the reasoning core; rationale traces that miss the gold label are
/// rejected.
class StrategyForge {
public:
    StrategyForge(Gateway& gateway, ForgeConfig config);

    const ForgeConfig& config() const { return config_; }

    std::vector<Strategy> diverge(const std::string& x, const UnifiedSchema& schema,
                                  int* blank_skipped = nullptr) const;

    ReasoningTrace generate_trace(const std::string& x, const UnifiedSchema& schema,
                                  const Strategy& strategy, const CanonicalRecords& gold,
                                  std::size_t* dropped_records = nullptr) const;

    /// The full per-example run: diverge, cluster, pick representatives,
    /// sample the core, trace each sampled strategy and keep the correct
    /// traces. instance_seed fixes the core sample.
    BuiltInstance build_instance(const LabeledExample& example, std::uint64_t instance_seed) const;

private:
    Gateway& gateway_;
    ForgeConfig config_;
};

} // namespace uie
