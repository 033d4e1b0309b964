#pragma once

#include "uie/records.hpp"
#include "uie/schema.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace uie {

enum class RewardMode { Strict, Soft };

const char* to_string(RewardMode mode);
RewardMode reward_mode_from_string(std::string_view s);

struct RewardConfig {
    double alpha = 2.0;  // category weight; categories are the easier target
    double beta = 1.0;   // argument weight
    double lambda1 = 0.9; // result share of the total
    double lambda2 = 0.1; // process share of the total
    RewardMode mode = RewardMode::Strict;

    void validate() const; // alpha > beta > 0, lambdas >= 0 summing to 1
};

/// A record set reduced to the two facets the result reward compares:
/// class labels on one side, span payloads on the other. Both multisets,
/// sorted so equality is positional.
struct CategoryArgumentView {
    std::vector<std::string> categories;
    std::vector<std::string> arguments;
};

CategoryArgumentView view_of(const CanonicalRecords& records);

/// Micro-F1 between two multisets with min-count intersection; two empty
/// multisets agree perfectly (1.0).
double multiset_f1(const std::vector<std::string>& pred, const std::vector<std::string>& gold);

/// Weighted harmonic mean of the category score ic and argument score ia,
/// 2*alpha*beta*ic*ia / (alpha*ic + beta*ia), taken as 0 when the
/// denominator vanishes and normalized by its maximum 2*alpha*beta /
/// (alpha + beta) so the result lies in [0, 1].
double harmonic_result_score(double ic, double ia, const RewardConfig& cfg);

/// Strict mode: ic/ia are equality indicators of the two view facets.
/// Soft mode: ic/ia are multiset micro-F1 scores (partial credit).
double result_reward(const CanonicalRecords& pred, const CanonicalRecords& gold,
                     const RewardConfig& cfg);

struct ProcessChecks {
    bool schema_adherence = false; // labels cited in cot or used in pred exist in the schema
    bool input_grounding = false;  // every predicted span occurs in x
    bool strategy_soundness = false; // cot engages with the supplied strategy

    int passes() const {
        return int(schema_adherence) + int(input_grounding) + int(strategy_soundness);
    }
};

/// The three faithfulness checks. strategy may be null when no strategy
/// prefix was used; an empty cot passes check 3 vacuously (the hidden
/// reasoning shape).
ProcessChecks process_checks(std::string_view x, const UnifiedSchema& schema,
                             const std::string* strategy, std::string_view cot,
                             const CanonicalRecords& pred);

/// passes / 3; always one of {0, 1/3, 2/3, 1}.
double process_reward(std::string_view x, const UnifiedSchema& schema, const std::string* strategy,
                      std::string_view cot, const CanonicalRecords& pred);

struct RewardBreakdown {
    double r_result = 0.0;
    double r_process = 0.0;
    double r_total = 0.0;
    ProcessChecks checks;
    double category_score = 0.0; // indicator or F1 depending on mode
    double argument_score = 0.0;
    std::string note; // parse failure tag, empty when the completion parsed
};

/// r_total = lambda1 * r_result + lambda2 * r_process.
RewardBreakdown total_reward(double r_result, double r_process, const RewardConfig& cfg);

/// End-to-end reward of one raw completion: split the think markers,
/// parse the answer, then score. Completions that fail to split or parse
/// earn an all-zero breakdown with the failure tag in note.
RewardBreakdown score_completion(std::string_view x, const UnifiedSchema& schema,
                                 const std::string* strategy, std::string_view completion,
                                 const CanonicalRecords& gold, const RewardConfig& cfg);

} // namespace uie
