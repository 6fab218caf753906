#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "icf/collab.hpp"
#include "icf/consensus.hpp"
#include "icf/dataset.hpp"

namespace icf {

enum class Stage { initial, post_collaboration };

const char* to_string(Stage stage);

struct AccuracyCell {
    int correct = 0;
    int total = 0;

    double percent() const { return total == 0 ? 0.0 : 100.0 * correct / total; }
    bool operator==(const AccuracyCell&) const = default;
};

/// Abstentions count as incorrect. `overall` pools raw counts across steps
/// rather than averaging the per-step percentages.
struct AccuracyReport {
    std::string model_id;
    Stage stage = Stage::initial;
    std::map<int, AccuracyCell> per_step;
    AccuracyCell overall;
};

AccuracyReport accuracy(const RunOutcome& outcome, const QuestionSet& qs, Stage stage,
                        const std::string& model_id);

/// Initially-disagreed questions where the model's final answer equals its
/// round-0 majority. Questions it abstained on at round 0 are out of scope.
std::set<std::string> insist_set(const RunOutcome& outcome, const std::string& model_id);

/// Insist rates split by round-0 teammate support, averaged into a single
/// confidence score. Rates are fractions in [0, 1].
struct ConfidenceReport {
    std::string model_id;
    double insist_with_support = 0.0;
    double insist_without_support = 0.0;
    bool with_support_defined = false;
    bool without_support_defined = false;
    double confidence = 0.0;  // mean of the defined components
    int with_support_total = 0;
    int with_support_insist = 0;
    int without_support_total = 0;
    int without_support_insist = 0;
};

ConfidenceReport confidence(const RunOutcome& outcome, const std::string& model_id);

enum class ConsistencyFilter { all, correct_only, incorrect_only };

/// `all`: mean of vote_count/n over every question (abstentions contribute
/// zero). `correct_only`/`incorrect_only`: mean RAW vote count over the
/// questions the model answered right/wrong, judged against the keys.
double consistency(const RoundPredictions& stage_predictions, const std::string& model_id,
                   ConsistencyFilter filter, const QuestionSet& qs);

struct ConsistencyReport {
    std::string model_id;
    Stage stage = Stage::initial;
    double avg_correct = 0.0;
    double avg_incorrect = 0.0;
    bool correct_defined = false;
    bool incorrect_defined = false;
    double difference = 0.0;  // avg_correct - avg_incorrect, when both defined
    double overall = 0.0;     // normalized mean vote share
};

ConsistencyReport consistency_report(const RunOutcome& outcome, const QuestionSet& qs, Stage stage,
                                     const std::string& model_id);

/// Rank correlation with average ranks for ties.
double spearman_rank(const std::vector<double>& xs, const std::vector<double>& ys);

struct MetricsBundle {
    std::vector<AccuracyReport> accuracy_initial;
    std::vector<AccuracyReport> accuracy_final;
    std::vector<ConfidenceReport> confidences;  // models where computable
    std::vector<ConsistencyReport> consistency_initial;
    std::vector<ConsistencyReport> consistency_final;
    /// Across models: confidence vs accuracy improvement, when enough
    /// defined points exist and the inputs are not degenerate.
    std::optional<double> confidence_gain_spearman;
};

/// Everything the reports need, in roster order. Requires a fully keyed
/// question set.
MetricsBundle compute_all_metrics(const RunOutcome& outcome, const QuestionSet& qs,
                                  const std::vector<std::string>& roster);

}  // namespace icf
