#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icf/dataset.hpp"
#include "icf/sc_engine.hpp"

namespace icf {

enum class Agreement { consensus, disagreement };

/// question id -> model id -> prediction; map keys keep iteration sorted.
using PredictionsByModel = std::map<std::string, Prediction>;
using RoundPredictions = std::map<std::string, PredictionsByModel>;

/// Consensus requires every participant to hold the same valid letter; one
/// abstention or differing letter means disagreement.
Agreement classify_question(const std::vector<Prediction>& predictions);

struct RoundPartition {
    int round = 0;
    std::set<std::string> consensus_ids;
    std::set<std::string> disagreed_ids;
    double consensus_rate = 0.0;  // percent of questions in consensus

    bool operator==(const RoundPartition&) const = default;
};

void to_json(nlohmann::json& j, const RoundPartition& p);
void from_json(const nlohmann::json& j, RoundPartition& p);

/// Splits the question set by agreement at one round. Every question must
/// carry a prediction from every roster model.
RoundPartition partition(const QuestionSet& qs, const RoundPredictions& predictions,
                         const std::vector<std::string>& roster, int round);

enum class Support { with_support, without_support };

/// Whether at least one other model's majority matches this model's, among
/// the given (round-0) predictions for one question. The model must have a
/// valid majority there.
Support support_level(const std::string& question_id, const std::string& model_id,
                      const PredictionsByModel& predictions);

}  // namespace icf
