#include "icf/consensus.hpp"

#include "icf/errors.hpp"

namespace icf {

Agreement classify_question(const std::vector<Prediction>& predictions) {
    if (predictions.empty()) throw EngineError("cannot classify a question with no predictions");
    const auto& first = predictions.front();
    if (first.abstained()) return Agreement::disagreement;
    for (const auto& p : predictions) {
        if (p.abstained() || p.majority != first.majority) return Agreement::disagreement;
    }
    return Agreement::consensus;
}

void to_json(nlohmann::json& j, const RoundPartition& p) {
    j = nlohmann::json{
        {"round", p.round},
        {"consensus", p.consensus_ids},
        {"disagreed", p.disagreed_ids},
        {"consensus_rate", p.consensus_rate},
    };
}

void from_json(const nlohmann::json& j, RoundPartition& p) {
    j.at("round").get_to(p.round);
    j.at("consensus").get_to(p.consensus_ids);
    j.at("disagreed").get_to(p.disagreed_ids);
    j.at("consensus_rate").get_to(p.consensus_rate);
}

RoundPartition partition(const QuestionSet& qs, const RoundPredictions& predictions,
                         const std::vector<std::string>& roster, int round) {
    if (qs.empty()) throw EngineError("cannot partition an empty question set");
    if (roster.size() < 2) throw EngineError("partition needs at least two models");

    RoundPartition part;
    part.round = round;
    for (const auto& q : qs.questions) {
        auto qit = predictions.find(q.id);
        if (qit == predictions.end()) {
            throw EngineError("question '" + q.id + "' has no predictions at round " + std::to_string(round));
        }
        std::vector<Prediction> row;
        row.reserve(roster.size());
        for (const auto& model : roster) {
            auto mit = qit->second.find(model);
            if (mit == qit->second.end()) {
                throw EngineError("question '" + q.id + "' is missing a prediction from '" + model + "'");
            }
            row.push_back(mit->second);
        }
        if (classify_question(row) == Agreement::consensus) {
            part.consensus_ids.insert(q.id);
        } else {
            part.disagreed_ids.insert(q.id);
        }
    }
    part.consensus_rate =
        100.0 * static_cast<double>(part.consensus_ids.size()) / static_cast<double>(qs.size());
    return part;
}

Support support_level(const std::string& question_id, const std::string& model_id,
                      const PredictionsByModel& predictions) {
    auto own = predictions.find(model_id);
    if (own == predictions.end()) {
        throw EngineError("no prediction from '" + model_id + "' on question '" + question_id + "'");
    }
    if (own->second.abstained()) {
        throw EngineError("support is undefined for an abstained prediction on question '" + question_id + "'");
    }
    for (const auto& [other_id, pred] : predictions) {
        if (other_id == model_id) continue;
        if (!pred.abstained() && pred.majority == own->second.majority) return Support::with_support;
    }
    return Support::without_support;
}

}  // namespace icf
