#pragma once

#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icf/consensus.hpp"
#include "icf/dataset.hpp"
#include "icf/sc_engine.hpp"

namespace icf {

struct LoopConfig {
    double threshold = 80.0;  // consensus-rate percent that stops the loop
    int max_rounds = 10;      // collaboration rounds after the initial pass
    int n = 10;               // samples per (question, model)
    bool summarize_all_samples = false;

    bool operator==(const LoopConfig&) const = default;
};

void to_json(nlohmann::json& j, const LoopConfig& cfg);
void from_json(const nlohmann::json& j, LoopConfig& cfg);

enum class Termination { threshold_met, round_cap_reached };

const char* to_string(Termination t);
Termination termination_from_string(const std::string& s);

/// Barrier observer. Rounds are committed whole: either every generation,
/// prediction, and the partition of a round reach the sink, or none do.
class RoundSink {
public:
    virtual ~RoundSink() = default;
    virtual void round_complete(int round, std::vector<GenRecord> generations,
                                std::vector<Prediction> predictions, const RoundPartition& partition) = 0;
    virtual void run_terminated(Termination termination, int rounds) = 0;
};

struct RunOutcome {
    /// partitions[r] is the state after round r; partitions[0] follows the
    /// initial self-consistency pass.
    std::vector<RoundPartition> partitions;
    /// Only predictions computed AT each round; earlier rounds stay valid
    /// for questions already in consensus.
    std::map<int, RoundPredictions> predictions;
    Termination termination = Termination::threshold_met;
    /// False only for outcomes rebuilt from a log that never recorded its
    /// termination, i.e. an interrupted run viewed by `report`.
    bool complete = true;

    int collaboration_rounds() const { return static_cast<int>(partitions.size()) - 1; }
    const RoundPredictions& round0() const { return predictions.at(0); }

    /// Latest prediction for the pair, nullptr when the pair never ran.
    const Prediction* final_prediction(const std::string& question_id, const std::string& model_id) const;
    /// Majority of the latest prediction; nullopt when it abstained.
    std::optional<char> final_answer(const std::string& question_id, const std::string& model_id) const;
};

/// Per-question view of the freshest prediction up to and including
/// `up_to_round`.
RoundPredictions latest_state(const std::map<int, RoundPredictions>& by_round,
                              int up_to_round = std::numeric_limits<int>::max());

/// Panel record shown to reviewers: every model's answer and summary from
/// `source_round`'s state, labeled "Expert 1..k" in roster order. Abstaining
/// models are left out and the numbering stays contiguous.
Transcript build_transcript(const Question& q, const PredictionsByModel& predictions,
                            const std::vector<std::string>& roster, int source_round);

/// One review round over the disagreed questions; returns only the fresh
/// predictions. Pairs run concurrently up to ctx.parallelism.
RoundPredictions run_round(const EngineContext& ctx, const std::set<std::string>& disagreed, const QuestionSet& qs,
                           const std::vector<ModelProfile>& participants, const ModelProfile& summarizer,
                           const RoundPredictions& prior_state, int round, const LoopConfig& cfg);

/// Full pipeline: initial self-consistency pass, then review rounds while
/// the consensus rate sits below the threshold and rounds remain. Questions
/// reaching consensus are frozen, so the disagreed set never grows.
RunOutcome run_collaboration(const EngineContext& ctx, const QuestionSet& qs,
                             const std::vector<ModelProfile>& participants, const ModelProfile& summarizer,
                             const LoopConfig& cfg, RoundSink* sink = nullptr, std::ostream* progress = nullptr);

}  // namespace icf
