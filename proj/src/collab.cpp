#include "icf/collab.hpp"

#include <algorithm>
#include <iomanip>
#include <tuple>

#include "icf/errors.hpp"
#include "icf/executor.hpp"

namespace icf {

void to_json(nlohmann::json& j, const LoopConfig& cfg) {
    j = nlohmann::json{
        {"threshold", cfg.threshold},
        {"max_rounds", cfg.max_rounds},
        {"n", cfg.n},
        {"summarize_all_samples", cfg.summarize_all_samples},
    };
}

void from_json(const nlohmann::json& j, LoopConfig& cfg) {
    if (j.contains("threshold")) j.at("threshold").get_to(cfg.threshold);
    if (j.contains("max_rounds")) j.at("max_rounds").get_to(cfg.max_rounds);
    if (j.contains("n")) j.at("n").get_to(cfg.n);
    if (j.contains("summarize_all_samples")) j.at("summarize_all_samples").get_to(cfg.summarize_all_samples);
}

const char* to_string(Termination t) {
    return t == Termination::threshold_met ? "threshold_met" : "round_cap_reached";
}

Termination termination_from_string(const std::string& s) {
    if (s == "threshold_met") return Termination::threshold_met;
    if (s == "round_cap_reached") return Termination::round_cap_reached;
    throw ParseError("unknown termination '" + s + "'");
}

const Prediction* RunOutcome::final_prediction(const std::string& question_id, const std::string& model_id) const {
    const Prediction* latest = nullptr;
    for (const auto& [round, preds] : predictions) {
        auto qit = preds.find(question_id);
        if (qit == preds.end()) continue;
        auto mit = qit->second.find(model_id);
        if (mit != qit->second.end()) latest = &mit->second;  // rounds iterate ascending
    }
    return latest;
}

std::optional<char> RunOutcome::final_answer(const std::string& question_id, const std::string& model_id) const {
    const Prediction* pred = final_prediction(question_id, model_id);
    if (!pred) throw EngineError("no prediction for question '" + question_id + "' from '" + model_id + "'");
    return pred->majority;
}

RoundPredictions latest_state(const std::map<int, RoundPredictions>& by_round, int up_to_round) {
    RoundPredictions state;
    for (const auto& [round, preds] : by_round) {  // ascending, later rounds overwrite
        if (round > up_to_round) break;
        for (const auto& [qid, by_model] : preds) {
            for (const auto& [model, pred] : by_model) {
                state[qid].insert_or_assign(model, pred);
            }
        }
    }
    return state;
}

Transcript build_transcript(const Question& q, const PredictionsByModel& predictions,
                            const std::vector<std::string>& roster, int source_round) {
    Transcript t;
    t.question_id = q.id;
    t.source_round = source_round;
    int k = 0;
    for (const auto& model : roster) {
        auto it = predictions.find(model);
        if (it == predictions.end()) {
            throw EngineError("transcript for '" + q.id + "' is missing a prediction from '" + model + "'");
        }
        const Prediction& pred = it->second;
        if (pred.abstained()) continue;
        ++k;
        t.entries.push_back({"Expert " + std::to_string(k), *pred.majority, pred.summary});
    }
    return t;
}

namespace {

int stage_rank(GenerationStage stage) {
    switch (stage) {
        case GenerationStage::reasoning: return 0;
        case GenerationStage::answer: return 1;
        case GenerationStage::review: return 0;
        case GenerationStage::summary: return 0;
    }
    return 0;
}

/// Canonical in-log order: by question, then model, with each sample's
/// reasoning before its answer and the summary after all samples. Makes the
/// log independent of the concurrency schedule.
void sort_canonical(std::vector<GenRecord>& records) {
    std::sort(records.begin(), records.end(), [](const GenRecord& a, const GenRecord& b) {
        const auto tup = [](const GenRecord& r) {
            return std::make_tuple(r.key.question_id, r.key.model_id,
                                   r.key.stage == GenerationStage::summary ? 1 : 0, r.key.sample_index,
                                   stage_rank(r.key.stage));
        };
        return tup(a) < tup(b);
    });
}

void commit_round(RoundSink* sink, GenCollector* collector, int round, const RoundPredictions& fresh,
                  const RoundPartition& part) {
    std::vector<GenRecord> gens;
    if (collector) gens = collector->drain();
    if (!sink) return;
    sort_canonical(gens);
    std::vector<Prediction> preds;
    for (const auto& [qid, by_model] : fresh) {
        for (const auto& [model, pred] : by_model) preds.push_back(pred);
    }
    sink->round_complete(round, std::move(gens), std::move(preds), part);
}

void report_progress(std::ostream* progress, const RoundPartition& part, std::size_t total) {
    if (!progress) return;
    (*progress) << "round " << part.round << ": P^con = " << std::fixed << std::setprecision(2)
                << part.consensus_rate << "% (" << part.consensus_ids.size() << "/" << total << " consensus, "
                << part.disagreed_ids.size() << " disagreed)\n";
    progress->flush();
}

std::vector<std::string> roster_of(const std::vector<ModelProfile>& participants) {
    std::vector<std::string> roster;
    roster.reserve(participants.size());
    for (const auto& p : participants) roster.push_back(p.model_id);
    return roster;
}

}  // namespace

RoundPredictions run_round(const EngineContext& ctx, const std::set<std::string>& disagreed, const QuestionSet& qs,
                           const std::vector<ModelProfile>& participants, const ModelProfile& summarizer,
                           const RoundPredictions& prior_state, int round, const LoopConfig& cfg) {
    const auto roster = roster_of(participants);

    struct Task {
        const Question* q;
        const ModelProfile* model;
    };
    std::vector<Task> tasks;
    std::vector<Transcript> transcripts;
    for (const auto& qid : disagreed) {
        const Question* q = qs.find(qid);
        if (!q) throw EngineError("disagreed question '" + qid + "' is not in the question set");
        auto it = prior_state.find(qid);
        if (it == prior_state.end()) {
            throw EngineError("disagreed question '" + qid + "' has no prior predictions");
        }
        transcripts.push_back(build_transcript(*q, it->second, roster, round - 1));
        for (const auto& model : participants) tasks.push_back({q, &model});
    }

    EngineContext inner = ctx;
    inner.parallelism = 1;  // concurrency lives at the pair level

    std::vector<Prediction> results(tasks.size());
    parallel_for(tasks.size(), ctx.parallelism, [&](std::size_t i) {
        const Task& task = tasks[i];
        const Transcript& transcript = transcripts[i / participants.size()];
        results[i] = run_zscot_sc(inner, *task.q, *task.model, cfg.n, summarizer,
                                  ReviewMode{transcript, round}, cfg.summarize_all_samples);
    });

    RoundPredictions fresh;
    for (auto& pred : results) {
        auto qid = pred.question_id;
        auto model = pred.model_id;
        fresh[std::move(qid)].insert_or_assign(std::move(model), std::move(pred));
    }
    return fresh;
}

RunOutcome run_collaboration(const EngineContext& ctx, const QuestionSet& qs,
                             const std::vector<ModelProfile>& participants, const ModelProfile& summarizer,
                             const LoopConfig& cfg, RoundSink* sink, std::ostream* progress) {
    if (qs.empty()) throw EngineError("cannot run on an empty question set");
    if (participants.size() < 2) throw EngineError("collaboration needs at least two participants");
    if (cfg.n < 1) throw EngineError("sample count must be at least 1");
    if (cfg.max_rounds < 0) throw EngineError("max_rounds must be non-negative");
    if (cfg.threshold < 0.0 || cfg.threshold > 100.0) throw EngineError("threshold must lie in [0, 100]");
    const auto roster = roster_of(participants);
    for (std::size_t i = 0; i < roster.size(); ++i) {
        for (std::size_t k = i + 1; k < roster.size(); ++k) {
            if (roster[i] == roster[k]) throw EngineError("duplicate participant id '" + roster[i] + "'");
        }
    }

    RunOutcome outcome;

    // Initial pass: every (question, model) pair through self-consistency.
    {
        struct Task {
            const Question* q;
            const ModelProfile* model;
        };
        std::vector<Task> tasks;
        tasks.reserve(qs.size() * participants.size());
        for (const auto& q : qs.questions) {
            for (const auto& model : participants) tasks.push_back({&q, &model});
        }

        EngineContext inner = ctx;
        inner.parallelism = 1;

        std::vector<Prediction> results(tasks.size());
        parallel_for(tasks.size(), ctx.parallelism, [&](std::size_t i) {
            results[i] = run_zscot_sc(inner, *tasks[i].q, *tasks[i].model, cfg.n, summarizer, InitialMode{},
                                      cfg.summarize_all_samples);
        });

        RoundPredictions round0;
        for (auto& pred : results) {
            auto qid = pred.question_id;
            auto model = pred.model_id;
            round0[std::move(qid)].insert_or_assign(std::move(model), std::move(pred));
        }
        outcome.predictions[0] = std::move(round0);
        outcome.partitions.push_back(partition(qs, outcome.predictions[0], roster, 0));
        commit_round(sink, ctx.collector, 0, outcome.predictions[0], outcome.partitions.back());
        report_progress(progress, outcome.partitions.back(), qs.size());
    }

    int round = 0;
    while (outcome.partitions.back().consensus_rate < cfg.threshold && round < cfg.max_rounds) {
        ++round;
        const auto disagreed = outcome.partitions.back().disagreed_ids;
        const RoundPredictions prior = latest_state(outcome.predictions, round - 1);
        RoundPredictions fresh = run_round(ctx, disagreed, qs, participants, summarizer, prior, round, cfg);
        outcome.predictions[round] = std::move(fresh);

        const RoundPredictions state = latest_state(outcome.predictions, round);
        outcome.partitions.push_back(partition(qs, state, roster, round));
        commit_round(sink, ctx.collector, round, outcome.predictions[round], outcome.partitions.back());
        report_progress(progress, outcome.partitions.back(), qs.size());
    }

    outcome.termination = outcome.partitions.back().consensus_rate >= cfg.threshold
                              ? Termination::threshold_met
                              : Termination::round_cap_reached;
    if (sink) sink->run_terminated(outcome.termination, outcome.collaboration_rounds());
    return outcome;
}

}  // namespace icf
