#include "icf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "icf/errors.hpp"

namespace icf {

const char* to_string(Stage stage) {
    return stage == Stage::initial ? "initial" : "post_collaboration";
}

namespace {

const Prediction& prediction_at(const RoundPredictions& preds, const std::string& qid, const std::string& model) {
    auto qit = preds.find(qid);
    if (qit == preds.end()) throw MetricsError("no predictions for question '" + qid + "'");
    auto mit = qit->second.find(model);
    if (mit == qit->second.end()) {
        throw MetricsError("no prediction from '" + model + "' on question '" + qid + "'");
    }
    return mit->second;
}

void require_keyed(const QuestionSet& qs, const char* what) {
    if (!qs.all_keyed()) {
        throw MetricsError(std::string(what) + " needs answer keys for every question");
    }
}

RoundPredictions stage_state(const RunOutcome& outcome, Stage stage) {
    return stage == Stage::initial ? outcome.round0() : latest_state(outcome.predictions);
}

}  // namespace

AccuracyReport accuracy(const RunOutcome& outcome, const QuestionSet& qs, Stage stage,
                        const std::string& model_id) {
    require_keyed(qs, "accuracy");
    if (qs.empty()) throw MetricsError("accuracy over an empty question set");

    const RoundPredictions state = stage_state(outcome, stage);
    AccuracyReport report;
    report.model_id = model_id;
    report.stage = stage;
    for (const auto& q : qs.questions) {
        const Prediction& pred = prediction_at(state, q.id, model_id);
        const bool correct = !pred.abstained() && *pred.majority == *q.answer_key;
        auto& cell = report.per_step[q.step];
        ++cell.total;
        ++report.overall.total;
        if (correct) {
            ++cell.correct;
            ++report.overall.correct;
        }
    }
    return report;
}

std::set<std::string> insist_set(const RunOutcome& outcome, const std::string& model_id) {
    if (outcome.collaboration_rounds() < 1) {
        throw MetricsError("insistence needs at least one collaboration round");
    }
    std::set<std::string> insisting;
    for (const auto& qid : outcome.partitions.front().disagreed_ids) {
        const Prediction& initial = prediction_at(outcome.round0(), qid, model_id);
        if (initial.abstained()) continue;
        const auto final_answer = outcome.final_answer(qid, model_id);
        if (final_answer && *final_answer == *initial.majority) insisting.insert(qid);
    }
    return insisting;
}

ConfidenceReport confidence(const RunOutcome& outcome, const std::string& model_id) {
    const auto insisting = insist_set(outcome, model_id);  // also checks a round ran

    ConfidenceReport report;
    report.model_id = model_id;
    for (const auto& qid : outcome.partitions.front().disagreed_ids) {
        const auto& by_model = outcome.round0().at(qid);
        if (by_model.at(model_id).abstained()) continue;
        const bool insisted = insisting.count(qid) != 0;
        if (support_level(qid, model_id, by_model) == Support::with_support) {
            ++report.with_support_total;
            if (insisted) ++report.with_support_insist;
        } else {
            ++report.without_support_total;
            if (insisted) ++report.without_support_insist;
        }
    }

    if (report.with_support_total == 0 && report.without_support_total == 0) {
        throw MetricsError("confidence for '" + model_id + "' is undefined: no initially disagreed answers");
    }
    double sum = 0.0;
    int defined = 0;
    if (report.with_support_total > 0) {
        report.with_support_defined = true;
        report.insist_with_support =
            static_cast<double>(report.with_support_insist) / report.with_support_total;
        sum += report.insist_with_support;
        ++defined;
    }
    if (report.without_support_total > 0) {
        report.without_support_defined = true;
        report.insist_without_support =
            static_cast<double>(report.without_support_insist) / report.without_support_total;
        sum += report.insist_without_support;
        ++defined;
    }
    report.confidence = sum / defined;
    return report;
}

double consistency(const RoundPredictions& stage_predictions, const std::string& model_id,
                   ConsistencyFilter filter, const QuestionSet& qs) {
    if (qs.empty()) throw MetricsError("consistency over an empty question set");
    if (filter != ConsistencyFilter::all) require_keyed(qs, "consistency split");

    double sum = 0.0;
    int kept = 0;
    for (const auto& q : qs.questions) {
        const Prediction& pred = prediction_at(stage_predictions, q.id, model_id);
        switch (filter) {
            case ConsistencyFilter::all:
                if (pred.n <= 0) throw MetricsError("prediction with non-positive sample count");
                sum += static_cast<double>(pred.vote_count) / pred.n;
                ++kept;
                break;
            case ConsistencyFilter::correct_only:
                if (!pred.abstained() && *pred.majority == *q.answer_key) {
                    sum += pred.vote_count;
                    ++kept;
                }
                break;
            case ConsistencyFilter::incorrect_only:
                if (pred.abstained() || *pred.majority != *q.answer_key) {
                    sum += pred.vote_count;
                    ++kept;
                }
                break;
        }
    }
    if (kept == 0) throw MetricsError("consistency subset for '" + model_id + "' is empty after filtering");
    return sum / kept;
}

ConsistencyReport consistency_report(const RunOutcome& outcome, const QuestionSet& qs, Stage stage,
                                     const std::string& model_id) {
    const RoundPredictions state = stage_state(outcome, stage);
    ConsistencyReport report;
    report.model_id = model_id;
    report.stage = stage;
    report.overall = consistency(state, model_id, ConsistencyFilter::all, qs);
    try {
        report.avg_correct = consistency(state, model_id, ConsistencyFilter::correct_only, qs);
        report.correct_defined = true;
    } catch (const MetricsError&) {
    }
    try {
        report.avg_incorrect = consistency(state, model_id, ConsistencyFilter::incorrect_only, qs);
        report.incorrect_defined = true;
    } catch (const MetricsError&) {
    }
    if (report.correct_defined && report.incorrect_defined) {
        report.difference = report.avg_correct - report.avg_incorrect;
    }
    return report;
}

namespace {

std::vector<double> midranks(const std::vector<double>& values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

double spearman_rank(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size()) throw MetricsError("rank correlation needs equal-length vectors");
    if (xs.size() < 2) throw MetricsError("rank correlation needs at least two points");
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (std::isnan(xs[i]) || std::isnan(ys[i])) throw MetricsError("rank correlation input has NaN");
    }

    const auto rx = midranks(xs);
    const auto ry = midranks(ys);
    const double n = static_cast<double>(xs.size());
    const double mean = (n + 1.0) / 2.0;

    double cov = 0.0, var_x = 0.0, var_y = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double dx = rx[i] - mean;
        const double dy = ry[i] - mean;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if (var_x == 0.0 || var_y == 0.0) {
        throw MetricsError("rank correlation is undefined for constant input");
    }
    return cov / std::sqrt(var_x * var_y);
}

MetricsBundle compute_all_metrics(const RunOutcome& outcome, const QuestionSet& qs,
                                  const std::vector<std::string>& roster) {
    require_keyed(qs, "metrics");
    MetricsBundle bundle;
    for (const auto& model : roster) {
        bundle.accuracy_initial.push_back(accuracy(outcome, qs, Stage::initial, model));
        bundle.accuracy_final.push_back(accuracy(outcome, qs, Stage::post_collaboration, model));
        bundle.consistency_initial.push_back(consistency_report(outcome, qs, Stage::initial, model));
        bundle.consistency_final.push_back(consistency_report(outcome, qs, Stage::post_collaboration, model));
        if (outcome.collaboration_rounds() >= 1) {
            try {
                bundle.confidences.push_back(confidence(outcome, model));
            } catch (const MetricsError&) {
                // left out when undefined for this model
            }
        }
    }

    std::vector<double> conf, gain;
    for (const auto& c : bundle.confidences) {
        for (std::size_t i = 0; i < roster.size(); ++i) {
            if (roster[i] != c.model_id) continue;
            conf.push_back(c.confidence);
            gain.push_back(bundle.accuracy_final[i].overall.percent() -
                           bundle.accuracy_initial[i].overall.percent());
        }
    }
    if (conf.size() >= 2) {
        try {
            bundle.confidence_gain_spearman = spearman_rank(conf, gain);
        } catch (const MetricsError&) {
        }
    }
    return bundle;
}

}  // namespace icf
