#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "icf/errors.hpp"
#include "icf/metrics.hpp"

using namespace icf;
using testutil::make_question;
using testutil::make_set;

namespace {

Prediction pred(std::string qid, std::string model, std::optional<char> letter, int vote_count, int n,
                int round) {
    Prediction p;
    p.question_id = std::move(qid);
    p.model_id = std::move(model);
    p.round = round;
    p.majority = letter;
    p.vote_count = vote_count;
    p.n = n;
    return p;
}

/// Two models, five questions, one collaboration round. Hand-checked below.
struct Fixture {
    QuestionSet qs = make_set({make_question("q1", 1, 5, 'A'), make_question("q2", 1, 5, 'B'),
                               make_question("q3", 2, 5, 'C'), make_question("q4", 2, 5, 'A'),
                               make_question("q5", 2, 5, 'B')});
    RunOutcome outcome;

    Fixture() {
        RoundPredictions r0;
        r0["q1"]["m1"] = pred("q1", "m1", 'A', 3, 4, 0);
        r0["q1"]["m2"] = pred("q1", "m2", 'A', 4, 4, 0);
        r0["q2"]["m1"] = pred("q2", "m1", 'B', 2, 4, 0);
        r0["q2"]["m2"] = pred("q2", "m2", 'C', 3, 4, 0);
        r0["q3"]["m1"] = pred("q3", "m1", 'D', 3, 4, 0);
        r0["q3"]["m2"] = pred("q3", "m2", 'C', 2, 4, 0);
        r0["q4"]["m1"] = pred("q4", "m1", std::nullopt, 0, 4, 0);
        r0["q4"]["m2"] = pred("q4", "m2", 'A', 2, 4, 0);
        r0["q5"]["m1"] = pred("q5", "m1", 'B', 4, 4, 0);
        r0["q5"]["m2"] = pred("q5", "m2", 'B', 3, 4, 0);

        RoundPredictions r1;
        r1["q2"]["m1"] = pred("q2", "m1", 'B', 3, 4, 1);  // insists
        r1["q2"]["m2"] = pred("q2", "m2", 'B', 4, 4, 1);  // concedes
        r1["q3"]["m1"] = pred("q3", "m1", 'C', 4, 4, 1);  // concedes
        r1["q3"]["m2"] = pred("q3", "m2", 'C', 4, 4, 1);  // insists
        r1["q4"]["m1"] = pred("q4", "m1", 'A', 2, 4, 1);  // was abstaining
        r1["q4"]["m2"] = pred("q4", "m2", 'A', 3, 4, 1);  // insists

        RoundPartition p0;
        p0.round = 0;
        p0.consensus_ids = {"q1", "q5"};
        p0.disagreed_ids = {"q2", "q3", "q4"};
        p0.consensus_rate = 40.0;
        RoundPartition p1;
        p1.round = 1;
        p1.consensus_ids = {"q1", "q2", "q3", "q4", "q5"};
        p1.consensus_rate = 100.0;

        outcome.partitions = {p0, p1};
        outcome.predictions[0] = std::move(r0);
        outcome.predictions[1] = std::move(r1);
        outcome.termination = Termination::threshold_met;
    }
};

}  // namespace

TEST_CASE("accuracy pools per-step counts and treats abstentions as wrong") {
    Fixture fx;
    const AccuracyReport initial = accuracy(fx.outcome, fx.qs, Stage::initial, "m1");
    CHECK(initial.per_step.at(1).correct == 2);
    CHECK(initial.per_step.at(1).total == 2);
    CHECK(initial.per_step.at(2).correct == 1);  // q3 wrong, q4 abstained
    CHECK(initial.per_step.at(2).total == 3);
    CHECK(initial.overall.correct == 3);
    CHECK(initial.overall.percent() == doctest::Approx(60.0));

    const AccuracyReport fin = accuracy(fx.outcome, fx.qs, Stage::post_collaboration, "m1");
    CHECK(fin.overall.correct == 5);
    CHECK(fin.overall.percent() == doctest::Approx(100.0));

    const AccuracyReport m2 = accuracy(fx.outcome, fx.qs, Stage::initial, "m2");
    CHECK(m2.overall.correct == 4);
}

TEST_CASE("accuracy requires answer keys") {
    Fixture fx;
    fx.qs.questions[2].answer_key.reset();
    CHECK_THROWS_AS((void)accuracy(fx.outcome, fx.qs, Stage::initial, "m1"), MetricsError);
}

TEST_CASE("insist sets cover initially disagreed questions the model never left") {
    Fixture fx;
    CHECK(insist_set(fx.outcome, "m1") == std::set<std::string>{"q2"});
    CHECK(insist_set(fx.outcome, "m2") == std::set<std::string>{"q3", "q4"});

    RunOutcome no_rounds;
    no_rounds.partitions = {fx.outcome.partitions[0]};
    no_rounds.predictions[0] = fx.outcome.predictions.at(0);
    CHECK_THROWS_AS((void)insist_set(no_rounds, "m1"), MetricsError);
}

TEST_CASE("confidence splits insist rates by round-0 support") {
    Fixture fx;
    // m1: q2 and q3 both lack support (m2 held other letters); q4 is out of
    // scope because m1 abstained at round 0. Insisted only on q2.
    const ConfidenceReport m1 = confidence(fx.outcome, "m1");
    CHECK_FALSE(m1.with_support_defined);
    CHECK(m1.without_support_defined);
    CHECK(m1.without_support_total == 2);
    CHECK(m1.without_support_insist == 1);
    CHECK(m1.insist_without_support == doctest::Approx(0.5));
    CHECK(m1.confidence == doctest::Approx(0.5));

    // m2: all three disagreed questions lack support (m1 differed or
    // abstained); insisted on q3 and q4.
    const ConfidenceReport m2 = confidence(fx.outcome, "m2");
    CHECK(m2.without_support_total == 3);
    CHECK(m2.without_support_insist == 2);
    CHECK(m2.confidence == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("consistency averages vote shares overall and raw counts per split") {
    Fixture fx;
    const RoundPredictions& r0 = fx.outcome.round0();
    CHECK(consistency(r0, "m1", ConsistencyFilter::all, fx.qs) ==
          doctest::Approx((0.75 + 0.5 + 0.75 + 0.0 + 1.0) / 5));
    CHECK(consistency(r0, "m1", ConsistencyFilter::correct_only, fx.qs) == doctest::Approx(3.0));
    // Incorrect split: q3 with 3 votes plus the abstention carrying 0.
    CHECK(consistency(r0, "m1", ConsistencyFilter::incorrect_only, fx.qs) == doctest::Approx(1.5));

    const ConsistencyReport rep = consistency_report(fx.outcome, fx.qs, Stage::initial, "m1");
    CHECK(rep.correct_defined);
    CHECK(rep.incorrect_defined);
    CHECK(rep.difference == doctest::Approx(1.5));
    CHECK(rep.overall == doctest::Approx(0.6));

    // Post-collaboration m1 answers everything correctly: the incorrect
    // split is empty and flagged undefined.
    const ConsistencyReport fin = consistency_report(fx.outcome, fx.qs, Stage::post_collaboration, "m1");
    CHECK(fin.correct_defined);
    CHECK_FALSE(fin.incorrect_defined);
}

TEST_CASE("spearman handles ties by average rank and rejects degenerate input") {
    CHECK(spearman_rank({1, 2, 3}, {2, 1, 3}) == doctest::Approx(0.5));
    CHECK(spearman_rank({1, 2, 3}, {10, 20, 30}) == doctest::Approx(1.0));
    CHECK(spearman_rank({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(spearman_rank({1, 1, 2}, {1, 2, 3}) == doctest::Approx(1.5 / std::sqrt(3.0)));

    CHECK_THROWS_AS((void)spearman_rank({1, 1, 1}, {1, 2, 3}), MetricsError);  // zero variance
    CHECK_THROWS_AS((void)spearman_rank({1, 2}, {1, 2, 3}), MetricsError);     // length mismatch
    CHECK_THROWS_AS((void)spearman_rank({1}, {1}), MetricsError);              // too short
}

TEST_CASE("the bundle gathers every table and correlates confidence with gains") {
    Fixture fx;
    const MetricsBundle bundle = compute_all_metrics(fx.outcome, fx.qs, {"m1", "m2"});
    REQUIRE(bundle.accuracy_initial.size() == 2);
    REQUIRE(bundle.accuracy_final.size() == 2);
    REQUIRE(bundle.confidences.size() == 2);
    REQUIRE(bundle.consistency_initial.size() == 2);
    CHECK(bundle.accuracy_initial[0].model_id == "m1");

    // m1: confidence 0.5, accuracy gain +40. m2: confidence 2/3, gain +20.
    // Lower confidence pairing with the larger gain gives a perfect inverse
    // rank correlation.
    REQUIRE(bundle.confidence_gain_spearman.has_value());
    CHECK(*bundle.confidence_gain_spearman == doctest::Approx(-1.0));
}
