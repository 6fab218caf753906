#include <doctest.h>

#include "helpers.hpp"
#include "icf/consensus.hpp"
#include "icf/errors.hpp"

using namespace icf;
using testutil::make_question;
using testutil::make_set;

namespace {

Prediction pred(std::string qid, std::string model, std::optional<char> letter, int round = 0) {
    Prediction p;
    p.question_id = std::move(qid);
    p.model_id = std::move(model);
    p.round = round;
    p.majority = letter;
    p.vote_count = letter ? 3 : 0;
    p.n = 3;
    return p;
}

}  // namespace

TEST_CASE("question classification needs identical valid letters") {
    CHECK(classify_question({pred("q", "a", 'B'), pred("q", "b", 'B')}) == Agreement::consensus);
    CHECK(classify_question({pred("q", "a", 'B'), pred("q", "b", 'C')}) == Agreement::disagreement);
    CHECK(classify_question({pred("q", "a", 'B'), pred("q", "b", std::nullopt)}) ==
          Agreement::disagreement);
    CHECK(classify_question({pred("q", "a", std::nullopt), pred("q", "b", std::nullopt)}) ==
          Agreement::disagreement);
    CHECK_THROWS_AS((void)classify_question({}), EngineError);
}

TEST_CASE("partition splits questions and reports the rate in percent") {
    QuestionSet qs = make_set({make_question("q1"), make_question("q2"), make_question("q3"),
                               make_question("q4")});
    RoundPredictions preds;
    for (const char* qid : {"q1", "q2", "q3", "q4"}) {
        preds[qid]["a"] = pred(qid, "a", 'A');
        preds[qid]["b"] = pred(qid, "b", 'A');
    }
    preds["q2"]["b"].majority = 'B';          // letter clash
    preds["q4"]["a"].majority = std::nullopt; // abstention

    const RoundPartition part = partition(qs, preds, {"a", "b"}, 0);
    CHECK(part.round == 0);
    CHECK(part.consensus_ids == std::set<std::string>{"q1", "q3"});
    CHECK(part.disagreed_ids == std::set<std::string>{"q2", "q4"});
    CHECK(part.consensus_rate == doctest::Approx(50.0));
}

TEST_CASE("partition validates its inputs") {
    QuestionSet qs = make_set({make_question("q1")});
    RoundPredictions preds;
    preds["q1"]["a"] = pred("q1", "a", 'A');
    preds["q1"]["b"] = pred("q1", "b", 'A');

    CHECK_THROWS_AS((void)partition(make_set({}), preds, {"a", "b"}, 0), EngineError);
    CHECK_THROWS_AS((void)partition(qs, preds, {"a"}, 0), EngineError);         // roster too small
    CHECK_THROWS_AS((void)partition(qs, preds, {"a", "b", "c"}, 0), EngineError); // missing prediction

    RoundPredictions empty;
    CHECK_THROWS_AS((void)partition(qs, empty, {"a", "b"}, 0), EngineError);
}

TEST_CASE("partitions round-trip through JSON") {
    RoundPartition part;
    part.round = 2;
    part.consensus_ids = {"q1", "q3"};
    part.disagreed_ids = {"q2"};
    part.consensus_rate = 66.67;
    nlohmann::json j = part;
    CHECK(j.get<RoundPartition>() == part);
}

TEST_CASE("support level checks whether any other model shares the letter") {
    PredictionsByModel by_model;
    by_model["me"] = pred("q", "me", 'B');
    by_model["peer1"] = pred("q", "peer1", 'C');
    by_model["peer2"] = pred("q", "peer2", 'C');
    CHECK(support_level("q", "me", by_model) == Support::without_support);

    by_model["peer2"].majority = 'B';
    CHECK(support_level("q", "me", by_model) == Support::with_support);

    // An abstaining peer lends no support.
    by_model["peer2"].majority = std::nullopt;
    CHECK(support_level("q", "me", by_model) == Support::without_support);

    // The model itself must hold a valid majority and be present.
    by_model["me"].majority = std::nullopt;
    CHECK_THROWS_AS((void)support_level("q", "me", by_model), EngineError);
    by_model.erase("me");
    CHECK_THROWS_AS((void)support_level("q", "me", by_model), EngineError);
}
