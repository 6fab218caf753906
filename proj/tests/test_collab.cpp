#include <doctest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "icf/collab.hpp"
#include "icf/dispatch.hpp"
#include "icf/errors.hpp"
#include "icf/prompt.hpp"

using namespace icf;
using testutil::make_question;
using testutil::make_set;

namespace {

Prediction pred(std::string qid, std::string model, std::optional<char> letter, int round) {
    Prediction p;
    p.question_id = std::move(qid);
    p.model_id = std::move(model);
    p.round = round;
    p.majority = letter;
    p.vote_count = letter ? 2 : 0;
    p.n = 2;
    p.summary = letter ? std::string("Case for ") + *letter + "." : "";
    return p;
}

BehaviorTable dist_table(char letter, double sway = 0.5) {
    nlohmann::json doc = {{"defaults",
                           {{"distribution", {{std::string(1, letter), 1.0}}},
                            {"sway_probability", sway}}}};
    return BehaviorTable::from_json(doc);
}

/// Society where b dissents to `dissent_letter` on the given questions and
/// sways with the given probability; everyone else answers `base` always.
struct Society {
    DispatchGateway gateway{11};
    PromptForge forge = PromptForge::builtin();
    GenCollector collector;
    std::vector<ModelProfile> participants;
    ModelProfile summarizer = testutil::scripted_profile("sum", "sum_table", ModelRole::summarizer);

    Society(const std::vector<std::string>& dissent_qids, double sway) {
        participants = {testutil::scripted_profile("a", "table_a"),
                        testutil::scripted_profile("b", "table_b"),
                        testutil::scripted_profile("c", "table_c")};
        gateway.register_behavior("table_a", dist_table('A'));
        gateway.register_behavior("table_c", dist_table('A'));
        BehaviorTable b = dist_table('A');
        for (const auto& qid : dissent_qids) {
            BehaviorOverride ov;
            ov.distribution = std::map<char, double>{{'B', 1.0}};
            ov.sway_probability = sway;
            b.overrides[qid] = ov;
        }
        gateway.register_behavior("table_b", b);
        gateway.register_behavior("sum_table", BehaviorTable{});
    }

    EngineContext ctx() {
        EngineContext c;
        c.gateway = &gateway;
        c.forge = &forge;
        c.parallelism = 3;
        c.collector = &collector;
        return c;
    }
};

struct RecordingSink : RoundSink {
    std::vector<int> rounds;
    std::vector<std::size_t> generation_counts;
    std::vector<std::size_t> prediction_counts;
    std::optional<Termination> termination;
    int terminated_rounds = -1;

    void round_complete(int round, std::vector<GenRecord> generations, std::vector<Prediction> predictions,
                        const RoundPartition& partition) override {
        CHECK(partition.round == round);
        rounds.push_back(round);
        generation_counts.push_back(generations.size());
        prediction_counts.push_back(predictions.size());
    }
    void run_terminated(Termination t, int rounds_done) override {
        termination = t;
        terminated_rounds = rounds_done;
    }
};

}  // namespace

TEST_CASE("latest state keeps the freshest prediction per question") {
    std::map<int, RoundPredictions> by_round;
    by_round[0]["q1"]["a"] = pred("q1", "a", 'A', 0);
    by_round[0]["q2"]["a"] = pred("q2", "a", 'B', 0);
    by_round[1]["q2"]["a"] = pred("q2", "a", 'C', 1);
    by_round[2]["q2"]["a"] = pred("q2", "a", 'D', 2);

    const RoundPredictions latest = latest_state(by_round);
    CHECK(*latest.at("q1").at("a").majority == 'A');
    CHECK(*latest.at("q2").at("a").majority == 'D');

    const RoundPredictions upto1 = latest_state(by_round, 1);
    CHECK(*upto1.at("q2").at("a").majority == 'C');
}

TEST_CASE("transcripts label non-abstaining panelists contiguously in roster order") {
    Question q = make_question("q", 1, 4);
    PredictionsByModel preds;
    preds["a"] = pred("q", "a", 'B', 0);
    preds["b"] = pred("q", "b", std::nullopt, 0);
    preds["c"] = pred("q", "c", 'C', 0);

    const Transcript tr = build_transcript(q, preds, {"a", "b", "c"}, 0);
    CHECK(tr.question_id == "q");
    CHECK(tr.source_round == 0);
    REQUIRE(tr.entries.size() == 2);  // the abstainer is omitted
    CHECK(tr.entries[0].label == "Expert 1");
    CHECK(tr.entries[0].answer == 'B');
    CHECK(tr.entries[0].summary == "Case for B.");
    CHECK(tr.entries[1].label == "Expert 2");
    CHECK(tr.entries[1].answer == 'C');

    preds.erase("c");
    CHECK_THROWS_AS((void)build_transcript(q, preds, {"a", "b", "c"}, 0), EngineError);
}

TEST_CASE("a society that talks itself into agreement stops at the threshold") {
    QuestionSet qs = make_set({make_question("q1", 1, 4), make_question("q2", 2, 4),
                               make_question("q3", 2, 4), make_question("q4", 3, 4)});
    Society society({"q3", "q4"}, 1.0);
    LoopConfig cfg;
    cfg.threshold = 80.0;
    cfg.max_rounds = 5;
    cfg.n = 2;

    RecordingSink sink;
    std::ostringstream progress;
    const EngineContext ctx = society.ctx();
    const RunOutcome outcome =
        run_collaboration(ctx, qs, society.participants, society.summarizer, cfg, &sink, &progress);

    REQUIRE(outcome.partitions.size() == 2);
    CHECK(outcome.partitions[0].consensus_rate == doctest::Approx(50.0));
    CHECK(outcome.partitions[0].disagreed_ids == std::set<std::string>{"q3", "q4"});
    CHECK(outcome.partitions[1].consensus_rate == doctest::Approx(100.0));
    CHECK(outcome.termination == Termination::threshold_met);
    CHECK(outcome.collaboration_rounds() == 1);

    // Consensus questions are frozen: round 1 holds only the disagreed two.
    REQUIRE(outcome.predictions.count(1) == 1);
    CHECK(outcome.predictions.at(1).size() == 2);
    CHECK(outcome.predictions.at(1).count("q3") == 1);
    CHECK(outcome.final_answer("q3", "b") == 'A');
    CHECK(outcome.final_answer("q1", "b") == 'A');

    // Sink saw both rounds and the termination.
    CHECK(sink.rounds == std::vector<int>{0, 1});
    CHECK(sink.prediction_counts == std::vector<std::size_t>{12, 6});
    REQUIRE(sink.termination.has_value());
    CHECK(*sink.termination == Termination::threshold_met);
    CHECK(sink.terminated_rounds == 1);

    const std::string log = progress.str();
    CHECK(log.find("round 0: P^con = 50.00% (2/4 consensus, 2 disagreed)") != std::string::npos);
    CHECK(log.find("round 1: P^con = 100.00%") != std::string::npos);
}

TEST_CASE("a stubborn dissenter runs into the round cap with a flat consensus rate") {
    QuestionSet qs = make_set({make_question("q1", 1, 4), make_question("q2", 1, 4)});
    Society society({"q2"}, 0.0);
    LoopConfig cfg;
    cfg.threshold = 80.0;
    cfg.max_rounds = 3;
    cfg.n = 2;

    const EngineContext ctx = society.ctx();
    const RunOutcome outcome =
        run_collaboration(ctx, qs, society.participants, society.summarizer, cfg);

    REQUIRE(outcome.partitions.size() == 4);  // initial pass + three capped rounds
    for (const auto& part : outcome.partitions) {
        CHECK(part.consensus_rate == doctest::Approx(50.0));
        CHECK(part.disagreed_ids == std::set<std::string>{"q2"});
    }
    CHECK(outcome.termination == Termination::round_cap_reached);
}

TEST_CASE("an already-met threshold ends the run after the initial pass") {
    QuestionSet qs = make_set({make_question("q1", 1, 4)});
    Society society({}, 0.5);
    LoopConfig cfg;
    cfg.threshold = 100.0;
    cfg.n = 2;

    const EngineContext ctx = society.ctx();
    const RunOutcome outcome = run_collaboration(ctx, qs, society.participants, society.summarizer, cfg);
    CHECK(outcome.partitions.size() == 1);
    CHECK(outcome.collaboration_rounds() == 0);
    CHECK(outcome.termination == Termination::threshold_met);
}

TEST_CASE("collaboration validates its inputs up front") {
    QuestionSet qs = make_set({make_question("q1", 1, 4)});
    Society society({}, 0.5);
    const EngineContext ctx = society.ctx();
    LoopConfig cfg;
    cfg.n = 2;

    CHECK_THROWS_AS((void)run_collaboration(ctx, make_set({}), society.participants, society.summarizer, cfg),
                    EngineError);

    std::vector<ModelProfile> one = {society.participants[0]};
    CHECK_THROWS_AS((void)run_collaboration(ctx, qs, one, society.summarizer, cfg), EngineError);

    std::vector<ModelProfile> dup = {society.participants[0], society.participants[0]};
    CHECK_THROWS_AS((void)run_collaboration(ctx, qs, dup, society.summarizer, cfg), EngineError);

    LoopConfig bad = cfg;
    bad.n = 0;
    CHECK_THROWS_AS((void)run_collaboration(ctx, qs, society.participants, society.summarizer, bad),
                    EngineError);
    bad = cfg;
    bad.threshold = 101.0;
    CHECK_THROWS_AS((void)run_collaboration(ctx, qs, society.participants, society.summarizer, bad),
                    EngineError);
    bad = cfg;
    bad.max_rounds = -1;
    CHECK_THROWS_AS((void)run_collaboration(ctx, qs, society.participants, society.summarizer, bad),
                    EngineError);
}

TEST_CASE("loop config serialization defaults missing fields") {
    const LoopConfig cfg = nlohmann::json::parse(R"({"threshold": 70.0})").get<LoopConfig>();
    CHECK(cfg.threshold == 70.0);
    CHECK(cfg.max_rounds == 10);
    CHECK(cfg.n == 10);
    CHECK_FALSE(cfg.summarize_all_samples);
    nlohmann::json j = cfg;
    CHECK(j.get<LoopConfig>() == cfg);
}
