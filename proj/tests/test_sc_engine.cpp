#include <doctest.h>

#include <map>

#include "helpers.hpp"
#include "icf/errors.hpp"
#include "icf/prompt.hpp"
#include "icf/sc_engine.hpp"

using namespace icf;
using testutil::LambdaGateway;
using testutil::make_question;

namespace {

ModelProfile participant() { return testutil::scripted_profile("agent", "unused"); }
ModelProfile summarizer_profile() {
    return testutil::scripted_profile("condenser", "unused", ModelRole::summarizer);
}

struct EngineFixture {
    PromptForge forge = PromptForge::builtin();
    GenCollector collector;

    EngineContext ctx(Gateway* gateway, int parallelism = 1, const GenerationCache* cache = nullptr) {
        EngineContext c;
        c.gateway = gateway;
        c.forge = &forge;
        c.parallelism = parallelism;
        c.cache = cache;
        c.collector = &collector;
        return c;
    }
};

}  // namespace

TEST_CASE("letter extraction finds the first standalone in-range letter") {
    CHECK(extract_letter(" B.", 'A', 'E') == Extracted::ok('B'));
    CHECK(extract_letter("(C) because", 'A', 'E') == Extracted::ok('C'));
    CHECK(extract_letter("Vitamin B12 then E", 'A', 'E') == Extracted::ok('E'));  // B12 is glued to digits
    CHECK_FALSE(extract_letter("", 'A', 'E').valid());
    CHECK_FALSE(extract_letter("Choice_E", 'A', 'E').valid());
    CHECK_FALSE(extract_letter("the answer is F", 'A', 'E').valid());
    CHECK(extract_letter("A and B both tempt, final: B", 'A', 'E') == Extracted::ok('A'));
}

TEST_CASE("majority vote picks the modal letter with alphabetical ties") {
    std::vector<Extracted> votes = {Extracted::ok('B'), Extracted::ok('C'), Extracted::ok('B'),
                                    Extracted::invalid("junk")};
    auto res = majority_vote(votes);
    REQUIRE(res.has_value());
    CHECK(res->letter == 'B');
    CHECK(res->count == 2);

    votes = {Extracted::ok('D'), Extracted::ok('A')};
    CHECK(majority_vote(votes)->letter == 'A');  // tie, alphabetically smallest

    votes = {Extracted::invalid("x"), Extracted::invalid("y")};
    CHECK_FALSE(majority_vote(votes).has_value());
    CHECK_FALSE(majority_vote({}).has_value());
}

TEST_CASE("initial mode draws reasoning then answer per sample and summarizes the majority") {
    // Answers by sample: B, B, C. Majority B with 2 votes.
    std::map<int, std::string> answers = {{0, " B."}, {1, " B."}, {2, " C."}};
    std::vector<std::string> summary_prompts;
    LambdaGateway gateway([&](const ModelProfile& p, const RenderedPrompt& prompt, const GenerationKey& k) {
        switch (k.stage) {
            case GenerationStage::reasoning:
                return "reasoning " + std::to_string(k.sample_index) + ".";
            case GenerationStage::answer:
                return answers.at(k.sample_index);
            case GenerationStage::summary:
                CHECK(p.model_id == "condenser");
                summary_prompts.push_back(prompt.user_text());
                return std::string(" joint view.");
            default:
                FAIL("unexpected stage");
                return std::string();
        }
    });

    EngineFixture fx;
    const EngineContext ctx = fx.ctx(&gateway);
    const Question q = make_question("q1", 1, 5);
    const Prediction pred = run_zscot_sc(ctx, q, participant(), 3, summarizer_profile(), InitialMode{});

    CHECK(pred.question_id == "q1");
    CHECK(pred.model_id == "agent");
    CHECK(pred.round == 0);
    REQUIRE(pred.majority.has_value());
    CHECK(*pred.majority == 'B');
    CHECK(pred.vote_count == 2);
    CHECK(pred.n == 3);
    REQUIRE(pred.samples.size() == 3);
    CHECK(pred.samples[0].sample_index == 0);
    CHECK(pred.samples[0].reasoning == "reasoning 0.");
    CHECK(pred.samples[2].extracted == Extracted::ok('C'));
    CHECK(pred.summary == "joint view.");

    // 3 reasoning + 3 answer + 1 summary calls.
    CHECK(gateway.calls() == 7);
    // Only the majority-matching reasonings reach the summarizer.
    REQUIRE(summary_prompts.size() == 1);
    CHECK(summary_prompts[0].find("reasoning 0.") != std::string::npos);
    CHECK(summary_prompts[0].find("reasoning 1.") != std::string::npos);
    CHECK(summary_prompts[0].find("reasoning 2.") == std::string::npos);
    CHECK(summary_prompts[0].find("Majority answer: B") != std::string::npos);

    // The collector saw every generation.
    const auto records = fx.collector.drain();
    CHECK(records.size() == 7);
}

TEST_CASE("summarize_all_samples feeds every reasoning to the summarizer") {
    std::vector<std::string> summary_prompts;
    LambdaGateway gateway([&](const ModelProfile&, const RenderedPrompt& prompt, const GenerationKey& k) {
        switch (k.stage) {
            case GenerationStage::reasoning: return "take " + std::to_string(k.sample_index) + ".";
            case GenerationStage::answer: return std::string(k.sample_index == 0 ? " A." : " B.");
            case GenerationStage::summary:
                summary_prompts.push_back(prompt.user_text());
                return std::string(" all views.");
            default: return std::string();
        }
    });
    EngineFixture fx;
    const Prediction pred = run_zscot_sc(fx.ctx(&gateway), make_question("q", 1, 4), participant(), 2,
                                         summarizer_profile(), InitialMode{}, true);
    CHECK(*pred.majority == 'A');  // 1-1 tie, alphabetical
    REQUIRE(summary_prompts.size() == 1);
    CHECK(summary_prompts[0].find("take 0.") != std::string::npos);
    CHECK(summary_prompts[0].find("take 1.") != std::string::npos);
}

TEST_CASE("an all-invalid sample set abstains and skips the summarizer") {
    LambdaGateway gateway([&](const ModelProfile&, const RenderedPrompt&, const GenerationKey& k) {
        CHECK(k.stage != GenerationStage::summary);
        return k.stage == GenerationStage::reasoning ? std::string("unsure.") : std::string("no idea");
    });
    EngineFixture fx;
    const Prediction pred =
        run_zscot_sc(fx.ctx(&gateway), make_question("q", 1, 3), participant(), 2, summarizer_profile(),
                     InitialMode{});
    CHECK(pred.abstained());
    CHECK(pred.vote_count == 0);
    CHECK(pred.summary.empty());
    CHECK(gateway.calls() == 4);  // two stages per sample, no summary
}

TEST_CASE("review mode issues one generation per sample against the transcript") {
    Transcript tr;
    tr.question_id = "q";
    tr.entries = {{"Expert 1", 'B', "B reasoning."}, {"Expert 2", 'C', "C reasoning."}};

    LambdaGateway gateway([&](const ModelProfile& p, const RenderedPrompt& prompt, const GenerationKey& k) {
        if (k.stage == GenerationStage::summary) return std::string(" reviewed view.");
        CHECK(k.stage == GenerationStage::review);
        CHECK(k.round == 2);
        CHECK(prompt.user_text().find("Expert 1: The answer is B. B reasoning.") != std::string::npos);
        return std::string("C matches the presentation best after review.");
    });
    EngineFixture fx;
    const Prediction pred = run_zscot_sc(fx.ctx(&gateway), make_question("q", 1, 4), participant(), 3,
                                         summarizer_profile(), ReviewMode{tr, 2});
    CHECK(pred.round == 2);
    REQUIRE(pred.majority.has_value());
    CHECK(*pred.majority == 'C');
    CHECK(pred.vote_count == 3);
    // Review keeps the whole completion as the sample reasoning.
    CHECK(pred.samples[0].reasoning == "C matches the presentation best after review.");
    CHECK(gateway.calls() == 4);  // three reviews + one summary
}

TEST_CASE("cached completions bypass the gateway and are marked replayed") {
    const Question q = make_question("q", 1, 3);
    GenerationCache cache;
    for (int i = 0; i < 2; ++i) {
        GenerationKey k;
        k.question_id = "q";
        k.model_id = "agent";
        k.round = 0;
        k.sample_index = i;
        k.stage = GenerationStage::reasoning;
        cache.put(k, "cached reasoning.");
        k.stage = GenerationStage::answer;
        cache.put(k, " A.");
    }
    GenerationKey sk;
    sk.question_id = "q";
    sk.model_id = "agent";
    sk.round = 0;
    sk.sample_index = 0;
    sk.stage = GenerationStage::summary;
    cache.put(sk, " cached summary.");

    LambdaGateway gateway([&](const ModelProfile&, const RenderedPrompt&, const GenerationKey&) {
        FAIL("gateway must not be called when the cache is complete");
        return std::string();
    });
    EngineFixture fx;
    const EngineContext ctx = fx.ctx(&gateway, 1, &cache);
    const Prediction pred = run_zscot_sc(ctx, q, participant(), 2, summarizer_profile(), InitialMode{});
    CHECK(gateway.calls() == 0);
    CHECK(*pred.majority == 'A');
    CHECK(pred.summary == "cached summary.");
    const auto records = fx.collector.drain();
    CHECK(records.size() == 5);
    for (const auto& r : records) CHECK(r.from_cache);
}

TEST_CASE("sampling rejects a non-positive n") {
    LambdaGateway gateway([](const ModelProfile&, const RenderedPrompt&, const GenerationKey&) {
        return std::string();
    });
    EngineFixture fx;
    CHECK_THROWS_AS((void)run_zscot_sc(fx.ctx(&gateway), make_question("q"), participant(), 0,
                                       summarizer_profile(), InitialMode{}),
                    EngineError);
}

TEST_CASE("parallel sampling matches serial results") {
    LambdaGateway gateway([&](const ModelProfile&, const RenderedPrompt&, const GenerationKey& k) {
        switch (k.stage) {
            case GenerationStage::reasoning: return "r" + std::to_string(k.sample_index) + ".";
            case GenerationStage::answer:
                return std::string(" ") + static_cast<char>('A' + k.sample_index % 3) + ".";
            default: return std::string(" s.");
        }
    });
    EngineFixture serial_fx;
    EngineFixture parallel_fx;
    const Question q = make_question("q", 1, 5);
    const Prediction a =
        run_zscot_sc(serial_fx.ctx(&gateway), q, participant(), 9, summarizer_profile(), InitialMode{});
    const Prediction b =
        run_zscot_sc(parallel_fx.ctx(&gateway, 8), q, participant(), 9, summarizer_profile(), InitialMode{});
    CHECK(a == b);
}

TEST_CASE("predictions round-trip through JSON including abstentions") {
    Prediction p;
    p.question_id = "q";
    p.model_id = "m";
    p.round = 2;
    p.majority = 'C';
    p.vote_count = 7;
    p.n = 10;
    p.samples = {{0, "text.", Extracted::ok('C')}, {1, "bad", Extracted::invalid("no in-range letter")}};
    p.summary = "view.";
    nlohmann::json j = p;
    CHECK(j.at("majority") == "C");
    CHECK(j.get<Prediction>() == p);

    p.majority.reset();
    p.vote_count = 0;
    p.summary.clear();
    j = p;
    CHECK(j.at("majority").is_null());
    CHECK(j.get<Prediction>() == p);
}
