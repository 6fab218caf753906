#include <doctest.h>

#include "helpers.hpp"
#include "icf/dataset.hpp"
#include "icf/errors.hpp"

using namespace icf;
using testutil::make_question;
using testutil::make_set;

namespace {

const char* kGoodDataset = R"({
  "source": "mini",
  "questions": [
    {"id": "q1", "step": 1, "stem": "First stem?",
     "choices": {"A": "aye", "B": "bee", "C": "sea"}, "answer": "B"},
    {"id": "q2", "step": 3, "stem": "Second stem?",
     "choices": {"A": "one", "B": "two"}, "answer": "A", "has_media": true}
  ]
})";

}  // namespace

TEST_CASE("question letter helpers") {
    Question q = make_question("q1", 1, 4, 'C');
    CHECK(q.letters() == std::vector<char>{'A', 'B', 'C', 'D'});
    CHECK(q.first_letter() == 'A');
    CHECK(q.last_letter() == 'D');
    CHECK(q.has_letter('D'));
    CHECK_FALSE(q.has_letter('E'));
    CHECK(q.choice_text('B') == "Option B");
    CHECK_THROWS_AS((void)q.choice_text('Z'), std::out_of_range);
}

TEST_CASE("object-form dataset parses with source, keys, and media flags") {
    QuestionSet qs = load_question_set(kGoodDataset, "mini.json");
    REQUIRE(qs.size() == 2);
    CHECK(qs.source == "mini");
    CHECK(qs.questions[0].id == "q1");
    CHECK(qs.questions[0].step == 1);
    CHECK(qs.questions[0].choices == std::vector<std::string>{"aye", "bee", "sea"});
    CHECK(qs.questions[0].answer_key == 'B');
    CHECK_FALSE(qs.questions[0].has_media);
    CHECK(qs.questions[1].has_media);
    CHECK(qs.all_keyed());
    CHECK(qs.find("q2") != nullptr);
    CHECK(qs.find("nope") == nullptr);
}

TEST_CASE("array-form dataset parses and the answer key is optional") {
    QuestionSet qs = load_question_set(
        R"([{"id": "x", "step": 2, "stem": "S?", "choices": {"A": "a", "B": "b"}}])", "arr.json");
    REQUIRE(qs.size() == 1);
    CHECK(qs.source == "arr.json");
    CHECK_FALSE(qs.questions[0].answer_key.has_value());
    CHECK_FALSE(qs.all_keyed());
}

TEST_CASE("malformed JSON and wrong top-level shapes raise parse errors") {
    CHECK_THROWS_AS(load_question_set("{nope", "x"), ParseError);
    CHECK_THROWS_AS(load_question_set("42", "x"), ParseError);
    CHECK_THROWS_AS(load_question_set(R"({"questions": 7})", "x"), ParseError);
}

TEST_CASE("record-level problems carry per-record diagnostics") {
    try {
        load_question_set(R"([{"step": 1, "stem": "S?", "choices": {"A": "a", "B": "b"}}])", "x");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        REQUIRE(e.diagnostics().size() == 1);
        CHECK(e.diagnostics()[0].find("record 1") != std::string::npos);
        CHECK(e.diagnostics()[0].find("'id'") != std::string::npos);
    }

    // Choice letters must be contiguous starting at A.
    CHECK_THROWS_AS(
        load_question_set(R"([{"id": "q", "step": 1, "stem": "S?", "choices": {"A": "a", "C": "c"}}])", "x"),
        ValidationError);
    // The key must name an existing choice.
    CHECK_THROWS_AS(load_question_set(
                        R"([{"id": "q", "step": 1, "stem": "S?", "choices": {"A": "a", "B": "b"}, "answer": "E"}])",
                        "x"),
                    ValidationError);
}

TEST_CASE("set validation aggregates diagnostics and names duplicate ids") {
    QuestionSet qs = make_set({make_question("dup"), make_question("dup"), make_question("ok")});
    qs.questions[2].step = 9;  // out of range alongside the duplicate
    try {
        validate_set(qs);
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        bool saw_dup = false;
        bool saw_step = false;
        for (const auto& d : e.diagnostics()) {
            if (d.find("duplicate id 'dup'") != std::string::npos) saw_dup = true;
            if (d.find("step") != std::string::npos) saw_step = true;
        }
        CHECK(saw_dup);
        CHECK(saw_step);
    }
}

TEST_CASE("single question diagnostics cover each field rule") {
    Question q = make_question("q", 1, 3, 'B');
    CHECK(validate_question(q).empty());

    Question bad = q;
    bad.id.clear();
    bad.stem.clear();
    bad.choices = {"only one"};
    bad.step = 0;
    bad.answer_key = 'Q';
    const auto diags = validate_question(bad);
    CHECK(diags.size() >= 4);
}

TEST_CASE("text-only filter drops media questions and keeps order") {
    QuestionSet qs = make_set({make_question("a"), make_question("b"), make_question("c")});
    qs.questions[1].has_media = true;
    QuestionSet filtered = filter_text_only(qs);
    REQUIRE(filtered.size() == 2);
    CHECK(filtered.questions[0].id == "a");
    CHECK(filtered.questions[1].id == "c");
    CHECK(filtered.source == qs.source);
}
