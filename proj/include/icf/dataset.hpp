#pragma once

#include <optional>
#include <string>
#include <vector>

namespace icf {

/// One USMLE-style multiple-choice item. Choice letters are implicit:
/// choices[0] is 'A', choices[1] is 'B', and so on, always contiguous.
struct Question {
    std::string id;
    int step = 1;  // exam step, 1..3
    std::string stem;
    std::vector<std::string> choices;
    std::optional<char> answer_key;
    bool has_media = false;

    char first_letter() const { return 'A'; }
    char last_letter() const { return static_cast<char>('A' + static_cast<int>(choices.size()) - 1); }
    std::vector<char> letters() const;
    bool has_letter(char letter) const;
    const std::string& choice_text(char letter) const;

    bool operator==(const Question&) const = default;
};

struct QuestionSet {
    std::vector<Question> questions;
    std::string source;

    std::size_t size() const { return questions.size(); }
    bool empty() const { return questions.empty(); }
    const Question* find(const std::string& id) const;
    bool all_keyed() const;

    bool operator==(const QuestionSet&) const = default;
};

/// Diagnostics for a single question; empty when the question is valid.
std::vector<std::string> validate_question(const Question& q);

/// Throws ValidationError listing every problem across the set,
/// including duplicate ids.
void validate_set(const QuestionSet& qs);

/// Parses the documented JSON dataset format and validates it.
/// Accepts a top-level array of question records or an object
/// {"source": ..., "questions": [...]}. Throws ParseError on malformed
/// input and ValidationError with per-question diagnostics.
QuestionSet load_question_set(const std::string& serialized, const std::string& source_label = "");

/// Subset with has_media == false, original order preserved.
QuestionSet filter_text_only(const QuestionSet& qs);

}  // namespace icf
