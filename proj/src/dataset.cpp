#include "icf/dataset.hpp"

#include <set>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "icf/errors.hpp"

namespace icf {

using nlohmann::json;

std::vector<char> Question::letters() const {
    std::vector<char> out;
    out.reserve(choices.size());
    for (std::size_t i = 0; i < choices.size(); ++i) {
        out.push_back(static_cast<char>('A' + i));
    }
    return out;
}

bool Question::has_letter(char letter) const {
    return letter >= 'A' && letter < static_cast<char>('A' + static_cast<int>(choices.size()));
}

const std::string& Question::choice_text(char letter) const {
    if (!has_letter(letter)) {
        throw std::out_of_range("question '" + id + "' has no choice '" + std::string(1, letter) + "'");
    }
    return choices[static_cast<std::size_t>(letter - 'A')];
}

const Question* QuestionSet::find(const std::string& id) const {
    for (const auto& q : questions) {
        if (q.id == id) return &q;
    }
    return nullptr;
}

bool QuestionSet::all_keyed() const {
    for (const auto& q : questions) {
        if (!q.answer_key.has_value()) return false;
    }
    return true;
}

std::vector<std::string> validate_question(const Question& q) {
    std::vector<std::string> diags;
    const std::string who = "question '" + (q.id.empty() ? std::string("<missing id>") : q.id) + "'";
    if (q.id.empty()) {
        diags.push_back(who + ": empty id");
    }
    if (q.step < 1 || q.step > 3) {
        diags.push_back(who + ": step " + std::to_string(q.step) + " outside 1..3");
    }
    if (q.stem.empty()) {
        diags.push_back(who + ": empty stem");
    }
    if (q.choices.size() < 2 || q.choices.size() > 26) {
        diags.push_back(who + ": " + std::to_string(q.choices.size()) + " choices, expected 2..26");
    }
    for (std::size_t i = 0; i < q.choices.size(); ++i) {
        if (q.choices[i].empty()) {
            diags.push_back(who + ": empty text for choice '" + std::string(1, static_cast<char>('A' + i)) + "'");
        }
    }
    if (q.answer_key && !q.has_letter(*q.answer_key)) {
        diags.push_back(who + ": answer key '" + std::string(1, *q.answer_key) + "' is not one of its choices");
    }
    return diags;
}

void validate_set(const QuestionSet& qs) {
    std::vector<std::string> diags;
    std::unordered_set<std::string> seen;
    for (const auto& q : qs.questions) {
        auto qd = validate_question(q);
        diags.insert(diags.end(), qd.begin(), qd.end());
        if (!q.id.empty() && !seen.insert(q.id).second) {
            diags.push_back("duplicate id '" + q.id + "'");
        }
    }
    if (!diags.empty()) {
        throw ValidationError("question set '" + qs.source + "' failed validation", std::move(diags));
    }
}

namespace {

Question parse_question(const json& rec, std::size_t index, std::vector<std::string>& diags) {
    Question q;
    const std::string where = "record " + std::to_string(index);
    if (!rec.is_object()) {
        diags.push_back(where + ": not an object");
        return q;
    }
    if (rec.contains("id") && rec["id"].is_string()) {
        q.id = rec["id"].get<std::string>();
    } else {
        diags.push_back(where + ": missing string field 'id'");
    }
    if (rec.contains("step") && rec["step"].is_number_integer()) {
        q.step = rec["step"].get<int>();
    } else {
        diags.push_back(where + ": missing integer field 'step'");
    }
    if (rec.contains("stem") && rec["stem"].is_string()) {
        q.stem = rec["stem"].get<std::string>();
    } else {
        diags.push_back(where + ": missing string field 'stem'");
    }
    if (rec.contains("choices") && rec["choices"].is_object()) {
        // json objects iterate in key order, so contiguous letters come out
        // as A, B, C, ... when the input is well-formed.
        std::size_t i = 0;
        bool shape_ok = true;
        for (const auto& [letter, text] : rec["choices"].items()) {
            const char expected = static_cast<char>('A' + i);
            if (letter.size() != 1 || letter[0] != expected) {
                diags.push_back(where + ": choice letters must be contiguous uppercase from 'A'; found '" +
                                letter + "' where '" + std::string(1, expected) + "' was expected");
                shape_ok = false;
                break;
            }
            if (!text.is_string()) {
                diags.push_back(where + ": choice '" + letter + "' text is not a string");
                shape_ok = false;
                break;
            }
            q.choices.push_back(text.get<std::string>());
            ++i;
        }
        if (!shape_ok) q.choices.clear();
    } else {
        diags.push_back(where + ": missing object field 'choices'");
    }
    if (rec.contains("answer") && !rec["answer"].is_null()) {
        if (rec["answer"].is_string() && rec["answer"].get<std::string>().size() == 1) {
            q.answer_key = rec["answer"].get<std::string>()[0];
        } else {
            diags.push_back(where + ": field 'answer' must be a single-letter string");
        }
    }
    if (rec.contains("has_media")) {
        if (rec["has_media"].is_boolean()) {
            q.has_media = rec["has_media"].get<bool>();
        } else {
            diags.push_back(where + ": field 'has_media' must be a boolean");
        }
    }
    return q;
}

}  // namespace

QuestionSet load_question_set(const std::string& serialized, const std::string& source_label) {
    json doc;
    try {
        doc = json::parse(serialized);
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("dataset is not valid JSON: ") + e.what());
    }

    QuestionSet qs;
    qs.source = source_label;

    const json* records = nullptr;
    if (doc.is_array()) {
        records = &doc;
    } else if (doc.is_object() && doc.contains("questions") && doc["questions"].is_array()) {
        records = &doc["questions"];
        if (doc.contains("source") && doc["source"].is_string()) {
            qs.source = doc["source"].get<std::string>();
        }
    } else {
        throw ParseError("dataset must be a JSON array of question records or {\"source\", \"questions\"}");
    }

    std::vector<std::string> diags;
    qs.questions.reserve(records->size());
    for (std::size_t i = 0; i < records->size(); ++i) {
        qs.questions.push_back(parse_question((*records)[i], i + 1, diags));
    }
    if (!diags.empty()) {
        throw ValidationError("dataset '" + qs.source + "' has malformed records", std::move(diags));
    }
    validate_set(qs);
    return qs;
}

QuestionSet filter_text_only(const QuestionSet& qs) {
    QuestionSet out;
    out.source = qs.source;
    for (const auto& q : qs.questions) {
        if (!q.has_media) out.questions.push_back(q);
    }
    return out;
}

}  // namespace icf
