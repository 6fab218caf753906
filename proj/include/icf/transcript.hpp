#pragma once

#include <string>
#include <vector>

namespace icf {

/// One panelist's contribution to a review round: their answer letter and a
/// summary of the reasoning behind it. The label is display-facing
/// ("Expert 1", "Expert 2", ...) and anonymizes the underlying model.
struct TranscriptEntry {
    std::string label;
    char answer = '\0';
    std::string summary;

    bool operator==(const TranscriptEntry&) const = default;
};

/// Everything a reviewer sees about the other panelists for one question.
struct Transcript {
    std::string question_id;
    std::vector<TranscriptEntry> entries;
    int source_round = 0;

    bool empty() const { return entries.empty(); }
    bool operator==(const Transcript&) const = default;
};

}  // namespace icf
