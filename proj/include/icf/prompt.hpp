#pragma once

#include <map>
#include <string>
#include <vector>

#include "icf/dataset.hpp"
#include "icf/transcript.hpp"

namespace icf {

enum class SpeakerRole { system, user, assistant_prefix };

const char* to_string(SpeakerRole role);

struct PromptSegment {
    SpeakerRole role = SpeakerRole::user;
    std::string text;

    bool operator==(const PromptSegment&) const = default;
};

/// A prompt after placeholder substitution, still structured by speaker so
/// each backend can shape it for its own wire format.
struct RenderedPrompt {
    std::vector<PromptSegment> segments;
    std::string dialect_id;

    /// All user-role text, blank-line separated. Most prompts have exactly
    /// one user segment, so this is usually just that segment's text.
    std::string user_text() const;
    const PromptSegment* find(SpeakerRole role) const;

    bool operator==(const RenderedPrompt&) const = default;
};

enum class DialectKind { role_tagged, instruction_bracketed };

/// How a flat single-string prompt is assembled for models that do not take
/// structured chat messages.
struct Dialect {
    std::string id;
    DialectKind kind = DialectKind::role_tagged;
    // role_tagged: each segment becomes "<marker>: <text>".
    std::string system_marker;
    std::string user_marker;
    std::string assistant_marker;
    // instruction_bracketed: open + instructions + close + assistant text.
    std::string open;
    std::string close;
};

std::string flatten(const RenderedPrompt& prompt, const Dialect& dialect);

class DialectRegistry {
public:
    static DialectRegistry builtin();

    void add(Dialect dialect);  // throws ConfigError on bad or duplicate entries
    const Dialect& get(const std::string& id) const;
    bool contains(const std::string& id) const;

private:
    std::map<std::string, Dialect> dialects_;
};

/// A parsed template: segments in file order whose text still contains
/// {placeholder} markers.
struct PromptTemplate {
    std::vector<PromptSegment> segments;
};

/// Parses the [system]/[user]/[assistant] section grammar. A [user] section
/// is required; [assistant] may be present and empty, which yields an empty
/// assistant prefix (the model speaks next with no seeded text).
PromptTemplate parse_template(const std::string& text);

/// Directory templates are loaded from: the ICF_TEMPLATES environment
/// variable when set, otherwise the compiled-in default.
std::string default_template_dir();

struct TemplateStore {
    PromptTemplate reasoning;
    PromptTemplate answer;
    PromptTemplate review;
    PromptTemplate summary;

    static TemplateStore load_dir(const std::string& dir);
    static TemplateStore builtin();
};

/// One-pass placeholder expansion. Unknown {keys} pass through verbatim and
/// replacement text is never re-scanned.
std::string substitute(const std::string& text, const std::map<std::string, std::string>& values);

std::string render_choice_block(const Question& q);
std::string render_transcript_block(const Transcript& transcript);

RenderedPrompt render_reasoning(const PromptTemplate& tmpl, const Question& q, const std::string& dialect_id);
RenderedPrompt render_answer(const PromptTemplate& tmpl, const Question& q, const std::string& reasoning,
                             const std::string& dialect_id);
RenderedPrompt render_review(const PromptTemplate& tmpl, const Question& q, const Transcript& transcript,
                             const std::string& dialect_id);
RenderedPrompt render_summary(const PromptTemplate& tmpl, char majority, const std::vector<std::string>& reasonings,
                              const std::string& dialect_id);

/// Bundles the template set with the dialect registry; the single prompt
/// producer the engine layers talk to.
class PromptForge {
public:
    PromptForge(TemplateStore store, DialectRegistry dialects);
    static PromptForge builtin();

    RenderedPrompt reasoning(const Question& q, const std::string& dialect_id) const;
    RenderedPrompt answer(const Question& q, const std::string& reasoning_text, const std::string& dialect_id) const;
    RenderedPrompt review(const Question& q, const Transcript& transcript, const std::string& dialect_id) const;
    RenderedPrompt summary(char majority, const std::vector<std::string>& reasonings,
                           const std::string& dialect_id) const;

    const Dialect& dialect(const std::string& id) const;
    std::string flatten(const RenderedPrompt& prompt) const;

private:
    TemplateStore store_;
    DialectRegistry dialects_;
};

}  // namespace icf
