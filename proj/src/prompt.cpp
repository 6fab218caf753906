#include "icf/prompt.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "icf/errors.hpp"

namespace icf {

const char* to_string(SpeakerRole role) {
    switch (role) {
        case SpeakerRole::system: return "system";
        case SpeakerRole::user: return "user";
        case SpeakerRole::assistant_prefix: return "assistant_prefix";
    }
    return "unknown";
}

std::string RenderedPrompt::user_text() const {
    std::string out;
    for (const auto& seg : segments) {
        if (seg.role != SpeakerRole::user) continue;
        if (!out.empty()) out += "\n\n";
        out += seg.text;
    }
    return out;
}

const PromptSegment* RenderedPrompt::find(SpeakerRole role) const {
    for (const auto& seg : segments) {
        if (seg.role == role) return &seg;
    }
    return nullptr;
}

std::string flatten(const RenderedPrompt& prompt, const Dialect& dialect) {
    if (dialect.kind == DialectKind::role_tagged) {
        std::string out;
        for (const auto& seg : prompt.segments) {
            const std::string* marker = nullptr;
            switch (seg.role) {
                case SpeakerRole::system: marker = &dialect.system_marker; break;
                case SpeakerRole::user: marker = &dialect.user_marker; break;
                case SpeakerRole::assistant_prefix: marker = &dialect.assistant_marker; break;
            }
            if (!out.empty()) out += "\n\n";
            out += *marker;
            out += ":";
            if (!seg.text.empty()) {
                out += " ";
                out += seg.text;
            }
        }
        return out;
    }
    // instruction_bracketed: system text rides inside the instruction block
    // and the assistant prefix follows the close marker with no separator.
    std::string body;
    if (const auto* sys = prompt.find(SpeakerRole::system)) {
        if (!sys->text.empty()) {
            body += sys->text;
            body += "\n\n";
        }
    }
    body += prompt.user_text();
    std::string out = dialect.open + body + dialect.close;
    if (const auto* prefix = prompt.find(SpeakerRole::assistant_prefix)) {
        out += prefix->text;
    }
    return out;
}

DialectRegistry DialectRegistry::builtin() {
    DialectRegistry reg;
    Dialect tagged;
    tagged.id = "role_tagged";
    tagged.kind = DialectKind::role_tagged;
    tagged.system_marker = "<|System|>";
    tagged.user_marker = "<|Question|>";
    tagged.assistant_marker = "<|Assistant|>";
    reg.add(std::move(tagged));

    Dialect bracketed;
    bracketed.id = "instruction_bracketed";
    bracketed.kind = DialectKind::instruction_bracketed;
    bracketed.open = "<s>[INST] ";
    bracketed.close = " [/INST]";
    reg.add(std::move(bracketed));
    return reg;
}

void DialectRegistry::add(Dialect dialect) {
    if (dialect.id.empty()) {
        throw ConfigError("dialect id must not be empty");
    }
    if (dialects_.count(dialect.id)) {
        throw ConfigError("dialect '" + dialect.id + "' registered twice");
    }
    if (dialect.kind == DialectKind::role_tagged) {
        if (dialect.system_marker.empty() || dialect.user_marker.empty() || dialect.assistant_marker.empty()) {
            throw ConfigError("dialect '" + dialect.id + "' needs all three role markers");
        }
        if (dialect.system_marker == dialect.user_marker || dialect.user_marker == dialect.assistant_marker ||
            dialect.system_marker == dialect.assistant_marker) {
            throw ConfigError("dialect '" + dialect.id + "' role markers must be distinct");
        }
    } else {
        if (dialect.open.empty() || dialect.close.empty()) {
            throw ConfigError("dialect '" + dialect.id + "' needs open and close markers");
        }
    }
    dialects_.emplace(dialect.id, std::move(dialect));
}

const Dialect& DialectRegistry::get(const std::string& id) const {
    auto it = dialects_.find(id);
    if (it == dialects_.end()) {
        throw ConfigError("unknown dialect '" + id + "'");
    }
    return it->second;
}

bool DialectRegistry::contains(const std::string& id) const { return dialects_.count(id) != 0; }

namespace {

std::vector<std::string> split_lines(std::string text) {
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
        text.pop_back();
    }
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            if (!cur.empty() && cur.back() == '\r') cur.pop_back();
            lines.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    lines.push_back(std::move(cur));
    return lines;
}

bool is_blank(const std::string& s) {
    return s.find_first_not_of(" \t") == std::string::npos;
}

}  // namespace

PromptTemplate parse_template(const std::string& text) {
    PromptTemplate tmpl;
    bool in_section = false;
    SpeakerRole current = SpeakerRole::user;
    std::vector<std::string> body;
    bool seen[3] = {false, false, false};

    auto close_section = [&]() {
        if (!in_section) return;
        std::string joined;
        for (std::size_t i = 0; i < body.size(); ++i) {
            if (i) joined += "\n";
            joined += body[i];
        }
        tmpl.segments.push_back({current, std::move(joined)});
        body.clear();
    };

    for (const auto& line : split_lines(text)) {
        SpeakerRole role;
        bool header = true;
        if (line == "[system]") role = SpeakerRole::system;
        else if (line == "[user]") role = SpeakerRole::user;
        else if (line == "[assistant]") role = SpeakerRole::assistant_prefix;
        else header = false;

        if (header) {
            close_section();
            if (seen[static_cast<int>(role)]) {
                throw ParseError(std::string("template repeats section ") + to_string(role));
            }
            seen[static_cast<int>(role)] = true;
            in_section = true;
            current = role;
        } else if (in_section) {
            body.push_back(line);
        } else if (!is_blank(line)) {
            throw ParseError("template has text before the first section header: '" + line + "'");
        }
    }
    close_section();
    if (!seen[static_cast<int>(SpeakerRole::user)]) {
        throw ParseError("template is missing its [user] section");
    }
    return tmpl;
}

std::string default_template_dir() {
    if (const char* env = std::getenv("ICF_TEMPLATES"); env && *env) {
        return env;
    }
#ifdef ICF_DEFAULT_TEMPLATE_DIR
    return ICF_DEFAULT_TEMPLATE_DIR;
#else
    throw ConfigError("no template directory: set ICF_TEMPLATES");
#endif
}

namespace {

std::string read_file_or_throw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("cannot read template file '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

PromptTemplate load_one(const std::string& dir, const char* name) {
    const std::string path = dir + "/" + name;
    try {
        return parse_template(read_file_or_throw(path));
    } catch (const ParseError& e) {
        throw ConfigError("template '" + path + "': " + e.what());
    }
}

}  // namespace

TemplateStore TemplateStore::load_dir(const std::string& dir) {
    TemplateStore store;
    store.reasoning = load_one(dir, "reasoning.tmpl");
    store.answer = load_one(dir, "answer.tmpl");
    store.review = load_one(dir, "review.tmpl");
    store.summary = load_one(dir, "summary.tmpl");
    return store;
}

TemplateStore TemplateStore::builtin() { return load_dir(default_template_dir()); }

std::string substitute(const std::string& text, const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        if (text[i] == '{') {
            const auto end = text.find('}', i + 1);
            if (end != std::string::npos) {
                const std::string key = text.substr(i + 1, end - i - 1);
                auto it = values.find(key);
                if (it != values.end()) {
                    out += it->second;
                    i = end + 1;
                    continue;
                }
            }
        }
        out += text[i];
        ++i;
    }
    return out;
}

std::string render_choice_block(const Question& q) {
    std::string out;
    for (std::size_t i = 0; i < q.choices.size(); ++i) {
        if (i) out += "\n";
        out += static_cast<char>('A' + i);
        out += ". ";
        out += q.choices[i];
    }
    return out;
}

std::string render_transcript_block(const Transcript& transcript) {
    std::string out;
    for (const auto& entry : transcript.entries) {
        if (!out.empty()) out += "\n\n";
        out += entry.label;
        out += ": The answer is ";
        out += entry.answer;
        out += ". ";
        out += entry.summary;
    }
    return out;
}

namespace {

std::string lstrip(std::string s) {
    const auto pos = s.find_first_not_of(" \t\r\n");
    return pos == std::string::npos ? std::string() : s.substr(pos);
}

RenderedPrompt expand(const PromptTemplate& tmpl, const std::map<std::string, std::string>& values,
                      const std::string& dialect_id) {
    RenderedPrompt out;
    out.dialect_id = dialect_id;
    out.segments.reserve(tmpl.segments.size());
    for (const auto& seg : tmpl.segments) {
        out.segments.push_back({seg.role, substitute(seg.text, values)});
    }
    return out;
}

std::map<std::string, std::string> question_values(const Question& q) {
    return {
        {"question", q.stem},
        {"choices", render_choice_block(q)},
        {"first letter", std::string(1, q.first_letter())},
        {"last letter", std::string(1, q.last_letter())},
    };
}

}  // namespace

RenderedPrompt render_reasoning(const PromptTemplate& tmpl, const Question& q, const std::string& dialect_id) {
    return expand(tmpl, question_values(q), dialect_id);
}

RenderedPrompt render_answer(const PromptTemplate& tmpl, const Question& q, const std::string& reasoning,
                             const std::string& dialect_id) {
    auto values = question_values(q);
    values["reasoning"] = lstrip(reasoning);
    return expand(tmpl, values, dialect_id);
}

RenderedPrompt render_review(const PromptTemplate& tmpl, const Question& q, const Transcript& transcript,
                             const std::string& dialect_id) {
    auto values = question_values(q);
    values["transcript"] = render_transcript_block(transcript);
    return expand(tmpl, values, dialect_id);
}

RenderedPrompt render_summary(const PromptTemplate& tmpl, char majority, const std::vector<std::string>& reasonings,
                              const std::string& dialect_id) {
    std::string joined;
    for (const auto& r : reasonings) {
        if (!joined.empty()) joined += "\n\n";
        joined += r;
    }
    std::map<std::string, std::string> values = {
        {"majority", std::string(1, majority)},
        {"reasonings", std::move(joined)},
    };
    return expand(tmpl, values, dialect_id);
}

PromptForge::PromptForge(TemplateStore store, DialectRegistry dialects)
    : store_(std::move(store)), dialects_(std::move(dialects)) {}

PromptForge PromptForge::builtin() { return PromptForge(TemplateStore::builtin(), DialectRegistry::builtin()); }

RenderedPrompt PromptForge::reasoning(const Question& q, const std::string& dialect_id) const {
    return render_reasoning(store_.reasoning, q, dialect_id);
}

RenderedPrompt PromptForge::answer(const Question& q, const std::string& reasoning_text,
                                   const std::string& dialect_id) const {
    return render_answer(store_.answer, q, reasoning_text, dialect_id);
}

RenderedPrompt PromptForge::review(const Question& q, const Transcript& transcript,
                                   const std::string& dialect_id) const {
    return render_review(store_.review, q, transcript, dialect_id);
}

RenderedPrompt PromptForge::summary(char majority, const std::vector<std::string>& reasonings,
                                    const std::string& dialect_id) const {
    return render_summary(store_.summary, majority, reasonings, dialect_id);
}

const Dialect& PromptForge::dialect(const std::string& id) const { return dialects_.get(id); }

std::string PromptForge::flatten(const RenderedPrompt& prompt) const {
    return icf::flatten(prompt, dialects_.get(prompt.dialect_id));
}

}  // namespace icf
