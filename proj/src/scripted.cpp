#include "icf/scripted.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>

#include "icf/errors.hpp"

namespace icf {

namespace {

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

bool is_letter_token(const std::string& s) {
    return s.size() == 1 && s[0] >= 'A' && s[0] <= 'Z';
}

std::map<char, double> parse_distribution(const nlohmann::json& j, const std::string& where) {
    std::map<char, double> dist;
    if (!j.is_object()) throw ParseError(where + ": distribution must be an object of letter weights");
    for (const auto& [letter, weight] : j.items()) {
        if (!is_letter_token(letter)) {
            throw ParseError(where + ": distribution key '" + letter + "' is not an uppercase letter");
        }
        if (!weight.is_number()) {
            throw ParseError(where + ": weight for '" + letter + "' is not a number");
        }
        const double w = weight.get<double>();
        if (!(w > 0.0) || !std::isfinite(w)) {
            throw ParseError(where + ": weight for '" + letter + "' must be finite and positive");
        }
        dist[letter[0]] = w;
    }
    return dist;
}

std::vector<std::string> parse_sequence(const nlohmann::json& j, const std::string& where) {
    std::vector<std::string> seq;
    if (!j.is_array()) throw ParseError(where + ": sequence must be an array");
    for (const auto& entry : j) {
        if (!entry.is_string()) throw ParseError(where + ": sequence entries must be strings");
        const auto s = entry.get<std::string>();
        if (s != "?" && !is_letter_token(s)) {
            throw ParseError(where + ": sequence entry '" + s + "' must be a single uppercase letter or \"?\"");
        }
        seq.push_back(s);
    }
    return seq;
}

double parse_sway(const nlohmann::json& j, const std::string& where) {
    if (!j.is_number()) throw ParseError(where + ": sway_probability must be a number");
    const double p = j.get<double>();
    if (p < 0.0 || p > 1.0) throw ParseError(where + ": sway_probability must lie in [0, 1]");
    return p;
}

}  // namespace

BehaviorTable BehaviorTable::from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ParseError("behavior table must be a JSON object");
    BehaviorTable table;
    if (doc.contains("defaults")) {
        const auto& d = doc["defaults"];
        if (d.contains("distribution")) table.defaults.distribution = parse_distribution(d["distribution"], "defaults");
        if (d.contains("sequence")) table.defaults.sequence = parse_sequence(d["sequence"], "defaults");
        if (d.contains("sway_probability")) table.defaults.sway_probability = parse_sway(d["sway_probability"], "defaults");
        if (d.contains("reasoning_template")) d["reasoning_template"].get_to(table.defaults.reasoning_template);
    }
    if (doc.contains("questions")) {
        if (!doc["questions"].is_object()) throw ParseError("behavior table 'questions' must be an object");
        for (const auto& [qid, spec] : doc["questions"].items()) {
            const std::string where = "question '" + qid + "'";
            BehaviorOverride ov;
            if (spec.contains("distribution")) ov.distribution = parse_distribution(spec["distribution"], where);
            if (spec.contains("sequence")) ov.sequence = parse_sequence(spec["sequence"], where);
            if (spec.contains("sway_probability")) ov.sway_probability = parse_sway(spec["sway_probability"], where);
            if (spec.contains("reasoning_template")) ov.reasoning_template = spec["reasoning_template"].get<std::string>();
            table.overrides.emplace(qid, std::move(ov));
        }
    }
    if (doc.contains("summary_cap")) {
        if (!doc["summary_cap"].is_number_unsigned()) throw ParseError("summary_cap must be a non-negative integer");
        table.summary_cap = doc["summary_cap"].get<std::size_t>();
    }
    return table;
}

BehaviorTable BehaviorTable::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read behavior table '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return from_json(nlohmann::json::parse(ss.str()));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("behavior table '" + path + "' is not valid JSON: " + e.what());
    } catch (const ParseError& e) {
        throw ConfigError("behavior table '" + path + "': " + e.what());
    }
}

QuestionBehavior BehaviorTable::behavior_for(const std::string& question_id) const {
    QuestionBehavior merged = defaults;
    auto it = overrides.find(question_id);
    if (it != overrides.end()) {
        const auto& ov = it->second;
        if (ov.distribution) merged.distribution = *ov.distribution;
        if (ov.sequence) merged.sequence = *ov.sequence;
        if (ov.sway_probability) merged.sway_probability = *ov.sway_probability;
        if (ov.reasoning_template) merged.reasoning_template = *ov.reasoning_template;
        // A per-question distribution without a sequence retracts any
        // default sequence, and vice versa; the override picks the source.
        if (ov.distribution && !ov.sequence) merged.sequence.clear();
        if (ov.sequence && !ov.distribution) merged.distribution.clear();
    }
    return merged;
}

double scripted_uniform(const GenerationKey& key, const std::string& purpose, std::uint64_t seed) {
    std::string material = key.question_id;
    material += '\x1f';
    material += key.model_id;
    material += '\x1f';
    material += std::to_string(key.round);
    material += '\x1f';
    material += std::to_string(key.sample_index);
    material += '\x1f';
    material += purpose;
    const std::uint64_t mixed = splitmix64(fnv1a64(material) ^ splitmix64(seed));
    return static_cast<double>(mixed >> 11) * (1.0 / 9007199254740992.0);
}

std::uint64_t effective_scripted_seed(const ModelProfile& profile, std::uint64_t run_seed) {
    const auto& ref = profile.scripted_ref();
    if (ref.seed) return *ref.seed;
    return splitmix64(run_seed ^ fnv1a64(profile.model_id));
}

namespace {

// '\0' means this sample produces an unparsable completion.
char draw_letter(const QuestionBehavior& behavior, const GenerationKey& key, std::uint64_t seed) {
    if (!behavior.sequence.empty()) {
        const auto& entry = behavior.sequence[static_cast<std::size_t>(key.sample_index) % behavior.sequence.size()];
        return entry == "?" ? '\0' : entry[0];
    }
    if (behavior.distribution.empty()) {
        throw ConfigError("scripted behavior for question '" + key.question_id +
                          "' defines neither a distribution nor a sequence");
    }
    double total = 0.0;
    for (const auto& [letter, weight] : behavior.distribution) total += weight;
    const double u = scripted_uniform(key, "letter", seed) * total;
    double cum = 0.0;
    char last = 'A';
    for (const auto& [letter, weight] : behavior.distribution) {
        cum += weight;
        last = letter;
        if (u < cum) return letter;
    }
    return last;  // guards against accumulated rounding at u ~ total
}

std::string render_letter_template(const std::string& tmpl, char letter) {
    std::string out;
    out.reserve(tmpl.size());
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl.compare(i, 8, "{letter}") == 0) {
            out += letter;
            i += 8;
        } else {
            out += tmpl[i++];
        }
    }
    return out;
}

std::vector<char> transcript_letters(const std::string& user_text) {
    static const std::regex pattern(R"(Expert \d+: The answer is ([A-Z])\.)");
    std::vector<char> letters;
    for (auto it = std::sregex_iterator(user_text.begin(), user_text.end(), pattern);
         it != std::sregex_iterator(); ++it) {
        letters.push_back((*it)[1].str()[0]);
    }
    return letters;
}

char modal_letter(const std::vector<char>& letters) {
    std::map<char, int> counts;
    for (char c : letters) ++counts[c];
    char best = '\0';
    int best_count = 0;
    for (const auto& [letter, count] : counts) {  // map order makes ties alphabetical
        if (count > best_count) {
            best = letter;
            best_count = count;
        }
    }
    return best;
}

/// Blocks of consecutive non-blank lines.
std::vector<std::string> blank_line_blocks(const std::string& text) {
    std::vector<std::string> blocks;
    std::string cur;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const bool blank = line.find_first_not_of(" \t") == std::string::npos;
        if (blank) {
            if (!cur.empty()) blocks.push_back(std::move(cur));
            cur.clear();
        } else {
            if (!cur.empty()) cur += "\n";
            cur += line;
        }
    }
    if (!cur.empty()) blocks.push_back(std::move(cur));
    return blocks;
}

std::string first_sentence(const std::string& block) {
    const auto dot = block.find('.');
    std::string out = dot == std::string::npos ? block : block.substr(0, dot + 1);
    std::replace(out.begin(), out.end(), '\n', ' ');
    return out;
}

std::string summarize_blocks(const std::string& user_text, std::size_t cap) {
    auto blocks = blank_line_blocks(user_text);
    std::string out;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (blocks[i].rfind("Majority answer:", 0) == 0) continue;
        if (i + 1 == blocks.size() && blocks[i].rfind("Please read", 0) == 0) continue;
        if (!out.empty()) out += " ";
        out += first_sentence(blocks[i]);
    }
    if (out.size() > cap) out.resize(cap);
    return out;
}

}  // namespace

std::string scripted_complete(const BehaviorTable& table, const ModelProfile& profile,
                              const RenderedPrompt& prompt, const GenerationKey& key, std::uint64_t run_seed) {
    const std::uint64_t seed = effective_scripted_seed(profile, run_seed);
    const QuestionBehavior behavior = table.behavior_for(key.question_id);

    switch (key.stage) {
        case GenerationStage::reasoning: {
            const char letter = draw_letter(behavior, key, seed);
            if (letter == '\0') return " it is genuinely unclear; the stem under-determines the diagnosis.";
            return " " + render_letter_template(behavior.reasoning_template, letter);
        }
        case GenerationStage::answer: {
            const char letter = draw_letter(behavior, key, seed);
            if (letter == '\0') return " none of these, really.";
            return std::string(" ") + letter + ".";
        }
        case GenerationStage::review: {
            const char own = draw_letter(behavior, key, seed);
            if (own == '\0') return "no clear stance emerges from this panel.";
            char final_letter = own;
            const auto letters = transcript_letters(prompt.user_text());
            const char majority = modal_letter(letters);
            if (majority != '\0' && majority != own) {
                if (scripted_uniform(key, "sway", seed) < behavior.sway_probability) {
                    final_letter = majority;
                }
            }
            return std::string(1, final_letter) + " is the best supported option after review of the panel opinions.";
        }
        case GenerationStage::summary:
            return " " + summarize_blocks(prompt.user_text(), table.summary_cap);
    }
    throw EngineError("unhandled generation stage");
}

GenerationResult ScriptedBackend::generate(const ModelProfile& profile, const RenderedPrompt& prompt,
                                           const GenerationKey& key) {
    GenerationResult result;
    result.completion = scripted_complete(table_, profile, prompt, key, run_seed_);
    result.backend_meta = "scripted";
    return result;
}

}  // namespace icf
