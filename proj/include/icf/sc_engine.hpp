#pragma once

#include <chrono>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "icf/dataset.hpp"
#include "icf/gateway.hpp"
#include "icf/prompt.hpp"
#include "icf/transcript.hpp"

namespace icf {

/// Letter extraction outcome for one completion.
struct Extracted {
    char letter = '\0';  // '\0' marks an invalid extraction
    std::string reason;  // failure description, empty when valid

    bool valid() const { return letter != '\0'; }
    static Extracted ok(char letter) { return {letter, {}}; }
    static Extracted invalid(std::string reason) { return {'\0', std::move(reason)}; }

    bool operator==(const Extracted&) const = default;
};

/// First standalone letter in [first, last]. Standalone means neither
/// neighbor is a word character, so "B12" or "Choice_E" never match.
Extracted extract_letter(const std::string& completion, char first, char last);

struct Sample {
    int sample_index = 0;
    /// Initial mode: the reasoning completion. Review mode: the entire
    /// review completion (it opens with the answer letter).
    std::string reasoning;
    Extracted extracted;

    bool operator==(const Sample&) const = default;
};

struct VoteResult {
    char letter = '\0';
    int count = 0;

    bool operator==(const VoteResult&) const = default;
};

/// Modal valid letter, ties broken alphabetically; nullopt iff every vote
/// is invalid.
std::optional<VoteResult> majority_vote(const std::vector<Extracted>& votes);

/// One model's answer to one question at one round.
struct Prediction {
    std::string question_id;
    std::string model_id;
    int round = 0;
    std::optional<char> majority;  // nullopt = abstained
    int vote_count = 0;            // votes carried by the majority letter
    int n = 0;
    std::vector<Sample> samples;
    std::string summary;           // empty when abstained

    bool abstained() const { return !majority.has_value(); }

    bool operator==(const Prediction&) const = default;
};

void to_json(nlohmann::json& j, const Extracted& e);
void from_json(const nlohmann::json& j, Extracted& e);
void to_json(nlohmann::json& j, const Sample& s);
void from_json(const nlohmann::json& j, Sample& s);
void to_json(nlohmann::json& j, const Prediction& p);
void from_json(const nlohmann::json& j, Prediction& p);

/// One completed generation, queued for the store at the round barrier.
struct GenRecord {
    GenerationKey key;
    std::string completion;
    std::chrono::milliseconds latency{0};
    int attempt_count = 1;
    bool from_cache = false;
};

/// Thread-safe sink for GenRecords produced inside a round.
class GenCollector {
public:
    void push(GenRecord record);
    std::vector<GenRecord> drain();

private:
    std::mutex mutex_;
    std::vector<GenRecord> records_;
};

/// Everything sampling needs. `cache` short-circuits generations already on
/// disk; `collector` receives every completion for durable append.
struct EngineContext {
    Gateway* gateway = nullptr;
    const PromptForge* forge = nullptr;
    int parallelism = 1;
    const GenerationCache* cache = nullptr;
    GenCollector* collector = nullptr;
};

struct InitialMode {};
struct ReviewMode {
    Transcript transcript;
    int round = 1;
};
using ScMode = std::variant<InitialMode, ReviewMode>;

/// Fetch from cache or call the gateway, feeding the collector either way.
std::string generate_cached(const EngineContext& ctx, const ModelProfile& profile, const RenderedPrompt& prompt,
                            const GenerationKey& key);

/// Summarize majority reasonings through the summarizer model. The key is
/// anchored to the participant whose reasonings these are.
std::string summarize(const EngineContext& ctx, char majority, const std::vector<std::string>& reasonings,
                      const ModelProfile& summarizer, const std::string& question_id,
                      const std::string& participant_id, int round);

/// Self-consistency sampling for one (question, model) pair. Initial mode
/// draws a reasoning and an answer per sample; review mode draws one review
/// completion per sample against the transcript. Samples may run in
/// parallel up to ctx.parallelism; aggregation is order-independent. When
/// `summarize_all_samples` is false only majority-matching reasonings are
/// summarized.
Prediction run_zscot_sc(const EngineContext& ctx, const Question& q, const ModelProfile& participant, int n,
                        const ModelProfile& summarizer, const ScMode& mode, bool summarize_all_samples = false);

}  // namespace icf
