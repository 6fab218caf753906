#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "icf/gateway.hpp"

namespace icf {

/// How a scripted agent behaves on one question. `sequence`, when set,
/// forces the letter per sample index ("?" marks an unparsable completion);
/// otherwise letters are drawn from `distribution`. `sway_probability` is
/// the chance of adopting a differing transcript majority during review.
struct QuestionBehavior {
    std::map<char, double> distribution;
    std::vector<std::string> sequence;
    double sway_probability = 0.5;
    std::string reasoning_template =
        "The presentation aligns with option {letter}. The distractors each conflict with at least one finding.";
};

/// Per-question partial override of the table defaults.
struct BehaviorOverride {
    std::optional<std::map<char, double>> distribution;
    std::optional<std::vector<std::string>> sequence;
    std::optional<double> sway_probability;
    std::optional<std::string> reasoning_template;
};

struct BehaviorTable {
    QuestionBehavior defaults;
    std::map<std::string, BehaviorOverride> overrides;
    std::size_t summary_cap = 400;

    static BehaviorTable from_json(const nlohmann::json& doc);
    static BehaviorTable load_file(const std::string& path);

    QuestionBehavior behavior_for(const std::string& question_id) const;
};

/// Uniform double in [0, 1) from (key coordinates, purpose, seed). The
/// stage is deliberately absent so the reasoning and answer passes of one
/// sample observe the same letter; `purpose` separates independent draws.
double scripted_uniform(const GenerationKey& key, const std::string& purpose, std::uint64_t seed);

/// Profile seed when set, otherwise the run seed decorrelated by model id.
std::uint64_t effective_scripted_seed(const ModelProfile& profile, std::uint64_t run_seed);

/// Pure completion function: output depends only on the arguments, never on
/// call order, concurrency schedule, or wall clock.
std::string scripted_complete(const BehaviorTable& table, const ModelProfile& profile,
                              const RenderedPrompt& prompt, const GenerationKey& key, std::uint64_t run_seed);

class ScriptedBackend : public Gateway {
public:
    ScriptedBackend(BehaviorTable table, std::uint64_t run_seed)
        : table_(std::move(table)), run_seed_(run_seed) {}

    GenerationResult generate(const ModelProfile& profile, const RenderedPrompt& prompt,
                              const GenerationKey& key) override;

private:
    BehaviorTable table_;
    std::uint64_t run_seed_;
};

}  // namespace icf
