#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>

#include <nlohmann/json.hpp>

#include "icf/prompt.hpp"

namespace icf {

enum class ModelRole { participant, summarizer };
enum class GenerationStage { reasoning, answer, review, summary };

const char* to_string(ModelRole role);
const char* to_string(GenerationStage stage);
ModelRole model_role_from_string(const std::string& s);
GenerationStage stage_from_string(const std::string& s);

/// OpenAI-compatible chat-completions endpoint. The credential is named by
/// environment variable and resolved at call time, never persisted.
struct RemoteEndpoint {
    std::string base_url;
    std::string model_name;
    std::string credential_env;

    bool operator==(const RemoteEndpoint&) const = default;
};

/// Deterministic offline backend. `behavior` names a registered table or a
/// JSON file path; when `seed` is unset the run seed is mixed with the
/// model id instead so distinct agents decorrelate.
struct ScriptedRef {
    std::optional<std::uint64_t> seed;
    std::string behavior;

    bool operator==(const ScriptedRef&) const = default;
};

struct ModelProfile {
    std::string model_id;
    ModelRole role = ModelRole::participant;
    std::variant<ScriptedRef, RemoteEndpoint> backend = ScriptedRef{};
    double temperature = 1.0;
    int max_new_tokens = 1024;
    std::string dialect_id = "role_tagged";

    bool scripted() const { return std::holds_alternative<ScriptedRef>(backend); }
    const ScriptedRef& scripted_ref() const { return std::get<ScriptedRef>(backend); }
    const RemoteEndpoint& remote() const { return std::get<RemoteEndpoint>(backend); }

    bool operator==(const ModelProfile&) const = default;
};

/// Coordinates of one generation within a run. Unique per run; the resume
/// path uses it to decide which generations are already on disk.
struct GenerationKey {
    std::string question_id;
    std::string model_id;
    int round = 0;
    int sample_index = 0;
    GenerationStage stage = GenerationStage::reasoning;

    std::string cache_token() const;

    bool operator==(const GenerationKey&) const = default;
};

struct GenerationResult {
    std::string completion;
    std::chrono::milliseconds latency{0};
    int attempt_count = 1;
    std::string backend_meta;
};

class Gateway {
public:
    virtual ~Gateway() = default;
    virtual GenerationResult generate(const ModelProfile& profile, const RenderedPrompt& prompt,
                                      const GenerationKey& key) = 0;
};

struct RetryPolicy {
    int max_retries = 3;
    std::chrono::milliseconds base_delay{1000};
    /// Injectable for tests; nullptr means std::this_thread::sleep_for.
    std::function<void(std::chrono::milliseconds)> sleeper;

    /// Delay after the attempt-th failure: base_delay doubled per attempt.
    std::chrono::milliseconds delay_for_attempt(int attempt) const;
    void sleep(std::chrono::milliseconds d) const;
};

/// Completions recovered from an earlier run's log, keyed by GenerationKey.
class GenerationCache {
public:
    const std::string* find(const GenerationKey& key) const;
    void put(const GenerationKey& key, std::string completion);
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

private:
    std::map<std::string, std::string> entries_;
};

void to_json(nlohmann::json& j, const GenerationKey& key);
void from_json(const nlohmann::json& j, GenerationKey& key);
void to_json(nlohmann::json& j, const ModelProfile& profile);
void from_json(const nlohmann::json& j, ModelProfile& profile);

}  // namespace icf
