#include "icf/gateway.hpp"

#include <thread>

#include "icf/errors.hpp"

namespace icf {

const char* to_string(ModelRole role) {
    return role == ModelRole::participant ? "participant" : "summarizer";
}

const char* to_string(GenerationStage stage) {
    switch (stage) {
        case GenerationStage::reasoning: return "reasoning";
        case GenerationStage::answer: return "answer";
        case GenerationStage::review: return "review";
        case GenerationStage::summary: return "summary";
    }
    return "unknown";
}

ModelRole model_role_from_string(const std::string& s) {
    if (s == "participant") return ModelRole::participant;
    if (s == "summarizer") return ModelRole::summarizer;
    throw ParseError("unknown model role '" + s + "'");
}

GenerationStage stage_from_string(const std::string& s) {
    if (s == "reasoning") return GenerationStage::reasoning;
    if (s == "answer") return GenerationStage::answer;
    if (s == "review") return GenerationStage::review;
    if (s == "summary") return GenerationStage::summary;
    throw ParseError("unknown generation stage '" + s + "'");
}

std::string GenerationKey::cache_token() const {
    std::string out = question_id;
    out += '\x1f';
    out += model_id;
    out += '\x1f';
    out += std::to_string(round);
    out += '\x1f';
    out += std::to_string(sample_index);
    out += '\x1f';
    out += to_string(stage);
    return out;
}

std::chrono::milliseconds RetryPolicy::delay_for_attempt(int attempt) const {
    auto d = base_delay;
    for (int i = 1; i < attempt; ++i) d *= 2;
    return d;
}

void RetryPolicy::sleep(std::chrono::milliseconds d) const {
    if (sleeper) {
        sleeper(d);
    } else {
        std::this_thread::sleep_for(d);
    }
}

const std::string* GenerationCache::find(const GenerationKey& key) const {
    auto it = entries_.find(key.cache_token());
    return it == entries_.end() ? nullptr : &it->second;
}

void GenerationCache::put(const GenerationKey& key, std::string completion) {
    entries_[key.cache_token()] = std::move(completion);
}

void to_json(nlohmann::json& j, const GenerationKey& key) {
    j = nlohmann::json{
        {"question_id", key.question_id}, {"model_id", key.model_id},         {"round", key.round},
        {"sample_index", key.sample_index}, {"stage", to_string(key.stage)},
    };
}

void from_json(const nlohmann::json& j, GenerationKey& key) {
    j.at("question_id").get_to(key.question_id);
    j.at("model_id").get_to(key.model_id);
    j.at("round").get_to(key.round);
    j.at("sample_index").get_to(key.sample_index);
    key.stage = stage_from_string(j.at("stage").get<std::string>());
}

void to_json(nlohmann::json& j, const ModelProfile& profile) {
    nlohmann::json backend;
    if (profile.scripted()) {
        const auto& ref = profile.scripted_ref();
        backend["scripted"] = nlohmann::json{{"behavior", ref.behavior}};
        if (ref.seed) backend["scripted"]["seed"] = *ref.seed;
    } else {
        const auto& ep = profile.remote();
        backend["remote"] = nlohmann::json{
            {"base_url", ep.base_url}, {"model_name", ep.model_name}, {"credential_env", ep.credential_env}};
    }
    j = nlohmann::json{
        {"model_id", profile.model_id},       {"role", to_string(profile.role)},
        {"backend", std::move(backend)},      {"temperature", profile.temperature},
        {"max_new_tokens", profile.max_new_tokens}, {"dialect", profile.dialect_id},
    };
}

void from_json(const nlohmann::json& j, ModelProfile& profile) {
    j.at("model_id").get_to(profile.model_id);
    profile.role =
        j.contains("role") ? model_role_from_string(j.at("role").get<std::string>()) : ModelRole::participant;
    const auto& backend = j.at("backend");
    if (backend.contains("scripted")) {
        ScriptedRef ref;
        backend["scripted"].at("behavior").get_to(ref.behavior);
        if (backend["scripted"].contains("seed")) {
            ref.seed = backend["scripted"]["seed"].get<std::uint64_t>();
        }
        profile.backend = std::move(ref);
    } else if (backend.contains("remote")) {
        RemoteEndpoint ep;
        backend["remote"].at("base_url").get_to(ep.base_url);
        backend["remote"].at("model_name").get_to(ep.model_name);
        backend["remote"].at("credential_env").get_to(ep.credential_env);
        profile.backend = std::move(ep);
    } else {
        throw ParseError("model profile '" + profile.model_id + "' has no recognized backend");
    }
    if (j.contains("temperature")) j.at("temperature").get_to(profile.temperature);
    if (j.contains("max_new_tokens")) j.at("max_new_tokens").get_to(profile.max_new_tokens);
    if (j.contains("dialect")) j.at("dialect").get_to(profile.dialect_id);
}

}  // namespace icf
