#include "icf/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "icf/errors.hpp"
#include "icf/prompt.hpp"

namespace fs = std::filesystem;

namespace icf {

namespace {

std::string resolve_against(const fs::path& anchor, const std::string& p) {
    fs::path path(p);
    if (path.is_absolute()) return path.lexically_normal().string();
    return (anchor / path).lexically_normal().string();
}

}  // namespace

void validate_run_config(const RunConfig& cfg) {
    if (cfg.dataset.empty()) throw ConfigError("config is missing 'dataset'");
    if (cfg.out_dir.empty()) throw ConfigError("config is missing an output directory");
    if (cfg.participants.size() < 2) {
        throw ConfigError("config needs at least two participants, found " +
                          std::to_string(cfg.participants.size()));
    }
    if (cfg.parallelism < 1) throw ConfigError("parallelism must be at least 1");
    if (cfg.loop.n < 1) throw ConfigError("samples per question (n) must be at least 1");
    if (cfg.loop.max_rounds < 0) throw ConfigError("max_rounds must be non-negative");
    if (cfg.loop.threshold < 0.0 || cfg.loop.threshold > 100.0) {
        throw ConfigError("threshold must lie in [0, 100]");
    }

    const auto dialects = DialectRegistry::builtin();
    std::set<std::string> ids;
    const auto check_profile = [&](const ModelProfile& p, const char* what) {
        if (p.model_id.empty()) throw ConfigError(std::string(what) + " has an empty model_id");
        if (!ids.insert(p.model_id).second) {
            throw ConfigError("model id '" + p.model_id + "' appears more than once");
        }
        if (!dialects.contains(p.dialect_id)) {
            throw ConfigError("model '" + p.model_id + "' names unknown dialect '" + p.dialect_id + "'");
        }
        if (p.temperature < 0.0) throw ConfigError("model '" + p.model_id + "' has negative temperature");
        if (p.max_new_tokens < 1) throw ConfigError("model '" + p.model_id + "' has non-positive max_new_tokens");
        if (p.scripted()) {
            if (p.scripted_ref().behavior.empty()) {
                throw ConfigError("model '" + p.model_id + "' has an empty behavior reference");
            }
        } else {
            const auto& ep = p.remote();
            if (ep.base_url.empty() || ep.model_name.empty()) {
                throw ConfigError("model '" + p.model_id + "' needs base_url and model_name");
            }
        }
    };
    for (const auto& p : cfg.participants) check_profile(p, "participant");
    check_profile(cfg.summarizer, "summarizer");
    if (cfg.summarizer.role != ModelRole::summarizer) {
        throw ConfigError("summarizer profile must carry the summarizer role");
    }
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();

    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");

    RunConfig cfg;
    const fs::path anchor = fs::absolute(fs::path(path)).parent_path();
    try {
        if (doc.contains("dataset")) cfg.dataset = resolve_against(anchor, doc["dataset"].get<std::string>());
        if (doc.contains("participants")) {
            for (const auto& pj : doc["participants"]) {
                auto p = pj.get<ModelProfile>();
                p.role = ModelRole::participant;
                cfg.participants.push_back(std::move(p));
            }
        }
        if (doc.contains("summarizer")) {
            cfg.summarizer = doc["summarizer"].get<ModelProfile>();
            cfg.summarizer.role = ModelRole::summarizer;
        } else {
            throw ConfigError("config is missing 'summarizer'");
        }
        if (doc.contains("loop")) cfg.loop = doc["loop"].get<LoopConfig>();
        if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
        if (doc.contains("out")) cfg.out_dir = resolve_against(anchor, doc["out"].get<std::string>());
        if (doc.contains("parallelism")) cfg.parallelism = doc["parallelism"].get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "' is malformed: " + e.what());
    }
    if (cfg.out_dir.empty()) cfg.out_dir = resolve_against(anchor, "run");

    // Scripted behavior references are file paths here; anchor them too.
    const auto resolve_behavior = [&](ModelProfile& p) {
        if (!p.scripted()) return;
        auto ref = p.scripted_ref();
        ref.behavior = resolve_against(anchor, ref.behavior);
        if (!fs::exists(ref.behavior)) {
            throw ConfigError("model '" + p.model_id + "' references missing behavior file '" + ref.behavior +
                              "'");
        }
        p.backend = std::move(ref);
    };
    for (auto& p : cfg.participants) resolve_behavior(p);
    resolve_behavior(cfg.summarizer);

    validate_run_config(cfg);
    return cfg;
}

}  // namespace icf
