#include "icf/dispatch.hpp"

#include "icf/errors.hpp"
#include "icf/remote.hpp"

namespace icf {

DispatchGateway::DispatchGateway(std::uint64_t run_seed, RetryPolicy retry)
    : run_seed_(run_seed), retry_(std::move(retry)) {}

void DispatchGateway::register_behavior(const std::string& name, BehaviorTable table) {
    std::lock_guard lock(tables_mutex_);
    tables_[name] = std::move(table);
}

const BehaviorTable& DispatchGateway::table_for(const std::string& ref) {
    std::lock_guard lock(tables_mutex_);
    auto it = tables_.find(ref);
    if (it == tables_.end()) {
        it = tables_.emplace(ref, BehaviorTable::load_file(ref)).first;
    }
    return it->second;
}

GenerationResult DispatchGateway::generate(const ModelProfile& profile, const RenderedPrompt& prompt,
                                           const GenerationKey& key) {
    if (profile.scripted()) {
        const BehaviorTable& table = table_for(profile.scripted_ref().behavior);
        GenerationResult result;
        result.completion = scripted_complete(table, profile, prompt, key, run_seed_);
        result.backend_meta = "scripted";
        return result;
    }

    for (int attempt = 1;; ++attempt) {
        try {
            GenerationResult result = remote_generate_once(profile.remote(), profile, prompt);
            result.attempt_count = attempt;
            return result;
        } catch (const GatewayError& e) {
            if (!e.retryable() || attempt > retry_.max_retries) throw;
            retry_.sleep(retry_.delay_for_attempt(attempt));
        }
    }
}

}  // namespace icf
