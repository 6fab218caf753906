#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <string>

#include "icf/gateway.hpp"
#include "icf/scripted.hpp"

namespace icf {

/// Routes generations to the right backend per profile and owns the retry
/// loop for remote calls. Scripted behavior tables are resolved by
/// registered name first, then as a file path (loaded once and cached).
class DispatchGateway : public Gateway {
public:
    explicit DispatchGateway(std::uint64_t run_seed, RetryPolicy retry = {});

    void register_behavior(const std::string& name, BehaviorTable table);

    GenerationResult generate(const ModelProfile& profile, const RenderedPrompt& prompt,
                              const GenerationKey& key) override;

private:
    const BehaviorTable& table_for(const std::string& ref);

    std::uint64_t run_seed_;
    RetryPolicy retry_;
    std::mutex tables_mutex_;
    std::map<std::string, BehaviorTable> tables_;
};

}  // namespace icf
