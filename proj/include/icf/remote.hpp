#pragma once

#include <string>

#include "icf/gateway.hpp"

namespace icf {

/// "https://api.example.com:8443/v1" -> host "https://api.example.com:8443",
/// path_prefix "/v1". Requests go to path_prefix + "/chat/completions".
struct ParsedBase {
    std::string host;
    std::string path_prefix;
};

ParsedBase parse_base_url(const std::string& base_url);

/// One HTTP attempt against an OpenAI-compatible chat-completions endpoint.
/// Throws GatewayError; retries belong to the caller.
GenerationResult remote_generate_once(const RemoteEndpoint& endpoint, const ModelProfile& profile,
                                      const RenderedPrompt& prompt);

}  // namespace icf
