#include "icf/remote.hpp"

#include <chrono>
#include <cstdlib>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "icf/errors.hpp"

namespace icf {

ParsedBase parse_base_url(const std::string& base_url) {
    const auto scheme_end = base_url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("base_url '" + base_url + "' needs a scheme, e.g. https://host");
    }
    const auto path_start = base_url.find('/', scheme_end + 3);
    ParsedBase parsed;
    if (path_start == std::string::npos) {
        parsed.host = base_url;
    } else {
        parsed.host = base_url.substr(0, path_start);
        parsed.path_prefix = base_url.substr(path_start);
        while (!parsed.path_prefix.empty() && parsed.path_prefix.back() == '/') {
            parsed.path_prefix.pop_back();
        }
    }
    if (parsed.host.size() == scheme_end + 3) {
        throw ConfigError("base_url '" + base_url + "' has an empty host");
    }
    return parsed;
}

namespace {

const char* role_name(SpeakerRole role) {
    switch (role) {
        case SpeakerRole::system: return "system";
        case SpeakerRole::user: return "user";
        case SpeakerRole::assistant_prefix: return "assistant";
    }
    return "user";
}

}  // namespace

GenerationResult remote_generate_once(const RemoteEndpoint& endpoint, const ModelProfile& profile,
                                      const RenderedPrompt& prompt) {
    const char* token = endpoint.credential_env.empty() ? nullptr : std::getenv(endpoint.credential_env.c_str());
    if (!token || !*token) {
        throw GatewayError(GatewayErrorKind::credential_missing,
                           "environment variable '" + endpoint.credential_env + "' is unset or empty");
    }

    nlohmann::json messages = nlohmann::json::array();
    for (const auto& seg : prompt.segments) {
        if (seg.text.empty()) continue;  // an empty assistant prefix adds nothing on the wire
        messages.push_back({{"role", role_name(seg.role)}, {"content", seg.text}});
    }
    const nlohmann::json request = {
        {"model", endpoint.model_name},
        {"messages", std::move(messages)},
        {"temperature", profile.temperature},
        {"max_tokens", profile.max_new_tokens},
    };

    const ParsedBase base = parse_base_url(endpoint.base_url);
    httplib::Client client(base.host);
    client.set_connection_timeout(std::chrono::seconds(10));
    client.set_read_timeout(std::chrono::seconds(120));
    client.set_write_timeout(std::chrono::seconds(30));
    client.set_bearer_token_auth(token);

    const auto start = std::chrono::steady_clock::now();
    auto res = client.Post(base.path_prefix + "/chat/completions", request.dump(), "application/json");
    const auto latency =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);

    if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout) {
            throw GatewayError(GatewayErrorKind::timeout, "connection to " + base.host + " timed out");
        }
        throw GatewayError(GatewayErrorKind::transport,
                           "request to " + base.host + " failed: " + httplib::to_string(err));
    }
    if (res->status == 429) {
        throw GatewayError(GatewayErrorKind::rate_limit, base.host + " returned 429");
    }
    if (res->status >= 500) {
        throw GatewayError(GatewayErrorKind::transport,
                           base.host + " returned " + std::to_string(res->status));
    }
    if (res->status != 200) {
        throw GatewayError(GatewayErrorKind::malformed_response,
                           base.host + " returned " + std::to_string(res->status) + ": " + res->body);
    }

    nlohmann::json body;
    try {
        body = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error&) {
        throw GatewayError(GatewayErrorKind::malformed_response, "response body is not JSON");
    }
    if (!body.contains("choices") || !body["choices"].is_array() || body["choices"].empty() ||
        !body["choices"][0].contains("message") || !body["choices"][0]["message"].contains("content") ||
        !body["choices"][0]["message"]["content"].is_string()) {
        throw GatewayError(GatewayErrorKind::malformed_response,
                           "response lacks choices[0].message.content");
    }

    GenerationResult result;
    result.completion = body["choices"][0]["message"]["content"].get<std::string>();
    result.latency = latency;
    result.backend_meta = endpoint.model_name + "@" + base.host;
    return result;
}

}  // namespace icf
