#include "icf/errors.hpp"

namespace icf {

std::string ValidationError::compose(const std::string& summary, const std::vector<std::string>& diagnostics) {
    std::string msg = summary;
    for (const auto& d : diagnostics) {
        msg += "\n  - ";
        msg += d;
    }
    return msg;
}

ValidationError::ValidationError(const std::string& summary, std::vector<std::string> diagnostics)
    : std::runtime_error(compose(summary, diagnostics)), diagnostics_(std::move(diagnostics)) {}

const char* to_string(GatewayErrorKind kind) noexcept {
    switch (kind) {
        case GatewayErrorKind::transport: return "transport";
        case GatewayErrorKind::rate_limit: return "rate_limit";
        case GatewayErrorKind::timeout: return "timeout";
        case GatewayErrorKind::malformed_response: return "malformed_response";
        case GatewayErrorKind::credential_missing: return "credential_missing";
    }
    return "unknown";
}

GatewayError::GatewayError(GatewayErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

bool GatewayError::retryable() const noexcept {
    switch (kind_) {
        case GatewayErrorKind::transport:
        case GatewayErrorKind::rate_limit:
        case GatewayErrorKind::timeout:
            return true;
        case GatewayErrorKind::malformed_response:
        case GatewayErrorKind::credential_missing:
            return false;
    }
    return false;
}

}  // namespace icf
