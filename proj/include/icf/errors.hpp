#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace icf {

// Input text could not be parsed at all (bad JSON, bad template file).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input parsed but violates a documented invariant. Carries one diagnostic
// per offending item so callers can print them all at once.
class ValidationError : public std::runtime_error {
public:
    ValidationError(const std::string& summary, std::vector<std::string> diagnostics);
    const std::vector<std::string>& diagnostics() const noexcept { return diagnostics_; }

private:
    static std::string compose(const std::string& summary, const std::vector<std::string>& diagnostics);
    std::vector<std::string> diagnostics_;
};

// Run configuration problems: unknown dialect, bad roster, missing fields.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class GatewayErrorKind {
    transport,           // connection-level failure, retryable
    rate_limit,          // HTTP 429, retryable with backoff
    timeout,             // retryable up to the budget
    malformed_response,  // endpoint answered with a non-conforming body, not retryable
    credential_missing,  // referenced environment variable is unset, not retryable
};

const char* to_string(GatewayErrorKind kind) noexcept;

class GatewayError : public std::runtime_error {
public:
    GatewayError(GatewayErrorKind kind, const std::string& what);
    GatewayErrorKind kind() const noexcept { return kind_; }
    bool retryable() const noexcept;

private:
    GatewayErrorKind kind_;
};

// Event-log and run-directory failures: sequence gaps, truncated records,
// digest mismatches.
class StoreError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Filesystem-level failures: unreadable or missing files and directories.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A lower-layer failure surfaced from the engine, tagged with the
// (question, model, round, sample, stage) context it occurred in.
class EngineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Metric preconditions: empty subsets, missing answer keys, degenerate input.
class MetricsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace icf
