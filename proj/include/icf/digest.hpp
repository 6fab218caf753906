#pragma once

#include <string>

namespace icf {

/// Hex-encoded SHA-256 of the given bytes.
std::string sha256_hex(const std::string& bytes);

}  // namespace icf
