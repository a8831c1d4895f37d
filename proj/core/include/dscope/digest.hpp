#pragma once

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace dscope {

/// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

/// Digest of a JSON value over its canonical serialization (sorted keys,
/// escaped strings). Equal values always produce equal digests.
std::string canonical_digest(const nlohmann::json& value);

}  // namespace dscope
