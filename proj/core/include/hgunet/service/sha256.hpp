#pragma once

#include <string>
#include <string_view>

namespace hgunet::service {

inline constexpr std::string_view kHashAlgorithm = "sha256";

/// Lowercase hex digest (64 chars).
std::string sha256_hex(std::string_view data);

}  // namespace hgunet::service
