#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace spim::detail {

std::string base64_encode(std::string_view bytes);
/// Strict: standard alphabet, padded, no whitespace. nullopt on any violation.
std::optional<std::string> base64_decode(std::string_view text);

}  // namespace spim::detail
