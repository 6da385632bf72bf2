#pragma once

#include <string>
#include <string_view>

namespace tmon {

std::string base64_encode(std::string_view bytes);
// Throws ParseError on invalid input.
std::string base64_decode(std::string_view text);

// Lower-case hex SHA-256.
std::string sha256_hex(std::string_view bytes);

}  // namespace tmon
