#pragma once

#include <string>
#include <string_view>

namespace obsdict::utf8 {

/// Strict decoder. Throws Error(InvalidUtf8) on malformed input, overlong
/// forms and encoded surrogates.
std::u32string decode(std::string_view s);

std::string encode(std::u32string_view s);
std::string encode(char32_t c);

bool is_scalar(char32_t c) noexcept;

/// Lowercase hex, at least four digits ("6728", "1f600").
std::string codepoint_hex(char32_t c);
char32_t parse_codepoint_hex(std::string_view s);

}  // namespace obsdict::utf8
