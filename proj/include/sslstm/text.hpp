#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 helpers and the character classes the preprocessing rules need.
namespace sslstm::text {

/// Decodes UTF-8; malformed sequences become U+FFFD.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);
void append_utf8(std::string& out, char32_t cp);

bool is_valid_utf8(std::string_view s);

bool is_space(char32_t cp);
bool is_emoji(char32_t cp);
/// Zero-width joiners, variation selectors and skin-tone modifiers that
/// glue emoji sequences together.
bool is_emoji_component(char32_t cp);
/// Unicode general categories P* and S* (approximated by block ranges).
bool is_punct_or_symbol(char32_t cp);
bool is_devanagari(char32_t cp);

std::string ascii_lower(std::string_view s);

bool contains_whitespace(std::string_view s);

/// Splits on runs of ASCII space/tab.
std::vector<std::string_view> split_fields(std::string_view line);

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL);

} // namespace sslstm::text
