#pragma once

#include <string>
#include <string_view>
#include <vector>

/// Minimal UTF-8 and Unicode-property helpers shared by the tokenizers and
/// text normalizers. Property tables are generated offline, so results do
/// not depend on the platform locale.
namespace qarank::unicode {

/// Decodes UTF-8; malformed bytes decode to U+FFFD one byte at a time.
std::u32string decode_utf8(std::string_view text);

void append_utf8(std::string& out, char32_t cp);
std::string encode_utf8(std::u32string_view text);

bool is_whitespace(char32_t cp);
/// General category P*.
bool is_punctuation(char32_t cp);
/// General categories L* and N*.
bool is_alnum(char32_t cp);
/// Simple (single code point) lowercase mapping.
char32_t to_lower(char32_t cp);

/// Splits on runs of Unicode whitespace. No empty tokens.
std::vector<std::string> split_whitespace(std::string_view text);

}  // namespace qarank::unicode
