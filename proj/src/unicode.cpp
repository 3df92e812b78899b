#include "qarank/unicode.hpp"

#include <algorithm>

#include "unicode_tables.hpp"

namespace qarank::unicode {
namespace {

constexpr char32_t kReplacement = 0xFFFD;

bool in_ranges(std::span<const detail::CodepointRange> table, char32_t cp) {
    auto it = std::upper_bound(table.begin(), table.end(), cp,
                               [](char32_t value, const detail::CodepointRange& r) { return value < r.lo; });
    if (it == table.begin()) {
        return false;
    }
    --it;
    return cp <= it->hi;
}

bool is_continuation(unsigned char byte) { return (byte & 0xC0) == 0x80; }

}  // namespace

// Ill-formed input follows the "maximal subpart" convention: each maximal
// prefix of a well-formed sequence becomes one U+FFFD.
std::u32string decode_utf8(std::string_view text) {
    std::u32string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        const auto lead = static_cast<unsigned char>(text[i]);
        if (lead < 0x80) {
            out.push_back(lead);
            ++i;
            continue;
        }
        std::size_t len = 0;
        char32_t cp = 0;
        // Allowed range of the second byte rules out overlongs, surrogates
        // and values above U+10FFFF.
        unsigned char lo = 0x80, hi = 0xBF;
        if (lead >= 0xC2 && lead <= 0xDF) {
            len = 2;
            cp = lead & 0x1F;
        } else if (lead >= 0xE0 && lead <= 0xEF) {
            len = 3;
            cp = lead & 0x0F;
            if (lead == 0xE0) lo = 0xA0;
            if (lead == 0xED) hi = 0x9F;
        } else if (lead >= 0xF0 && lead <= 0xF4) {
            len = 4;
            cp = lead & 0x07;
            if (lead == 0xF0) lo = 0x90;
            if (lead == 0xF4) hi = 0x8F;
        } else {
            out.push_back(kReplacement);
            ++i;
            continue;
        }
        std::size_t k = 1;
        for (; k < len && i + k < text.size(); ++k) {
            const auto byte = static_cast<unsigned char>(text[i + k]);
            const bool ok = k == 1 ? (byte >= lo && byte <= hi) : is_continuation(byte);
            if (!ok) {
                break;
            }
            cp = (cp << 6) | (byte & 0x3F);
        }
        if (k < len) {
            out.push_back(kReplacement);
        } else {
            out.push_back(cp);
        }
        i += k;
    }
    return out;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

std::string encode_utf8(std::u32string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char32_t cp : text) {
        append_utf8(out, cp);
    }
    return out;
}

bool is_whitespace(char32_t cp) { return in_ranges(detail::whitespace_ranges, cp); }

bool is_punctuation(char32_t cp) { return in_ranges(detail::punctuation_ranges, cp); }

bool is_alnum(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z') || (cp >= U'0' && cp <= U'9');
    }
    return in_ranges(detail::alnum_ranges, cp);
}

char32_t to_lower(char32_t cp) {
    if (cp < 0x80) {
        return (cp >= U'A' && cp <= U'Z') ? cp + 32 : cp;
    }
    const auto table = detail::lowercase_mappings;
    auto it = std::lower_bound(table.begin(), table.end(), cp,
                               [](const detail::CaseMapping& m, char32_t value) { return m.from < value; });
    if (it != table.end() && it->from == cp) {
        return it->to;
    }
    return cp;
}

std::vector<std::string> split_whitespace(std::string_view text) {
    std::vector<std::string> words;
    std::string current;
    for (char32_t cp : decode_utf8(text)) {
        if (is_whitespace(cp)) {
            if (!current.empty()) {
                words.push_back(std::move(current));
                current.clear();
            }
        } else {
            append_utf8(current, cp);
        }
    }
    if (!current.empty()) {
        words.push_back(std::move(current));
    }
    return words;
}

}  // namespace qarank::unicode
