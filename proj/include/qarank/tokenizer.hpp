#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace qarank {

struct TokenizerOptions {
    bool stem = false;

    bool operator==(const TokenizerOptions&) const = default;
};

/// Lowercases and splits on every non-alphanumeric code point; empty tokens
/// are dropped. With `stem`, ASCII tokens go through the Porter stemmer.
std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& options = {});

/// Porter (1980) suffix stripping, following the reference C implementation
/// (including its "bli" and "logi" rules). Expects a lowercase ASCII word;
/// other input is returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace qarank
