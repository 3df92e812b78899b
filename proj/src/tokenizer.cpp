#include "qarank/tokenizer.hpp"

#include "qarank/unicode.hpp"

namespace qarank {

std::vector<std::string> tokenize(std::string_view text, const TokenizerOptions& options) {
    std::vector<std::string> tokens;
    std::string current;
    auto flush = [&] {
        if (current.empty()) {
            return;
        }
        tokens.push_back(options.stem ? porter_stem(current) : std::move(current));
        current.clear();
    };
    for (char32_t cp : unicode::decode_utf8(text)) {
        if (unicode::is_alnum(cp)) {
            unicode::append_utf8(current, unicode::to_lower(cp));
        } else {
            flush();
        }
    }
    flush();
    return tokens;
}

}  // namespace qarank
