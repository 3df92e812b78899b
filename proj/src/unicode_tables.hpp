#pragma once

#include <cstdint>
#include <span>

namespace qarank::unicode::detail {

struct CodepointRange {
    char32_t lo;
    char32_t hi;
};

struct CaseMapping {
    char32_t from;
    char32_t to;
};

// Sorted, non-overlapping.
extern const std::span<const CodepointRange> whitespace_ranges;
extern const std::span<const CodepointRange> punctuation_ranges;
extern const std::span<const CodepointRange> alnum_ranges;
// Sorted by `from`.
extern const std::span<const CaseMapping> lowercase_mappings;

}  // namespace qarank::unicode::detail
