#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qarank/core_types.hpp"

namespace qarank {

/// Lowercase, drop Unicode punctuation, drop the articles a/an/the, collapse
/// whitespace.
std::string normalize_text(std::string_view s);

/// normalize_text split on whitespace.
std::vector<std::string> normalized_tokens(std::string_view s);

/// True iff some answer's normalized token sequence occurs contiguously in
/// the normalized tokens of `context_text`. Answers that normalize to
/// nothing never match.
bool has_answer(std::string_view context_text, const AnswerSet& answers);

/// Recomputes every stored has_answer flag (both lists) from the text.
void annotate_has_answer(Dataset& dataset);

inline const std::vector<std::size_t> kDefaultTopKs{1, 5, 10, 20, 50, 100};

struct RetrievalReport {
    /// (k, accuracy percent) in the order requested.
    std::vector<std::pair<std::size_t, double>> accuracy;
    bool use_reordered = false;
    std::size_t question_count = 0;
    /// Documents that had no reordered list while use_reordered was set.
    std::size_t reordered_fallbacks = 0;

    double at(std::size_t k) const;
    bool operator==(const RetrievalReport&) const = default;
};

/// Percent of documents with an answer-bearing context in the first k
/// (re-ordered, when requested and present) contexts. has_answer is
/// recomputed from text; stored flags are ignored. Throws EmptyDataset and
/// ConfigError (empty ks or k == 0).
RetrievalReport top_k_accuracy(const Dataset& dataset, std::span<const std::size_t> ks, bool use_reordered);

int exact_match(std::string_view prediction, const AnswerSet& answers);

struct TokenF1 {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;

    bool operator==(const TokenF1&) const = default;
};

/// SQuAD token overlap against each gold answer; returns the triple of the
/// gold with the highest f1 (first one on ties).
TokenF1 token_f1(std::string_view prediction, const AnswerSet& answers);

/// 1 iff some gold answer's normalized tokens occur contiguously in the
/// normalized prediction.
int contains(std::string_view prediction, const AnswerSet& answers);

struct GenerationReport {
    double exact_match = 0.0;
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double contains = 0.0;
    std::size_t count = 0;

    bool operator==(const GenerationReport&) const = default;
};

/// Means over documents, as percents. Throws LengthMismatch.
GenerationReport evaluate_generation(const Dataset& dataset, std::span<const std::string> predictions);

nlohmann::ordered_json to_json(const RetrievalReport& report);
nlohmann::ordered_json to_json(const GenerationReport& report);

}  // namespace qarank
