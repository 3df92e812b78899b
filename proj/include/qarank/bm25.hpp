#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qarank/core_types.hpp"
#include "qarank/corpus.hpp"
#include "qarank/tokenizer.hpp"

namespace qarank {

struct Bm25Params {
    double k1 = 0.9;
    double b = 0.4;

    bool operator==(const Bm25Params&) const = default;
};

/// Throws ConfigError unless k1 >= 0 and 0 <= b <= 1.
void validate(const Bm25Params& params);

/// Lucene-style idf, ln(1 + (N - df + 0.5) / (df + 0.5)). Always positive.
double bm25_idf(std::size_t num_docs, std::size_t doc_freq);

/// One term's contribution to a passage score.
double bm25_term_score(double idf, double tf, double doc_length, double avg_doc_length, const Bm25Params& params);

struct Posting {
    std::uint32_t ordinal;
    std::uint32_t tf;

    bool operator==(const Posting&) const = default;
};

struct PassageRecord {
    std::string id;
    std::string title;
    std::string text;

    bool operator==(const PassageRecord&) const = default;
};

/// Immutable in-memory inverted index. Postings are sorted by passage
/// ordinal; concurrent searches are safe.
class Bm25Index {
  public:
    Bm25Index() = default;

    /// Tokenizes every passage with `tokenizer`. Passage ids must be unique.
    static Bm25Index build(const Corpus& corpus, const Bm25Params& params = {},
                           const TokenizerOptions& tokenizer = {});

    /// Reads an index directory written by save(). Throws FileNotFound,
    /// MalformedFormat.
    static Bm25Index load(const std::filesystem::path& dir);

    /// Writes manifest.json, postings.bin, doclens.bin and passages.jsonl
    /// into `dir` (created if missing).
    void save(const std::filesystem::path& dir) const;

    /// Top-k passages by BM25, ties broken by ascending ordinal. Only
    /// passages sharing at least one query term are returned. Each query
    /// token contributes once per occurrence.
    std::vector<Context> search(std::string_view query, std::size_t k) const;

    std::span<const Posting> postings(std::string_view term) const;

    std::size_t size() const noexcept { return passages_.size(); }
    bool empty() const noexcept { return passages_.empty(); }
    std::size_t vocabulary_size() const noexcept { return terms_.size(); }
    double avg_doc_length() const noexcept { return avg_doc_length_; }
    std::span<const std::uint32_t> doc_lengths() const noexcept { return doc_lengths_; }
    const PassageRecord& passage(std::size_t ordinal) const { return passages_.at(ordinal); }
    const Bm25Params& params() const noexcept { return params_; }
    const TokenizerOptions& tokenizer() const noexcept { return tokenizer_; }
    /// Sorted vocabulary.
    std::span<const std::string> terms() const noexcept { return terms_; }

    bool operator==(const Bm25Index& other) const;

  private:
    void rebuild_lookup();

    Bm25Params params_;
    TokenizerOptions tokenizer_;
    std::vector<std::string> terms_;
    std::vector<std::vector<Posting>> postings_;
    std::unordered_map<std::string, std::uint32_t> term_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    double avg_doc_length_ = 0.0;
    std::vector<PassageRecord> passages_;
};

inline Bm25Index build_index(const Corpus& corpus, const Bm25Params& params = {},
                             const TokenizerOptions& tokenizer = {}) {
    return Bm25Index::build(corpus, params, tokenizer);
}

/// Replaces every document's contexts with search(question, n_docs),
/// keeping document order. Existing reordered lists are dropped.
Dataset retrieve_for_dataset(const Bm25Index& index, const Dataset& dataset, std::size_t n_docs,
                             std::size_t jobs = 1);

}  // namespace qarank
