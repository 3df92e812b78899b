#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace qarank {

struct RawDoc {
    std::string doc_id;
    std::string title;
    std::string body;
};

/// A fixed-size chunk of a RawDoc. `passage_id` is `doc_id#ordinal`.
struct Passage {
    std::string passage_id;
    std::string title;
    std::string text;
    std::size_t word_count = 0;

    bool operator==(const Passage&) const = default;
};

struct Corpus {
    std::vector<Passage> passages;
    std::string source_tag = "custom";
};

enum class CorpusFormat { tsv, jsonl };

CorpusFormat parse_corpus_format(const std::string& name);

inline constexpr std::size_t kDefaultWordsPerPassage = 100;

/// Splits `doc.body` into consecutive, non-overlapping runs of
/// `words_per_passage` whitespace-delimited words; only the last chunk may be
/// shorter. Chunk text joins words with single spaces.
std::vector<Passage> chunk_document(const RawDoc& doc, std::size_t words_per_passage = kDefaultWordsPerPassage);

/// TSV rows (header `id\ttext\ttitle`) are taken as already-chunked passages;
/// JSONL rows are `{doc_id, title, body}` documents run through
/// chunk_document. Errors report the 1-based line number.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   std::size_t words_per_passage = kDefaultWordsPerPassage);

/// Writes passages in the TSV layout load_corpus reads.
void save_corpus_tsv(const Corpus& corpus, const std::filesystem::path& path);

}  // namespace qarank
