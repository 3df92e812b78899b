#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace qarank {

struct Question {
    std::string text;

    bool operator==(const Question&) const = default;
};

struct AnswerSet {
    std::vector<std::string> answers;

    bool operator==(const AnswerSet&) const = default;
};

/// One retrieved passage. Ids are kept as strings even when the source file
/// stores them as integers.
struct Context {
    std::string id;
    std::string title;
    std::string text;
    double score = 0.0;
    bool has_answer = false;

    bool operator==(const Context&) const = default;
};

/// One QA example: the question, its gold answers, the retriever's ranked
/// contexts (best first) and, after re-ranking, the re-ordered list.
struct Document {
    Question question;
    AnswerSet answers;
    std::vector<Context> contexts;
    std::optional<std::vector<Context>> reordered_contexts;

    /// The list downstream stages should consume: reordered when present.
    const std::vector<Context>& ranked_contexts() const {
        return reordered_contexts ? *reordered_contexts : contexts;
    }

    bool operator==(const Document&) const = default;
};

struct Dataset {
    std::string name = "custom";
    std::string retriever_tag = "custom";
    std::vector<Document> documents;

    bool operator==(const Dataset&) const = default;
};

/// A per-document failure in a fail-soft batch run.
struct DocumentFailure {
    std::size_t index;
    std::string message;
};

/// Reads the pre-retrieved JSON format: an array of
/// `{question, answers, ctxs, reordered_ctxs?}` records. Context ids may be
/// strings or integers and scores numbers or numeric strings; a missing
/// `has_answer` reads as false. Every record is validated and the first
/// violation raises MalformedFormat naming the record index.
Dataset load_dataset(const std::filesystem::path& path);

/// Reads the QA-only JSONL format (`{question, answers}` per line). Blank
/// lines are skipped; errors carry the 1-based line number.
Dataset load_dataset_qa(const std::filesystem::path& path);

/// Loads either format, deciding by content: a leading `[` means the
/// pre-retrieved JSON array, anything else is treated as QA JSONL.
Dataset load_any_dataset(const std::filesystem::path& path);

/// Writes the pre-retrieved JSON format atomically. Ids are written as
/// strings and scores as numbers.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// Lists every invariant violation; empty when the document is well formed.
std::vector<std::string> validate_document(const Document& doc);

}  // namespace qarank
