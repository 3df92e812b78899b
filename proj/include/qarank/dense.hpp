#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "qarank/core_types.hpp"
#include "qarank/corpus.hpp"

namespace qarank {

enum class Metric { dot, cosine };

Metric parse_metric(const std::string& name);
std::string to_string(Metric metric);

struct ScoredId {
    std::string id;
    std::size_t row;
    double score;

    bool operator==(const ScoredId&) const = default;
};

/// Dense passage vectors, row-major float32. Scores accumulate in double.
/// Immutable once constructed.
class EmbeddingStore {
  public:
    /// Validates shape, finiteness, id uniqueness and (for cosine) that no
    /// row is the zero vector.
    EmbeddingStore(std::size_t dim, std::vector<float> vectors, std::vector<std::string> ids, Metric metric = Metric::dot,
                   std::string retriever_tag = "custom");

    /// Raw little-endian float32 file plus newline-delimited ids.
    static EmbeddingStore load(const std::filesystem::path& vector_path, const std::filesystem::path& id_path,
                               std::size_t dim, Metric metric = Metric::dot, std::string retriever_tag = "custom");

    /// Reads a manifest.json `{format, kind: "dense", dim, count, metric,
    /// retriever_tag, vectors, ids}`; file names resolve next to the manifest.
    static EmbeddingStore load_manifest(const std::filesystem::path& manifest_path);

    /// Writes manifest.json, vectors.f32 and ids.txt into `dir`.
    void save(const std::filesystem::path& dir) const;

    /// Exact top-k, descending score, ties by ascending row.
    std::vector<ScoredId> search(std::span<const float> query, std::size_t k) const;

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return ids_.size(); }
    Metric metric() const noexcept { return metric_; }
    const std::string& retriever_tag() const noexcept { return retriever_tag_; }
    const std::string& id(std::size_t row) const { return ids_.at(row); }
    std::span<const std::string> ids() const noexcept { return ids_; }
    std::span<const float> row(std::size_t r) const { return std::span(vectors_).subspan(r * dim_, dim_); }

    /// Row index of `id`, or size() when absent.
    std::size_t find(const std::string& id) const;

  private:
    std::size_t dim_;
    std::vector<float> vectors_;
    std::vector<std::string> ids_;
    std::vector<double> norms_;
    Metric metric_;
    std::string retriever_tag_;
};

inline std::vector<ScoredId> search_dense(const EmbeddingStore& store, std::span<const float> query, std::size_t k) {
    return store.search(query, k);
}

/// One vector per token (late-interaction representation).
class MultiVector {
  public:
    /// `data` holds token_count * dim floats, row-major. Must be non-empty
    /// and finite.
    MultiVector(std::size_t dim, std::vector<float> data);
    static MultiVector from_rows(const std::vector<std::vector<float>>& rows);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t token_count() const noexcept { return data_.size() / dim_; }
    std::span<const float> token(std::size_t i) const { return std::span(data_).subspan(i * dim_, dim_); }
    std::span<const float> data() const noexcept { return data_; }

  private:
    std::size_t dim_;
    std::vector<float> data_;
};

/// Sum over query tokens of the best dot product against any document token.
double maxsim_score(const MultiVector& query, const MultiVector& doc);

struct MultiVectorDoc {
    std::string id;
    MultiVector vectors;
};

/// Exact top-k by maxsim_score; ties keep input order.
std::vector<ScoredId> search_maxsim(const MultiVector& query, std::span<const MultiVectorDoc> docs, std::size_t k);

/// Per-passage token matrices on disk: manifest.json `{format, kind:
/// "multivector", dim, count, tokens, metric: "dot", retriever_tag, vectors,
/// ids, token_counts}`.
class MultiVectorStore {
  public:
    MultiVectorStore(std::vector<MultiVectorDoc> docs, std::string retriever_tag = "colbert");

    static MultiVectorStore load_manifest(const std::filesystem::path& manifest_path);
    void save(const std::filesystem::path& dir) const;

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return docs_.size(); }
    std::span<const MultiVectorDoc> docs() const noexcept { return docs_; }
    const std::string& retriever_tag() const noexcept { return retriever_tag_; }

    std::vector<ScoredId> search(const MultiVector& query, std::size_t k) const {
        return search_maxsim(query, docs_, k);
    }

  private:
    std::vector<MultiVectorDoc> docs_;
    std::size_t dim_ = 0;
    std::string retriever_tag_;
};

/// Dense retrieval over a dataset. Query vectors come from a second store
/// whose ids are the document positions ("0", "1", ...) in `dataset`;
/// `corpus` supplies title and text for each hit. Throws InputError when a
/// query vector is missing or a hit has no passage in the corpus.
Dataset retrieve_dense_for_dataset(const EmbeddingStore& passages, const EmbeddingStore& queries, const Corpus& corpus,
                                   const Dataset& dataset, std::size_t n_docs, std::size_t jobs = 1);

/// Late-interaction counterpart of retrieve_dense_for_dataset.
Dataset retrieve_maxsim_for_dataset(const MultiVectorStore& passages, const MultiVectorStore& queries,
                                    const Corpus& corpus, const Dataset& dataset, std::size_t n_docs,
                                    std::size_t jobs = 1);

}  // namespace qarank
