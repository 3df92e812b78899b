#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qarank/bm25.hpp"
#include "qarank/core_types.hpp"
#include "qarank/corpus.hpp"
#include "qarank/errors.hpp"
#include "qarank/generation.hpp"
#include "qarank/metrics.hpp"
#include "qarank/rerank.hpp"

namespace qarank {

/// Output already exists and --force was not given.
class OutputExists : public InputError {
  public:
    explicit OutputExists(const std::string& path)
        : InputError(path + " already exists (use --force to overwrite)") {}
};

struct CorpusSource {
    std::filesystem::path path;
    CorpusFormat format = CorpusFormat::tsv;
    std::size_t words_per_passage = kDefaultWordsPerPassage;
};

enum class RetrieverMethod { bm25, dense, maxsim };

std::string to_string(RetrieverMethod method);

struct RetrieverConfig {
    RetrieverMethod method = RetrieverMethod::bm25;
    std::size_t n_docs = 100;
    Bm25Params bm25;
    TokenizerOptions tokenizer;
    /// Prebuilt index directory; when empty the index is built from the corpus.
    std::filesystem::path index_dir;
    /// Dense / maxsim: manifests for passage and query vectors.
    std::filesystem::path passage_embeddings;
    std::filesystem::path query_embeddings;
};

struct GenerationStage {
    GeneratorConfig generator;
    PromptTemplate prompt;
};

struct EvalConfig {
    std::vector<std::size_t> ks = kDefaultTopKs;
    /// Unset: evaluate the re-ordered lists whenever any document has one.
    std::optional<bool> use_reordered;
};

/// The JSON experiment config (`"config_version": 1`). Relative paths are
/// resolved against the config file's directory.
struct PipelineConfig {
    int config_version = 1;
    std::optional<CorpusSource> corpus;
    std::optional<std::filesystem::path> dataset;
    std::optional<RetrieverConfig> retriever;
    std::optional<RerankConfig> reranker;
    std::optional<GenerationStage> generator;
    EvalConfig eval;
    std::filesystem::path output_dir = "out";
    std::size_t jobs = 1;
    std::uint64_t seed = 0;
};

/// Parses and checks field types. Unknown keys are rejected. Throws
/// ConfigError.
PipelineConfig parse_pipeline_config(const nlohmann::json& root, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

/// Cross-stage checks for a full pipeline run: exactly one retriever, the
/// inputs each stage needs, valid stage parameters.
void validate(const PipelineConfig& cfg);

/// Seeds every retry policy in the config from cfg.seed.
void apply_seed(PipelineConfig& cfg);

CorpusFormat corpus_format_for(const std::filesystem::path& path);

// Stage building blocks shared by the CLI commands and the pipeline.

struct IndexSummary {
    std::size_t passages = 0;
    std::size_t vocabulary = 0;
};

/// Builds a BM25 index from `source` and writes it to `out_dir`. Refuses a
/// non-empty `out_dir` unless `force`.
IndexSummary build_index_stage(const CorpusSource& source, const Bm25Params& params, const TokenizerOptions& tokenizer,
                               const std::filesystem::path& out_dir, bool force);

/// Attaches n_docs contexts per document (has_answer flags filled in).
/// `corpus` is required for dense and maxsim, and for bm25 without an
/// index directory.
Dataset retrieve_stage(const RetrieverConfig& cfg, const Dataset& dataset, const std::optional<CorpusSource>& corpus,
                       std::size_t jobs);

struct GenerationResult {
    std::vector<std::string> predictions;
    std::vector<DocumentFailure> failures;
};

GenerationResult generate_stage(const GenerationStage& cfg, const Dataset& dataset, bool fail_soft = true);

/// One `{question, prediction}` object per line.
void save_predictions(const Dataset& dataset, const std::vector<std::string>& predictions,
                      const std::filesystem::path& path);
std::vector<std::string> load_predictions(const std::filesystem::path& path);

/// `{"retrieval": ..., "retrieval_reordered"?: ..., "generation"?: ...}`.
/// Throws ConfigError when use_reordered is requested but no document has a
/// re-ordered list.
nlohmann::ordered_json evaluate_stage(const Dataset& dataset, const EvalConfig& cfg,
                                      const std::optional<std::vector<std::string>>& predictions);

struct PipelineResult {
    nlohmann::ordered_json report;
    std::size_t failures = 0;
};

/// Runs index -> retrieve -> rerank -> generate -> eval as configured,
/// persisting every intermediate artifact under cfg.output_dir and writing
/// report.json there.
PipelineResult run_pipeline(const PipelineConfig& cfg, bool force);

/// Refuses to overwrite `path` unless `force`.
void check_writable_output(const std::filesystem::path& path, bool force);

}  // namespace qarank
