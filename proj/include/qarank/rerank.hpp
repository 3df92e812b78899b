#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "qarank/bm25.hpp"
#include "qarank/core_types.hpp"
#include "qarank/http_client.hpp"

namespace qarank {

/// Scores one context independently of the others. Throws ScorerFailure.
class PointwiseScorer {
  public:
    virtual ~PointwiseScorer() = default;
    virtual double score(const Question& question, const Context& context) const = 0;
};

enum class Preference { first, second };

/// Decides which of two contexts ranks higher. Must always answer.
class PairwiseComparator {
  public:
    virtual ~PairwiseComparator() = default;
    virtual Preference prefer(const Question& question, const Context& first, const Context& second) const = 0;
};

/// Returns the ids of `window`, best first. Anything other than a
/// permutation of the window's ids is a PermutationViolation.
class WindowScorer {
  public:
    virtual ~WindowScorer() = default;
    virtual std::vector<std::string> order(const Question& question, std::span<const Context> window) const = 0;
};

/// Stable sort by descending score. The re-ordered contexts carry the new
/// scores; `contexts` is left as is.
Document rerank_pointwise(const PointwiseScorer& scorer, const Document& doc);

/// Stable top-down merge sort driven by the comparator: at most
/// n * ceil(log2 n) comparisons. A comparator that always prefers the first
/// argument keeps the original order.
Document rerank_pairwise(const PairwiseComparator& comparator, const Document& doc);

struct SlidingWindow {
    std::size_t window = 20;
    std::size_t stride = 10;
    std::size_t passes = 1;
};

/// Throws ConfigError unless window >= 2, 1 <= stride < window, passes >= 1.
void validate(const SlidingWindow& cfg);

/// Applies the window scorer to [end - window, end) for end = n, n - stride,
/// ... until a window reaches the front (the last one may be shorter). Each
/// application rewrites that slice of the current ordering.
Document rerank_listwise_sliding(const WindowScorer& scorer, const Document& doc, const SlidingWindow& cfg = {});

/// BM25 restricted to a candidate set: N, document frequencies and average
/// length come from the candidates' text only.
class Bm25CandidateScorer final : public PointwiseScorer {
  public:
    Bm25CandidateScorer(std::span<const Context> candidates, const Bm25Params& params = {},
                        const TokenizerOptions& tokenizer = {});

    double score(const Question& question, const Context& context) const override;

  private:
    Bm25Params params_;
    TokenizerOptions tokenizer_;
    std::size_t num_docs_;
    double avg_doc_length_;
    std::unordered_map<std::string, std::size_t> doc_freq_;
};

std::unique_ptr<PointwiseScorer> bm25_candidate_scorer(const Document& doc, const Bm25Params& params = {},
                                                       const TokenizerOptions& tokenizer = {});

/// 1 for contexts containing a gold answer, 0 otherwise. Uses the gold
/// answers, so it is an upper-bound reference, not a real re-ranker.
class HasAnswerOracle final : public PointwiseScorer {
  public:
    explicit HasAnswerOracle(AnswerSet answers) : answers_(std::move(answers)) {}
    double score(const Question& question, const Context& context) const override;

  private:
    AnswerSet answers_;
};

/// Comparator and window scorer derived from a pointwise scorer. Ties keep
/// the incoming order.
class ScoreComparator final : public PairwiseComparator {
  public:
    explicit ScoreComparator(const PointwiseScorer& scorer) : scorer_(scorer) {}
    Preference prefer(const Question& question, const Context& first, const Context& second) const override;

  private:
    const PointwiseScorer& scorer_;
};

class ScoreWindowScorer final : public WindowScorer {
  public:
    explicit ScoreWindowScorer(const PointwiseScorer& scorer) : scorer_(scorer) {}
    std::vector<std::string> order(const Question& question, std::span<const Context> window) const override;

  private:
    const PointwiseScorer& scorer_;
};

struct RemoteRerankConfig {
    std::string endpoint;
    RetryPolicy retry;
    std::string api_key_env = "QARANK_API_KEY";
};

/// Sends `{"query", "passages": [{"id", "text"}]}` to the endpoint and
/// applies the returned `{"ranking": [ids]}` as the re-ordered list. The
/// method tag travels in the X-Rerank-Method header. A ranking that is not
/// a permutation of the request ids, or a malformed reply, raises
/// ProtocolError; transport failures are retried per cfg.retry.
Document remote_rerank(const RemoteRerankConfig& cfg, const Document& doc, const std::string& method_tag,
                       std::uint64_t request_key = 0);

/// Throws PermutationViolation unless `reordered` holds exactly the ids of
/// `original` (as a multiset).
void check_permutation(std::span<const Context> original, std::span<const Context> reordered);

enum class RerankMethod { pointwise, pairwise, listwise };

RerankMethod parse_rerank_method(const std::string& name);
std::string to_string(RerankMethod method);

/// Which scorer drives a re-rank run: a built-in name ("bm25", "has_answer",
/// "identity") or a remote endpoint.
struct RerankConfig {
    RerankMethod method = RerankMethod::pointwise;
    std::string scorer = "bm25";
    SlidingWindow sliding;
    Bm25Params bm25;
    TokenizerOptions tokenizer;
    /// Set when scorer == "remote".
    RemoteRerankConfig remote;
};

void validate(const RerankConfig& cfg);

/// Re-ranks one document according to `cfg`.
Document rerank_document(const RerankConfig& cfg, const Document& doc, std::uint64_t request_key = 0);

struct RerankBatch {
    Dataset dataset;
    std::vector<DocumentFailure> failures;
};

/// Fail-soft batch: a document whose re-rank throws keeps its contexts and
/// gets no reordered list, and the failure is recorded. At most `jobs`
/// documents are in flight at once; document i uses request key i.
RerankBatch rerank_dataset(const RerankConfig& cfg, const Dataset& dataset, std::size_t jobs = 1);

}  // namespace qarank
