#include "qarank/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "qarank/errors.hpp"
#include "qarank/metrics.hpp"
#include "qarank/parallel.hpp"

namespace qarank {
namespace {

void require_contexts(const Document& doc) {
    if (doc.contexts.empty()) {
        throw ScorerFailure("document has no contexts to re-rank");
    }
}

// Top-down stable merge sort over indices. The element from the left run
// wins unless the comparator prefers the right one.
void merge_sort(std::vector<std::size_t>& order, std::vector<std::size_t>& scratch, std::size_t lo, std::size_t hi,
                const std::function<bool(std::size_t, std::size_t)>& right_wins) {
    if (hi - lo < 2) {
        return;
    }
    const auto mid = lo + (hi - lo) / 2;
    merge_sort(order, scratch, lo, mid, right_wins);
    merge_sort(order, scratch, mid, hi, right_wins);
    auto left = lo;
    auto right = mid;
    auto out = lo;
    while (left < mid && right < hi) {
        if (right_wins(order[left], order[right])) {
            scratch[out++] = order[right++];
        } else {
            scratch[out++] = order[left++];
        }
    }
    while (left < mid) {
        scratch[out++] = order[left++];
    }
    while (right < hi) {
        scratch[out++] = order[right++];
    }
    std::copy(scratch.begin() + static_cast<std::ptrdiff_t>(lo), scratch.begin() + static_cast<std::ptrdiff_t>(hi),
              order.begin() + static_cast<std::ptrdiff_t>(lo));
}

// Rebuilds a window from the scorer's id list, validating it is a
// permutation. Repeated ids are matched to their occurrences in order.
std::vector<Context> apply_ranking(std::span<const Context> window, const std::vector<std::string>& ranking) {
    if (ranking.size() != window.size()) {
        throw PermutationViolation("ranking has " + std::to_string(ranking.size()) + " ids for a window of " +
                                   std::to_string(window.size()));
    }
    std::map<std::string, std::vector<std::size_t>> slots;
    for (std::size_t i = window.size(); i-- > 0;) {
        slots[window[i].id].push_back(i);
    }
    std::vector<Context> out;
    out.reserve(window.size());
    for (const auto& id : ranking) {
        auto it = slots.find(id);
        if (it == slots.end() || it->second.empty()) {
            throw PermutationViolation("ranking contains unexpected or repeated id \"" + id + "\"");
        }
        out.push_back(window[it->second.back()]);
        it->second.pop_back();
    }
    return out;
}

class ConstantScorer final : public PointwiseScorer {
  public:
    double score(const Question&, const Context&) const override { return 0.0; }
};

class IdentityWindowScorer final : public WindowScorer {
  public:
    std::vector<std::string> order(const Question&, std::span<const Context> window) const override {
        std::vector<std::string> ids;
        for (const auto& ctx : window) {
            ids.push_back(ctx.id);
        }
        return ids;
    }
};

std::unique_ptr<PointwiseScorer> builtin_scorer(const RerankConfig& cfg, const Document& doc) {
    if (cfg.scorer == "bm25") {
        return bm25_candidate_scorer(doc, cfg.bm25, cfg.tokenizer);
    }
    if (cfg.scorer == "has_answer") {
        return std::make_unique<HasAnswerOracle>(doc.answers);
    }
    if (cfg.scorer == "identity") {
        return std::make_unique<ConstantScorer>();
    }
    throw ConfigError("unknown re-rank scorer \"" + cfg.scorer + "\"");
}

}  // namespace

void check_permutation(std::span<const Context> original, std::span<const Context> reordered) {
    std::map<std::string, long> balance;
    for (const auto& c : original) {
        ++balance[c.id];
    }
    for (const auto& c : reordered) {
        --balance[c.id];
    }
    for (const auto& [id, count] : balance) {
        if (count != 0) {
            throw PermutationViolation("re-ordered contexts are not a permutation of the input (id " + id + ")");
        }
    }
}

Document rerank_pointwise(const PointwiseScorer& scorer, const Document& doc) {
    require_contexts(doc);
    std::vector<Context> scored = doc.contexts;
    for (auto& ctx : scored) {
        const double s = scorer.score(doc.question, ctx);
        if (!std::isfinite(s)) {
            throw ScorerFailure("scorer returned a non-finite score for context " + ctx.id);
        }
        ctx.score = s;
    }
    std::stable_sort(scored.begin(), scored.end(), [](const Context& a, const Context& b) { return a.score > b.score; });
    Document out = doc;
    out.reordered_contexts = std::move(scored);
    return out;
}

Document rerank_pairwise(const PairwiseComparator& comparator, const Document& doc) {
    require_contexts(doc);
    const auto& contexts = doc.contexts;
    std::vector<std::size_t> order(contexts.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> scratch(contexts.size());
    merge_sort(order, scratch, 0, order.size(), [&](std::size_t left, std::size_t right) {
        return comparator.prefer(doc.question, contexts[left], contexts[right]) == Preference::second;
    });
    std::vector<Context> reordered;
    reordered.reserve(order.size());
    for (auto i : order) {
        reordered.push_back(contexts[i]);
    }
    Document out = doc;
    out.reordered_contexts = std::move(reordered);
    return out;
}

void validate(const SlidingWindow& cfg) {
    if (cfg.window < 2) {
        throw ConfigError("sliding window size must be at least 2");
    }
    if (cfg.stride < 1 || cfg.stride >= cfg.window) {
        throw ConfigError("sliding window stride must satisfy 1 <= stride < window");
    }
    if (cfg.passes < 1) {
        throw ConfigError("sliding window needs at least one pass");
    }
}

Document rerank_listwise_sliding(const WindowScorer& scorer, const Document& doc, const SlidingWindow& cfg) {
    validate(cfg);
    require_contexts(doc);
    std::vector<Context> ranking = doc.contexts;
    const auto n = ranking.size();
    for (std::size_t pass = 0; pass < cfg.passes; ++pass) {
        std::size_t end = n;
        while (true) {
            const auto start = end > cfg.window ? end - cfg.window : 0;
            const std::span<const Context> window(ranking.data() + start, end - start);
            auto reordered = apply_ranking(window, scorer.order(doc.question, window));
            std::move(reordered.begin(), reordered.end(), ranking.begin() + static_cast<std::ptrdiff_t>(start));
            if (start == 0) {
                break;
            }
            end -= cfg.stride;
        }
    }
    Document out = doc;
    out.reordered_contexts = std::move(ranking);
    return out;
}

Bm25CandidateScorer::Bm25CandidateScorer(std::span<const Context> candidates, const Bm25Params& params,
                                         const TokenizerOptions& tokenizer)
    : params_(params), tokenizer_(tokenizer), num_docs_(candidates.size()), avg_doc_length_(0.0) {
    validate(params_);
    std::size_t total = 0;
    for (const auto& ctx : candidates) {
        auto tokens = tokenize(ctx.text, tokenizer_);
        total += tokens.size();
        std::sort(tokens.begin(), tokens.end());
        tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
        for (auto& t : tokens) {
            ++doc_freq_[std::move(t)];
        }
    }
    if (num_docs_ > 0) {
        avg_doc_length_ = static_cast<double>(total) / static_cast<double>(num_docs_);
    }
}

double Bm25CandidateScorer::score(const Question& question, const Context& context) const {
    const auto doc_tokens = tokenize(context.text, tokenizer_);
    std::map<std::string_view, std::size_t> tf;
    for (const auto& t : doc_tokens) {
        ++tf[t];
    }
    double total = 0.0;
    for (const auto& term : tokenize(question.text, tokenizer_)) {
        auto it = tf.find(term);
        if (it == tf.end()) {
            continue;
        }
        auto df = doc_freq_.find(term);
        // A context outside the candidate set still gets df >= 1.
        const std::size_t doc_freq = df == doc_freq_.end() ? 1 : df->second;
        total += bm25_term_score(bm25_idf(std::max(num_docs_, doc_freq), doc_freq), static_cast<double>(it->second),
                                 static_cast<double>(doc_tokens.size()), avg_doc_length_, params_);
    }
    return total;
}

std::unique_ptr<PointwiseScorer> bm25_candidate_scorer(const Document& doc, const Bm25Params& params,
                                                       const TokenizerOptions& tokenizer) {
    return std::make_unique<Bm25CandidateScorer>(doc.contexts, params, tokenizer);
}

double HasAnswerOracle::score(const Question&, const Context& context) const {
    return has_answer(context.text, answers_) ? 1.0 : 0.0;
}

Preference ScoreComparator::prefer(const Question& question, const Context& first, const Context& second) const {
    return scorer_.score(question, second) > scorer_.score(question, first) ? Preference::second : Preference::first;
}

std::vector<std::string> ScoreWindowScorer::order(const Question& question, std::span<const Context> window) const {
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(window.size());
    for (std::size_t i = 0; i < window.size(); ++i) {
        scored.emplace_back(scorer_.score(question, window[i]), i);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::string> ids;
    ids.reserve(window.size());
    for (const auto& [s, i] : scored) {
        ids.push_back(window[i].id);
    }
    return ids;
}

Document remote_rerank(const RemoteRerankConfig& cfg, const Document& doc, const std::string& method_tag,
                       std::uint64_t request_key) {
    require_contexts(doc);
    auto headers = auth_headers_from_env(cfg.api_key_env);
    if (!method_tag.empty()) {
        headers.emplace_back("X-Rerank-Method", method_tag);
    }
    const JsonHttpClient client(cfg.endpoint, cfg.retry, std::move(headers));

    nlohmann::json passages = nlohmann::json::array();
    for (const auto& ctx : doc.contexts) {
        passages.push_back({{"id", ctx.id}, {"text", ctx.text}});
    }
    const auto reply = client.post({{"query", doc.question.text}, {"passages", std::move(passages)}}, request_key);

    std::vector<std::string> ranking;
    try {
        for (const auto& id : reply.at("ranking")) {
            ranking.push_back(id.get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(cfg.endpoint + ": malformed rerank response: " + e.what());
    }
    Document out = doc;
    try {
        out.reordered_contexts = apply_ranking(doc.contexts, ranking);
    } catch (const PermutationViolation& e) {
        throw ProtocolError(cfg.endpoint + ": " + e.what());
    }
    return out;
}

RerankMethod parse_rerank_method(const std::string& name) {
    if (name == "pointwise") {
        return RerankMethod::pointwise;
    }
    if (name == "pairwise") {
        return RerankMethod::pairwise;
    }
    if (name == "listwise") {
        return RerankMethod::listwise;
    }
    throw ConfigError("unknown re-rank method \"" + name + "\" (expected pointwise, pairwise or listwise)");
}

std::string to_string(RerankMethod method) {
    switch (method) {
        case RerankMethod::pointwise:
            return "pointwise";
        case RerankMethod::pairwise:
            return "pairwise";
        case RerankMethod::listwise:
            return "listwise";
    }
    return "pointwise";
}

void validate(const RerankConfig& cfg) {
    if (cfg.method == RerankMethod::listwise) {
        validate(cfg.sliding);
    }
    if (cfg.scorer == "remote") {
        if (cfg.remote.endpoint.empty()) {
            throw ConfigError("remote re-ranker needs an endpoint");
        }
        if (cfg.remote.retry.max_attempts < 1) {
            throw ConfigError("remote re-ranker needs at least one attempt");
        }
        return;
    }
    if (cfg.scorer != "bm25" && cfg.scorer != "has_answer" && cfg.scorer != "identity") {
        throw ConfigError("unknown re-rank scorer \"" + cfg.scorer + "\"");
    }
    validate(cfg.bm25);
}

Document rerank_document(const RerankConfig& cfg, const Document& doc, std::uint64_t request_key) {
    if (cfg.scorer == "remote") {
        return remote_rerank(cfg.remote, doc, to_string(cfg.method), request_key);
    }
    if (cfg.method == RerankMethod::listwise && cfg.scorer == "identity") {
        return rerank_listwise_sliding(IdentityWindowScorer{}, doc, cfg.sliding);
    }
    const auto scorer = builtin_scorer(cfg, doc);
    switch (cfg.method) {
        case RerankMethod::pointwise:
            return rerank_pointwise(*scorer, doc);
        case RerankMethod::pairwise:
            return rerank_pairwise(ScoreComparator(*scorer), doc);
        case RerankMethod::listwise:
            return rerank_listwise_sliding(ScoreWindowScorer(*scorer), doc, cfg.sliding);
    }
    throw ConfigError("unknown re-rank method");
}

RerankBatch rerank_dataset(const RerankConfig& cfg, const Dataset& dataset, std::size_t jobs) {
    validate(cfg);
    RerankBatch batch{dataset, {}};
    std::vector<std::string> errors(dataset.documents.size());
    std::vector<char> failed(dataset.documents.size(), 0);
    parallel_for(dataset.documents.size(), jobs, [&](std::size_t i) {
        const auto& doc = dataset.documents[i];
        try {
            auto reranked = rerank_document(cfg, doc, i);
            check_permutation(doc.contexts, *reranked.reordered_contexts);
            batch.dataset.documents[i] = std::move(reranked);
        } catch (const Error& e) {
            batch.dataset.documents[i].reordered_contexts.reset();
            errors[i] = e.what();
            failed[i] = 1;
        }
    });
    for (std::size_t i = 0; i < failed.size(); ++i) {
        if (failed[i]) {
            batch.failures.push_back({i, std::move(errors[i])});
        }
    }
    return batch;
}

}  // namespace qarank
