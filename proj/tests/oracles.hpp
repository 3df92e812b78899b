#pragma once

// Brute-force reference implementations used to check the fast paths.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "qarank/bm25.hpp"
#include "qarank/tokenizer.hpp"

namespace qarank::oracle {

struct Hit {
    std::size_t ordinal;
    double score;
};

/// Scores every passage directly from the Lucene BM25 formula, one query
/// token occurrence at a time, then sorts by (score desc, ordinal asc).
/// Passages sharing no term with the query are not returned.
inline std::vector<Hit> bm25_search(const std::vector<std::string>& texts, const std::string& query,
                                    const Bm25Params& params, std::size_t k, const TokenizerOptions& tok = {}) {
    std::vector<std::vector<std::string>> docs;
    double total = 0;
    for (const auto& t : texts) {
        docs.push_back(tokenize(t, tok));
        total += static_cast<double>(docs.back().size());
    }
    std::map<std::string, double> doc_freq;
    for (const auto& d : docs) {
        for (const auto& term : std::set<std::string>(d.begin(), d.end())) {
            doc_freq[term] += 1;
        }
    }
    const double n = static_cast<double>(docs.size());
    const double avgdl = docs.empty() ? 0.0 : total / n;
    std::vector<Hit> hits;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        double score = 0;
        bool matched = false;
        for (const auto& term : tokenize(query, tok)) {
            const double tf = static_cast<double>(std::count(docs[d].begin(), docs[d].end(), term));
            if (tf == 0) {
                continue;
            }
            matched = true;
            const double df = doc_freq[term];
            const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
            const double len = static_cast<double>(docs[d].size());
            score += idf * tf * (params.k1 + 1) / (tf + params.k1 * (1 - params.b + params.b * len / avgdl));
        }
        if (matched) {
            hits.push_back({d, score});
        }
    }
    std::stable_sort(hits.begin(), hits.end(), [](const Hit& a, const Hit& b) { return a.score > b.score; });
    hits.resize(std::min(k, hits.size()));
    return hits;
}

/// Full argsort of `scores`: descending, ties by ascending index.
inline std::vector<std::size_t> argsort_desc(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

inline double dot(std::span<const float> a, std::span<const float> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        s += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return s;
}

/// Nested-loop late-interaction score over row-major token matrices.
inline double maxsim(const std::vector<std::vector<float>>& q, const std::vector<std::vector<float>>& d) {
    double total = 0;
    for (const auto& qt : q) {
        double best = -INFINITY;
        for (const auto& dt : d) {
            best = std::max(best, dot(qt, dt));
        }
        total += best;
    }
    return total;
}

/// Enumerates every permutation of [0, n) and returns the unique one that is
/// sorted by descending hidden score with ties in original order.
inline std::vector<std::size_t> sorted_permutation_by_enumeration(const std::vector<double>& hidden) {
    std::vector<std::size_t> perm(hidden.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::size_t> found;
    int matches = 0;
    do {
        bool ok = true;
        for (std::size_t i = 0; i + 1 < perm.size() && ok; ++i) {
            const double a = hidden[perm[i]];
            const double b = hidden[perm[i + 1]];
            ok = a > b || (a == b && perm[i] < perm[i + 1]);
        }
        if (ok) {
            found = perm;
            ++matches;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return matches == 1 ? found : std::vector<std::size_t>{};
}

/// Back-to-front sliding window over positions, sorting each window by
/// hidden score (stable). Returns the final order of original indices.
inline std::vector<std::size_t> simulate_sliding_window(const std::vector<double>& hidden, std::size_t window,
                                                        std::size_t stride, std::size_t passes) {
    std::vector<std::size_t> order(hidden.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t pass = 0; pass < passes; ++pass) {
        std::size_t end = order.size();
        while (end > 0) {
            const std::size_t start = end > window ? end - window : 0;
            std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end),
                             [&](std::size_t a, std::size_t b) { return hidden[a] > hidden[b]; });
            if (start == 0) {
                break;
            }
            end -= stride;
        }
    }
    return order;
}

}  // namespace qarank::oracle
