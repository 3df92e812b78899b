#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "qarank/dense.hpp"
#include "qarank/errors.hpp"
#include "support.hpp"

using namespace qarank;
using qarank::test::TempDir;

namespace {

std::vector<std::string> ids(std::size_t n, const std::string& prefix = "p") {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(prefix + std::to_string(i));
    }
    return out;
}

std::vector<float> random_floats(std::mt19937_64& rng, std::size_t n) {
    std::normal_distribution<float> dist;
    std::vector<float> out(n);
    for (auto& v : out) {
        v = dist(rng);
    }
    return out;
}

std::string f32_bytes(const std::vector<float>& values) {
    std::string out;
    for (float v : values) {
        io::put_f32(out, v);
    }
    return out;
}

}  // namespace

TEST(EmbeddingStore, LoadsRawFile) {
    TempDir dir;
    std::vector<float> v(12);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i);
    const auto store = EmbeddingStore::load(dir.write("v.f32", f32_bytes(v)), dir.write("ids.txt", "a\nb\nc\n"), 4);
    EXPECT_EQ(store.size(), 3u);
    EXPECT_EQ(store.dim(), 4u);
    EXPECT_EQ(store.row(2)[3], 11.0f);
    EXPECT_EQ(store.id(1), "b");
}

TEST(EmbeddingStore, ShapeErrors) {
    TempDir dir;
    const auto idp = dir.write("ids.txt", "a\nb\nc\n");
    EXPECT_THROW(EmbeddingStore::load(dir.write("v.f32", std::string(4 * 11, '\0')), idp, 4), ShapeMismatch);
    EXPECT_THROW(EmbeddingStore::load(dir.write("w.f32", std::string(4 * 8, '\0')), idp, 4), ShapeMismatch);
    EXPECT_THROW(EmbeddingStore(4, std::vector<float>(8), {"a", "a"}), MalformedFormat);
}

TEST(EmbeddingStore, NonFiniteRowIsReported) {
    std::vector<float> v(12, 1.0f);
    v[2 * 4 + 1] = NAN;
    try {
        EmbeddingStore(4, v, ids(3));
        FAIL();
    } catch (const NonFiniteValue& e) {
        EXPECT_EQ(e.row(), 2u);
    }
}

TEST(EmbeddingStore, ZeroVectorUnderCosine) {
    EXPECT_THROW(EmbeddingStore(2, {1, 0, 0, 0}, ids(2), Metric::cosine), ZeroVector);
    EXPECT_NO_THROW(EmbeddingStore(2, {1, 0, 0, 0}, ids(2), Metric::dot));
    const EmbeddingStore cos(2, {1, 0, 0, 1}, ids(2), Metric::cosine);
    const std::vector<float> zero{0, 0};
    EXPECT_THROW(cos.search(zero, 1), ZeroVector);
}

TEST(SearchDense, OrthonormalBasis) {
    const EmbeddingStore store(3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, ids(3));
    const std::vector<float> q{0, 1, 0};
    const auto hits = search_dense(store, q, 1);
    ASSERT_EQ(hits.size(), 1u);
    EXPECT_EQ(hits[0].row, 1u);
    EXPECT_EQ(hits[0].id, "p1");
    EXPECT_EQ(hits[0].score, 1.0);
}

TEST(SearchDense, CosineSelfSimilarity) {
    std::mt19937_64 rng(3);
    const auto v = random_floats(rng, 10 * 6);
    const EmbeddingStore store(6, v, ids(10), Metric::cosine);
    const std::vector<float> q(v.begin() + 4 * 6, v.begin() + 5 * 6);
    const auto hits = store.search(q, 3);
    EXPECT_EQ(hits[0].row, 4u);
    EXPECT_NEAR(hits[0].score, 1.0, 1e-12);
}

TEST(SearchDense, DimMismatch) {
    const EmbeddingStore store(3, {1, 0, 0}, ids(1));
    const std::vector<float> q{1, 0};
    EXPECT_THROW(store.search(q, 1), DimMismatch);
}

TEST(SearchDense, MatchesArgsortOracle) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const auto metric = trial % 2 ? Metric::cosine : Metric::dot;
        const std::size_t n = 1 + rng() % 40;
        const std::size_t dim = 1 + rng() % 8;
        auto v = random_floats(rng, n * dim);
        if (trial % 5 == 0 && n > 2) {
            std::copy(v.begin(), v.begin() + dim, v.begin() + dim);  // duplicate row: exact tie
        }
        const EmbeddingStore store(dim, v, ids(n), metric);
        const auto q = random_floats(rng, dim);
        std::vector<double> scores;
        for (std::size_t r = 0; r < n; ++r) {
            double s = oracle::dot(q, store.row(r));
            if (metric == Metric::cosine) {
                s /= std::sqrt(oracle::dot(q, q)) * std::sqrt(oracle::dot(store.row(r), store.row(r)));
            }
            scores.push_back(s);
        }
        const auto order = oracle::argsort_desc(scores);
        const auto k = 1 + rng() % (n + 2);
        const auto hits = store.search(q, k);
        ASSERT_EQ(hits.size(), std::min(k, n));
        for (std::size_t i = 0; i < hits.size(); ++i) {
            EXPECT_EQ(hits[i].row, order[i]);
            EXPECT_NEAR(hits[i].score, scores[order[i]], 1e-12);
        }
    }
}

TEST(EmbeddingStore, ManifestRoundTrip) {
    TempDir dir;
    std::mt19937_64 rng(9);
    const EmbeddingStore store(5, random_floats(rng, 7 * 5), ids(7), Metric::cosine, "dpr");
    store.save(dir / "emb");
    const auto loaded = EmbeddingStore::load_manifest(dir / "emb" / "manifest.json");
    EXPECT_EQ(loaded.size(), 7u);
    EXPECT_EQ(loaded.metric(), Metric::cosine);
    EXPECT_EQ(loaded.retriever_tag(), "dpr");
    const auto q = random_floats(rng, 5);
    EXPECT_EQ(loaded.search(q, 7), store.search(q, 7));
}

TEST(MaxSim, SingleTokenIsDot) {
    const auto q = MultiVector::from_rows({{1, 2, 3}});
    const auto d = MultiVector::from_rows({{4, -5, 6}});
    EXPECT_DOUBLE_EQ(maxsim_score(q, d), 4 - 10 + 18);
}

TEST(MaxSim, HandExample) {
    const auto q = MultiVector::from_rows({{1, 0}, {0, 1}});
    const auto d = MultiVector::from_rows({{0.5f, 0.5f}, {1, 0}});
    EXPECT_DOUBLE_EQ(maxsim_score(q, d), 1.5);
}

TEST(MaxSim, ShapeChecks) {
    EXPECT_THROW(MultiVector(2, {}), ShapeMismatch);
    EXPECT_THROW(MultiVector(2, {1, 2, 3}), ShapeMismatch);
    EXPECT_THROW(MultiVector::from_rows({{1, 2}, {3}}), DimMismatch);
    EXPECT_THROW(maxsim_score(MultiVector::from_rows({{1, 2}}), MultiVector::from_rows({{1, 2, 3}})), DimMismatch);
}

TEST(SearchMaxSim, SingleDocAlwaysReturned) {
    std::vector<MultiVectorDoc> docs{{"only", MultiVector::from_rows({{-1, -1}})}};
    const auto q = MultiVector::from_rows({{1, 1}});
    for (std::size_t k : {1u, 5u}) {
        const auto hits = search_maxsim(q, docs, k);
        ASSERT_EQ(hits.size(), 1u);
        EXPECT_EQ(hits[0].id, "only");
    }
}

TEST(SearchMaxSim, MatchesNestedLoopOracle) {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t dim = 1 + rng() % 6;
        auto rows = [&](std::size_t count) {
            std::vector<std::vector<float>> out;
            for (std::size_t i = 0; i < count; ++i) out.push_back(random_floats(rng, dim));
            return out;
        };
        const auto qrows = rows(1 + rng() % 4);
        std::vector<std::vector<std::vector<float>>> drows;
        std::vector<MultiVectorDoc> docs;
        std::vector<double> scores;
        const std::size_t n = 1 + rng() % 25;
        for (std::size_t i = 0; i < n; ++i) {
            drows.push_back(rows(1 + rng() % 5));
            docs.push_back({"d" + std::to_string(i), MultiVector::from_rows(drows.back())});
            scores.push_back(oracle::maxsim(qrows, drows.back()));
        }
        const auto order = oracle::argsort_desc(scores);
        const auto hits = search_maxsim(MultiVector::from_rows(qrows), docs, n);
        ASSERT_EQ(hits.size(), n);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_EQ(hits[i].row, order[i]);
            EXPECT_NEAR(hits[i].score, scores[order[i]], 1e-9);
        }
    }
}

TEST(MultiVectorStore, ManifestRoundTrip) {
    TempDir dir;
    std::vector<MultiVectorDoc> docs{{"a", MultiVector::from_rows({{1, 0}, {0, 1}})},
                                     {"b", MultiVector::from_rows({{0.5f, 0.5f}})}};
    MultiVectorStore(docs).save(dir / "mv");
    const auto loaded = MultiVectorStore::load_manifest(dir / "mv" / "manifest.json");
    ASSERT_EQ(loaded.size(), 2u);
    EXPECT_EQ(loaded.docs()[0].vectors.token_count(), 2u);
    const auto hits = loaded.search(MultiVector::from_rows({{1, 0}}), 2);
    EXPECT_EQ(hits[0].id, "a");
}

TEST(DenseRetrieve, AttachesPassagesByQueryIndex) {
    Corpus corpus;
    corpus.passages = {{"p0", "T0", "zero", 1}, {"p1", "T1", "one", 1}, {"p2", "T2", "two", 1}};
    const EmbeddingStore passages(2, {1, 0, 0, 1, 0.7f, 0.7f}, ids(3), Metric::dot, "dpr");
    const EmbeddingStore queries(2, {0, 1, 1, 0}, {"0", "1"});
    Dataset ds;
    ds.documents.push_back({{"q0"}, {{"one"}}, {}, std::nullopt});
    ds.documents.push_back({{"q1"}, {{"zero"}}, {}, std::nullopt});
    const auto out = retrieve_dense_for_dataset(passages, queries, corpus, ds, 2);
    EXPECT_EQ(out.retriever_tag, "dpr");
    ASSERT_EQ(out.documents[0].contexts.size(), 2u);
    EXPECT_EQ(out.documents[0].contexts[0].id, "p1");
    EXPECT_EQ(out.documents[0].contexts[0].text, "one");
    EXPECT_EQ(out.documents[1].contexts[0].id, "p0");

    const EmbeddingStore wrong_dim(3, {0, 1, 0}, {"0"});
    EXPECT_THROW(retrieve_dense_for_dataset(passages, wrong_dim, corpus, ds, 2), DimMismatch);
    const EmbeddingStore missing(2, {0, 1}, {"0"});
    EXPECT_THROW(retrieve_dense_for_dataset(passages, missing, corpus, ds, 2), InputError);
}
