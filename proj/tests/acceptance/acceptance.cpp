// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. `--write-golden` refreshes the committed end-to-end report.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <mutex>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "qarank/bm25.hpp"
#include "qarank/core_types.hpp"
#include "qarank/corpus.hpp"
#include "qarank/dense.hpp"
#include "qarank/errors.hpp"
#include "qarank/io.hpp"
#include "qarank/metrics.hpp"
#include "qarank/rerank.hpp"
#include "support.hpp"

using namespace qarank;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

bool g_write_golden = false;

/// Thrown by expect() with a description of the first mismatch.
struct Failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void expect(bool ok, const std::string& what) {
    if (!ok) {
        throw Failure(what);
    }
}

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string random_words(std::mt19937_64& rng, std::size_t vocab, std::size_t count) {
    std::uniform_int_distribution<std::size_t> pick(0, vocab - 1);
    std::string out;
    for (std::size_t i = 0; i < count; ++i) {
        if (i) out += ' ';
        out += "w" + std::to_string(pick(rng));
    }
    return out;
}

std::size_t uniform(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double uniform_real(std::mt19937_64& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// 1. BM25 index search vs brute-force scoring.
std::string bm25_oracle_equivalence() {
    std::mt19937_64 rng(1);
    const auto start = Clock::now();
    std::size_t queries = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = uniform(rng, 1, 200);
        const auto vocab = uniform(rng, 1, 50);
        Bm25Params params;
        if (trial % 2) {
            params = {uniform_real(rng, 0.0, 2.0), uniform_real(rng, 0.0, 1.0)};
        }
        Corpus corpus;
        std::vector<std::string> texts;
        for (std::size_t i = 0; i < n; ++i) {
            texts.push_back(random_words(rng, vocab, uniform(rng, 0, 30)));
            corpus.passages.push_back({"p" + std::to_string(i), "", texts.back(), 0});
        }
        const auto index = build_index(corpus, params);
        for (int q = 0; q < 20; ++q, ++queries) {
            // vocab + 3 lets some query words miss the corpus entirely.
            const auto query = random_words(rng, vocab + 3, uniform(rng, 1, 6));
            const auto k = uniform(rng, 1, n + 5);
            const auto got = index.search(query, k);
            const auto want = oracle::bm25_search(texts, query, params, k);
            const auto where = "trial " + std::to_string(trial) + " query \"" + query + "\"";
            expect(got.size() == want.size(), where + ": hit count " + std::to_string(got.size()) + " vs " +
                                                  std::to_string(want.size()));
            for (std::size_t i = 0; i < got.size(); ++i) {
                expect(got[i].id == "p" + std::to_string(want[i].ordinal),
                       where + ": rank " + std::to_string(i) + " is " + got[i].id + ", oracle p" +
                           std::to_string(want[i].ordinal));
                expect(std::abs(got[i].score - want[i].score) <= 1e-6, where + ": score differs at rank " +
                                                                           std::to_string(i));
            }
        }
    }
    const auto elapsed = seconds_since(start);
    expect(elapsed < 5.0, "took " + std::to_string(elapsed) + " s");
    return std::to_string(queries) + " queries, " + std::to_string(elapsed) + " s";
}

// 2. Hand-derived BM25 value.
std::string cherry_value() {
    Corpus corpus;
    corpus.passages.push_back({"d0", "", "apple banana", 2});
    corpus.passages.push_back({"d1", "", "apple apple cherry", 3});
    const auto hits = build_index(corpus).search("cherry", 10);
    expect(hits.size() == 1 && hits[0].id == "d1", "expected a single hit on d1");
    // idf = ln(1 + 1.5/1.5), tf = 1, |d| = 3, avgdl = 2.5, k1 = 0.9, b = 0.4
    expect(std::abs(hits[0].score - 0.668) <= 1e-3, "score " + std::to_string(hits[0].score));
    return "score " + std::to_string(hits[0].score);
}

// 3. Chunking is a partition of the source words.
std::string chunk_partition() {
    std::mt19937_64 rng(3);
    const char* separators[] = {" ", "  ", "\t", "\n", " \r\n "};
    const char* words[] = {"alpha", "béta", "γάμμα", "d", "e-f", "42", "x.y"};
    std::size_t chunks = 0;
    for (int doc_no = 0; doc_no < 1000; ++doc_no) {
        const auto count = uniform(rng, 1, 400);
        std::string body = uniform(rng, 0, 1) ? " " : "";
        std::vector<std::string> source;
        for (std::size_t i = 0; i < count; ++i) {
            source.push_back(words[uniform(rng, 0, 6)]);
            body += source.back();
            body += separators[uniform(rng, 0, 4)];
        }
        const RawDoc doc{"doc" + std::to_string(doc_no), "t", body};
        for (std::size_t w : {1, 7, 100}) {
            const auto passages = chunk_document(doc, w);
            std::vector<std::string> flat;
            for (std::size_t i = 0; i < passages.size(); ++i) {
                std::istringstream in(passages[i].text);
                std::vector<std::string> got;
                for (std::string word; in >> word;) got.push_back(word);
                const bool last = i + 1 == passages.size();
                expect(last ? (!got.empty() && got.size() <= w) : got.size() == w,
                       doc.doc_id + " w=" + std::to_string(w) + ": chunk " + std::to_string(i) + " has " +
                           std::to_string(got.size()) + " words");
                expect(passages[i].word_count == got.size(), doc.doc_id + ": word_count mismatch");
                expect(passages[i].passage_id == doc.doc_id + "#" + std::to_string(i), "passage id");
                flat.insert(flat.end(), got.begin(), got.end());
            }
            expect(flat == source, doc.doc_id + " w=" + std::to_string(w) + ": words differ");
            chunks += passages.size();
        }
    }
    return std::to_string(chunks) + " chunks";
}

std::vector<float> random_vector(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<float> d(-1.0f, 1.0f);
    std::vector<float> v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

// 4. Exact dense and MaxSim search vs full argsort.
std::string dense_maxsim_exactness() {
    std::mt19937_64 rng(4);
    double min_cos = 1, max_cos = -1;
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = uniform(rng, 1, 500);
        const auto dim = uniform(rng, 1, 64);
        const auto where = "instance " + std::to_string(trial);
        if (trial % 2 == 0) {
            const auto metric = trial % 4 == 0 ? Metric::dot : Metric::cosine;
            std::vector<float> data;
            std::vector<std::string> ids;
            std::vector<std::vector<float>> rows;
            for (std::size_t r = 0; r < n; ++r) {
                // Occasional duplicate rows force exact ties.
                rows.push_back(r > 0 && uniform(rng, 0, 9) == 0 ? rows[uniform(rng, 0, r - 1)]
                                                                 : random_vector(rng, dim));
                data.insert(data.end(), rows.back().begin(), rows.back().end());
                ids.push_back("r" + std::to_string(r));
            }
            const EmbeddingStore store(dim, data, ids, metric);
            const auto q = random_vector(rng, dim);
            std::vector<double> scores;
            for (const auto& row : rows) {
                double s = oracle::dot(q, row);
                if (metric == Metric::cosine) {
                    s /= std::sqrt(oracle::dot(q, q)) * std::sqrt(oracle::dot(row, row));
                }
                scores.push_back(s);
            }
            const auto order = oracle::argsort_desc(scores);
            const auto k = uniform(rng, 1, n);
            const auto hits = search_dense(store, q, k);
            expect(hits.size() == k, where + ": hit count");
            for (std::size_t i = 0; i < k; ++i) {
                expect(hits[i].row == order[i], where + ": rank " + std::to_string(i));
                expect(std::abs(hits[i].score - scores[order[i]]) <= 1e-9, where + ": score");
                if (metric == Metric::cosine) {
                    min_cos = std::min(min_cos, hits[i].score);
                    max_cos = std::max(max_cos, hits[i].score);
                    expect(hits[i].score >= -1 - 1e-6 && hits[i].score <= 1 + 1e-6, where + ": cosine out of range");
                }
            }
        } else {
            const auto tokens = [&] { return uniform(rng, 1, 8); };
            std::vector<std::vector<float>> q;
            for (auto t = tokens(); t > 0; --t) q.push_back(random_vector(rng, dim));
            const auto docs_n = std::min<std::size_t>(n, 200);
            std::vector<MultiVectorDoc> docs;
            std::vector<double> scores;
            for (std::size_t d = 0; d < docs_n; ++d) {
                std::vector<std::vector<float>> rows;
                for (auto t = tokens(); t > 0; --t) rows.push_back(random_vector(rng, dim));
                scores.push_back(oracle::maxsim(q, rows));
                docs.push_back({"d" + std::to_string(d), MultiVector::from_rows(rows)});
            }
            const auto order = oracle::argsort_desc(scores);
            const auto hits = search_maxsim(MultiVector::from_rows(q), docs, docs_n);
            expect(hits.size() == docs_n, where + ": hit count");
            for (std::size_t i = 0; i < docs_n; ++i) {
                expect(hits[i].row == order[i], where + ": maxsim rank " + std::to_string(i));
                expect(std::abs(hits[i].score - scores[order[i]]) <= 1e-9, where + ": maxsim score");
            }
        }
    }
    return "cosine range [" + std::to_string(min_cos) + ", " + std::to_string(max_cos) + "]";
}

Context ctx(const std::string& id, const std::string& text, double score = 0) { return {id, "", text, score, false}; }

// 5. Metric fixtures and the EM => contains => F1 > 0 chain.
std::string metric_fixtures() {
    Dataset ds;
    ds.documents.push_back({{"q1"}, {{"paris"}}, {ctx("a", "Paris is big"), ctx("b", "x"), ctx("c", "y")}, {}});
    ds.documents.push_back({{"q2"}, {{"rome"}}, {ctx("d", "x"), ctx("e", "y"), ctx("f", "in Rome")}, {}});
    const std::vector<std::size_t> ks{1, 3};
    const auto report = top_k_accuracy(ds, ks, false);
    expect(report.at(1) == 50.0 && report.at(3) == 100.0, "top-k fixture " + to_json(report).dump());

    const auto f1 = token_f1("the capital is Paris", AnswerSet{{"Paris"}});
    expect(f1.precision == 1.0 / 3.0 && f1.recall == 1.0 && f1.f1 == 0.5, "token F1 fixture");

    std::mt19937_64 rng(5);
    const char* pool[] = {"Paris", "the", "a", "capital", "city", "of", "France", "paris", "PARIS!", "an", "is",
                          "Rome", "  ", ",", "New", "York", "new-york", "Café", "cafe"};
    const auto phrase = [&] {
        std::string s;
        for (auto n = uniform(rng, 0, 4); n > 0; --n) {
            if (!s.empty()) s += ' ';
            s += pool[uniform(rng, 0, std::size(pool) - 1)];
        }
        return s;
    };
    std::size_t em_hits = 0, contains_hits = 0;
    for (int i = 0; i < 1000; ++i) {
        AnswerSet gold;
        while (gold.answers.size() < 1 + uniform(rng, 0, 2)) {
            // The chain is stated for golds that survive normalization.
            if (auto g = phrase(); !normalize_text(g).empty()) gold.answers.push_back(g);
        }
        // Half the predictions copy a gold answer with cosmetic changes.
        auto pred = uniform(rng, 0, 1) ? phrase() : "The " + gold.answers[0] + ".";
        const int em = exact_match(pred, gold);
        const auto f = token_f1(pred, gold);
        const int c = contains(pred, gold);
        const auto where = "pred \"" + pred + "\" gold \"" + gold.answers[0] + "\"";
        expect(em == 0 || c == 1, where + ": EM without contains");
        expect(c == 0 || f.f1 > 0.0, where + ": contains without F1 > 0");
        expect(em == 0 || f.f1 == 1.0, where + ": EM without F1 = 1");
        em_hits += em;
        contains_hits += c;
    }
    return std::to_string(em_hits) + " EM / " + std::to_string(contains_hits) + " contains of 1000";
}

Dataset random_dataset(std::mt19937_64& rng, std::size_t docs, std::size_t max_ctxs) {
    Dataset ds;
    for (std::size_t d = 0; d < docs; ++d) {
        Document doc;
        doc.question.text = random_words(rng, 20, uniform(rng, 1, 5));
        doc.answers.answers = {"gold" + std::to_string(uniform(rng, 0, 3))};
        const auto n = uniform(rng, 1, max_ctxs);
        for (std::size_t i = 0; i < n; ++i) {
            auto text = random_words(rng, 20, uniform(rng, 1, 12));
            if (uniform(rng, 0, 9) == 0) text += " gold" + std::to_string(uniform(rng, 0, 3));
            doc.contexts.push_back(ctx("c" + std::to_string(i), text, static_cast<double>(n - i)));
        }
        ds.documents.push_back(std::move(doc));
    }
    annotate_has_answer(ds);
    return ds;
}

// 6. Re-ranking with the has_answer oracle never lowers Top-k accuracy.
std::string oracle_dominance() {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 50; ++trial) {
        const auto ds = random_dataset(rng, uniform(rng, 1, 20), 150);
        const auto before = top_k_accuracy(ds, kDefaultTopKs, false);
        for (auto method : {RerankMethod::pointwise, RerankMethod::pairwise, RerankMethod::listwise}) {
            RerankConfig cfg;
            cfg.method = method;
            cfg.scorer = "has_answer";
            cfg.sliding = {uniform(rng, 2, 25), 1, 1};
            cfg.sliding.stride = uniform(rng, 1, cfg.sliding.window - 1);
            const auto batch = rerank_dataset(cfg, ds);
            expect(batch.failures.empty(), "unexpected re-rank failure");
            const auto after = top_k_accuracy(batch.dataset, kDefaultTopKs, true);
            for (std::size_t i = 0; i < kDefaultTopKs.size(); ++i) {
                expect(after.accuracy[i].second >= before.accuracy[i].second,
                       "dataset " + std::to_string(trial) + " " + to_string(method) + " k=" +
                           std::to_string(kDefaultTopKs[i]) + ": " + std::to_string(before.accuracy[i].second) +
                           " -> " + std::to_string(after.accuracy[i].second));
            }
        }
    }
    return "50 datasets x 3 methods";
}

/// Pointwise scorer backed by a hidden score per context id.
class HiddenScorer final : public PointwiseScorer {
  public:
    explicit HiddenScorer(std::vector<double> scores) : scores_(std::move(scores)) {}
    double score(const Question&, const Context& c) const override { return scores_.at(std::stoul(c.id)); }

  private:
    std::vector<double> scores_;
};

Document doc_with_ids(std::size_t n) {
    Document doc;
    doc.question.text = "q";
    doc.answers.answers = {"a"};
    for (std::size_t i = 0; i < n; ++i) doc.contexts.push_back(ctx(std::to_string(i), "t"));
    return doc;
}

std::vector<std::size_t> order_of(const Document& doc) {
    std::vector<std::size_t> out;
    for (const auto& c : *doc.reordered_contexts) out.push_back(std::stoul(c.id));
    return out;
}

// 7. Sliding-window orchestration properties.
std::string sliding_window() {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = uniform(rng, 1, 40);
        std::vector<double> hidden(n);
        for (auto& h : hidden) h = static_cast<double>(uniform(rng, 0, 10));
        const HiddenScorer scorer(hidden);
        const ScoreWindowScorer window(scorer);
        const SlidingWindow cfg{std::max<std::size_t>(n, 2) + uniform(rng, 0, 5), 1, 1};
        const auto order = order_of(rerank_listwise_sliding(window, doc_with_ids(n), cfg));
        expect(order == oracle::argsort_desc(hidden), "w >= n not fully sorted, n=" + std::to_string(n));
    }
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> hidden(10);
        for (auto& h : hidden) h = uniform_real(rng, 0, 1);
        const HiddenScorer scorer(hidden);
        const ScoreWindowScorer window(scorer);
        const auto order = order_of(rerank_listwise_sliding(window, doc_with_ids(10), {4, 2, 1}));
        const auto best = static_cast<std::size_t>(std::max_element(hidden.begin(), hidden.end()) - hidden.begin());
        expect(order.front() == best, "vector " + std::to_string(trial) + ": best item at rank " +
                                          std::to_string(std::find(order.begin(), order.end(), best) - order.begin()));
        expect(order == oracle::simulate_sliding_window(hidden, 4, 2, 1),
               "vector " + std::to_string(trial) + ": differs from simulation");
    }
    return "100 + 100 vectors";
}

std::multiset<std::string> id_multiset(const std::vector<Context>& list) {
    std::multiset<std::string> out;
    for (const auto& c : list) out.insert(c.id);
    return out;
}

// 8. Every re-ranker returns a permutation; malformed replies are rejected.
std::string permutation_safety() {
    std::mt19937_64 rng(8);
    std::mt19937_64 server_rng(80);
    std::mutex server_mutex;
    std::string mode = "shuffle";
    test::MockServer server([&](httplib::Server& srv) {
        srv.Post("/rerank", [&](const httplib::Request& req, httplib::Response& res) {
            std::lock_guard lock(server_mutex);
            const auto body = json::parse(req.body);
            json ids = json::array();
            for (const auto& p : body["passages"]) ids.push_back(p["id"]);
            std::vector<json> v(ids.begin(), ids.end());
            std::shuffle(v.begin(), v.end(), server_rng);
            json ranking(v);
            if (mode == "not_json") {
                res.set_content("<html>oops</html>", "text/html");
                return;
            }
            if (mode == "missing") ranking.erase(ranking.size() - 1);
            if (mode == "duplicate") ranking.back() = ranking.front();
            if (mode == "unknown") ranking.back() = "no-such-id";
            if (mode == "extra") ranking.push_back(ranking.front());
            if (mode == "wrong_type") ranking = "c0";
            if (mode == "no_field") {
                res.set_content(json{{"order", ranking}}.dump(), "application/json");
                return;
            }
            res.set_content(json{{"ranking", ranking}}.dump(), "application/json");
        });
    });

    std::size_t checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const auto ds = random_dataset(rng, 5, 30);
        for (auto method : {RerankMethod::pointwise, RerankMethod::pairwise, RerankMethod::listwise}) {
            for (const std::string scorer : {"bm25", "has_answer", "identity", "remote"}) {
                RerankConfig cfg;
                cfg.method = method;
                cfg.scorer = scorer;
                cfg.sliding = {uniform(rng, 2, 8), 1, uniform(rng, 1, 2)};
                cfg.sliding.stride = uniform(rng, 1, cfg.sliding.window - 1);
                cfg.remote.endpoint = server.url("/rerank");
                cfg.remote.retry.max_attempts = 1;
                for (std::size_t d = 0; d < ds.documents.size(); ++d) {
                    const auto out = rerank_document(cfg, ds.documents[d], d);
                    expect(out.reordered_contexts.has_value(), scorer + ": no reordered list");
                    expect(id_multiset(*out.reordered_contexts) == id_multiset(ds.documents[d].contexts),
                           to_string(method) + "/" + scorer + ": not a permutation");
                    ++checked;
                }
            }
        }
    }

    RemoteRerankConfig remote;
    remote.endpoint = server.url("/rerank");
    remote.retry.max_attempts = 1;
    const auto doc = random_dataset(rng, 1, 1).documents[0];
    auto doc3 = doc;
    doc3.contexts = {ctx("c0", "a"), ctx("c1", "b"), ctx("c2", "c")};
    for (const char* bad : {"not_json", "missing", "duplicate", "unknown", "extra", "wrong_type", "no_field"}) {
        {
            std::lock_guard lock(server_mutex);
            mode = bad;
        }
        bool raised = false;
        try {
            remote_rerank(remote, doc3, "listwise");
        } catch (const ProtocolError&) {
            raised = true;
        }
        expect(raised, std::string("malformed reply \"") + bad + "\" did not raise ProtocolError");
    }
    return std::to_string(checked) + " re-ranked documents, 7 malformed replies rejected";
}

// 9. End-to-end golden run over the bundled mini corpus.
std::string golden_end_to_end() {
    test::MockServer llm([](httplib::Server& srv) { test::mock_llm(srv); });
    const auto fixtures = test::fixture_dir() / "minicorpus";
    const auto golden = fixtures / "golden_report.json";
    const json cfg{{"config_version", 1},
                   {"corpus", {{"path", (fixtures / "corpus.tsv").string()}}},
                   {"dataset", (fixtures / "questions.jsonl").string()},
                   {"retriever", {{"n_docs", 20}, {"bm25", json::object()}}},
                   {"reranker", {{"method", "pointwise"}, {"scorer", "bm25"}}},
                   {"generator", {{"endpoint", llm.url("/v1/chat/completions")}, {"model", "mock"}, {"k", 5}}},
                   {"seed", 7}};
    std::vector<std::string> reports;
    double slowest = 0;
    for (int run = 0; run < 2; ++run) {
        test::TempDir dir;
        const auto config_path = dir.write("pipeline.json", cfg.dump(2));
        const auto start = Clock::now();
        const auto result = test::run({"pipeline", "--config", config_path.string(), "--jobs", run ? "4" : "1"});
        slowest = std::max(slowest, seconds_since(start));
        expect(result.code == 0, "pipeline exited " + std::to_string(result.code) + ": " + result.err);
        reports.push_back(io::read_file(dir / "out" / "report.json"));
    }
    expect(reports[0] == reports[1], "reports differ between runs");
    expect(slowest < 10.0, "run took " + std::to_string(slowest) + " s");
    if (g_write_golden) {
        io::write_file_atomic(golden, reports[0]);
    }
    expect(std::filesystem::exists(golden), golden.string() + " missing (run with --write-golden)");
    expect(io::read_file(golden) == reports[0], "report differs from " + golden.string());
    const auto report = json::parse(reports[0]);
    return "top-1 " + report["eval"]["retrieval"]["topk"]["1"].dump() + " -> " +
           report["eval"]["retrieval_reordered"]["topk"]["1"].dump() + ", EM " +
           report["eval"]["generation"]["em"].dump() + ", " + std::to_string(slowest) + " s";
}

// 10. Dataset round trip and QA loader line numbers.
std::string round_trip() {
    std::mt19937_64 rng(10);
    test::TempDir dir;
    std::size_t docs = 0;
    for (int trial = 0; trial < 20; ++trial) {
        auto ds = random_dataset(rng, uniform(rng, 1, 10), 20);
        for (auto& d : ds.documents) {
            d.question.text += " «ünï» \"quoted\"\t";
            d.contexts.front().title = "Title ✓";
            double score = uniform_real(rng, 0, 50);
            for (auto& c : d.contexts) {
                c.score = score;
                score -= uniform_real(rng, 0, 3);
            }
            if (uniform(rng, 0, 1)) {
                auto re = d.contexts;
                std::shuffle(re.begin(), re.end(), rng);
                d.reordered_contexts = re;
            }
        }
        const auto first = dir / ("a" + std::to_string(trial) + ".json");
        const auto second = dir / ("b" + std::to_string(trial) + ".json");
        save_dataset(ds, first);
        const auto loaded = load_dataset(first);
        expect(loaded.documents == ds.documents, "trial " + std::to_string(trial) + ": documents differ after load");
        save_dataset(loaded, second);
        expect(io::read_file(first) == io::read_file(second), "trial " + std::to_string(trial) + ": re-save differs");
        docs += ds.documents.size();
    }

    const auto qa = dir.write("qa.jsonl",
                              "{\"question\": \"a\", \"answers\": [\"x\"]}\n"
                              "\n"
                              "{\"question\": \"b\"}\n");
    std::size_t location = 0;
    std::string message;
    try {
        load_dataset_qa(qa);
    } catch (const MalformedFormat& e) {
        location = e.location();
        message = e.what();
    }
    expect(location == 3, "expected line 3, got " + std::to_string(location) + " (" + message + ")");
    const auto bad_json = dir.write("bad.jsonl", "{\"question\": \"a\", \"answers\": [\"x\"]}\n{oops\n");
    location = 0;
    try {
        load_dataset_qa(bad_json);
    } catch (const MalformedFormat& e) {
        location = e.location();
    }
    expect(location == 2, "bad JSON reported at line " + std::to_string(location));
    return std::to_string(docs) + " documents round-tripped";
}

}  // namespace

int main(int argc, char** argv) {
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--write-golden") {
            g_write_golden = true;
        }
    }
    const std::vector<std::pair<std::string, std::function<std::string()>>> criteria{
        {"1 bm25 oracle equivalence", bm25_oracle_equivalence},
        {"2 bm25 hand-derived value", cherry_value},
        {"3 chunking partition", chunk_partition},
        {"4 dense/maxsim exactness", dense_maxsim_exactness},
        {"5 metric fixtures", metric_fixtures},
        {"6 oracle rerank dominance", oracle_dominance},
        {"7 sliding window properties", sliding_window},
        {"8 permutation safety", permutation_safety},
        {"9 end-to-end golden run", golden_end_to_end},
        {"10 dataset round trip", round_trip},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        try {
            const auto detail = check();
            std::cout << "PASS " << name << " (" << detail << ")\n";
        } catch (const std::exception& e) {
            ++failed;
            std::cout << "FAIL " << name << ": " << e.what() << "\n";
        }
        std::cout.flush();
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
