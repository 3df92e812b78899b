#include <gtest/gtest.h>

#include <random>

#include "qarank/corpus.hpp"
#include "qarank/errors.hpp"
#include "qarank/unicode.hpp"
#include "support.hpp"

using namespace qarank;
using qarank::test::TempDir;

namespace {

std::string words(std::size_t n, const std::string& stem = "w") {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        out += (i ? " " : "") + stem + std::to_string(i);
    }
    return out;
}

}  // namespace

TEST(ChunkDocument, SplitsIntoFixedWordWindows) {
    const auto passages = chunk_document({"doc", "Title", words(250)}, 100);
    ASSERT_EQ(passages.size(), 3u);
    EXPECT_EQ(passages[0].word_count, 100u);
    EXPECT_EQ(passages[1].word_count, 100u);
    EXPECT_EQ(passages[2].word_count, 50u);
    EXPECT_EQ(passages[2].passage_id, "doc#2");
    EXPECT_EQ(passages[2].title, "Title");
    EXPECT_EQ(passages[1].text.substr(0, 9), "w100 w101");
}

TEST(ChunkDocument, EdgeSizes) {
    EXPECT_EQ(chunk_document({"d", "", words(100)}, 100).size(), 1u);
    EXPECT_TRUE(chunk_document({"d", "", ""}, 100).empty());
    EXPECT_TRUE(chunk_document({"d", "", " \n\t "}, 100).empty());
    EXPECT_THROW(chunk_document({"d", "", "x"}, 0), ConfigError);
}

TEST(ChunkDocument, CollapsesWhitespaceRuns) {
    const auto p = chunk_document({"d", "", "  a\t\tb\n c  "}, 2);
    ASSERT_EQ(p.size(), 2u);
    EXPECT_EQ(p[0].text, "a b");
    EXPECT_EQ(p[1].text, "c");
}

TEST(ChunkDocument, PartitionProperty) {
    std::mt19937_64 rng(7);
    const char* seps[] = {" ", "  ", "\t", "\n", "  "};
    for (int trial = 0; trial < 200; ++trial) {
        const auto n = std::uniform_int_distribution<std::size_t>(0, 300)(rng);
        std::string body;
        std::vector<std::string> source;
        for (std::size_t i = 0; i < n; ++i) {
            source.push_back("t" + std::to_string(rng() % 1000));
            body += seps[rng() % 5] + source.back();
        }
        for (std::size_t w : {1u, 7u, 100u}) {
            const auto passages = chunk_document({"d", "", body}, w);
            std::vector<std::string> flat;
            for (std::size_t i = 0; i < passages.size(); ++i) {
                const auto toks = unicode::split_whitespace(passages[i].text);
                EXPECT_EQ(toks.size(), passages[i].word_count);
                if (i + 1 < passages.size()) {
                    EXPECT_EQ(toks.size(), w);
                }
                flat.insert(flat.end(), toks.begin(), toks.end());
            }
            EXPECT_EQ(flat, source);
        }
    }
}

TEST(LoadCorpus, Tsv) {
    TempDir dir;
    const auto c = load_corpus(dir.write("c.tsv", "id\ttext\ttitle\n1\tfirst passage\tA\n2\tsecond\tB\n"),
                               CorpusFormat::tsv);
    ASSERT_EQ(c.passages.size(), 2u);
    EXPECT_EQ(c.passages[0], (Passage{"1", "A", "first passage", 2}));
    EXPECT_EQ(c.passages[1].title, "B");
}

TEST(LoadCorpus, TsvErrors) {
    TempDir dir;
    EXPECT_THROW(load_corpus(dir.write("a.tsv", "id\ttext\ttitle\n1\t\tA\n"), CorpusFormat::tsv), MalformedFormat);
    EXPECT_THROW(load_corpus(dir.write("b.tsv", "1\ttext\tA\n"), CorpusFormat::tsv), MalformedFormat);
    EXPECT_THROW(load_corpus(dir.write("c.tsv", "id\ttext\ttitle\n1\tx\n"), CorpusFormat::tsv), MalformedFormat);
    EXPECT_THROW(load_corpus(dir.write("d.tsv", "id\ttext\ttitle\n1\tx\tA\n1\ty\tB\n"), CorpusFormat::tsv),
                 MalformedFormat);
    EXPECT_THROW(load_corpus(dir / "none.tsv", CorpusFormat::tsv), FileNotFound);
    try {
        load_corpus(dir.write("e.tsv", "id\ttext\ttitle\n1\tok\tA\n2\t\tB\n"), CorpusFormat::tsv);
        FAIL();
    } catch (const MalformedFormat& e) {
        EXPECT_EQ(e.location(), 3u);
    }
}

TEST(LoadCorpus, JsonlChunks) {
    TempDir dir;
    const auto c = load_corpus(dir.write("c.jsonl", "{\"doc_id\": \"doc\", \"title\": \"T\", \"body\": \"" + words(250) +
                                                        "\"}\n"),
                               CorpusFormat::jsonl, 100);
    ASSERT_EQ(c.passages.size(), 3u);
    EXPECT_EQ(c.passages[0].passage_id, "doc#0");
    EXPECT_EQ(c.passages[1].passage_id, "doc#1");
    EXPECT_EQ(c.passages[2].passage_id, "doc#2");
}

TEST(LoadCorpus, JsonlEmptyBody) {
    TempDir dir;
    EXPECT_THROW(load_corpus(dir.write("c.jsonl", "{\"doc_id\": \"d\", \"body\": \"  \"}\n"), CorpusFormat::jsonl),
                 MalformedFormat);
}

TEST(SaveCorpus, TsvRoundTrip) {
    TempDir dir;
    Corpus c;
    c.passages = chunk_document({"doc", "Title", words(25)}, 10);
    save_corpus_tsv(c, dir / "c.tsv");
    EXPECT_EQ(load_corpus(dir / "c.tsv", CorpusFormat::tsv).passages, c.passages);
}

TEST(CorpusFormatName, Parse) {
    EXPECT_EQ(parse_corpus_format("tsv"), CorpusFormat::tsv);
    EXPECT_EQ(parse_corpus_format("jsonl"), CorpusFormat::jsonl);
    EXPECT_THROW(parse_corpus_format("csv"), ConfigError);
}
